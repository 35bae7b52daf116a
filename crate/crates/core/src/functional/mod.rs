//! Finite-range functionals of the innovation field and their exact L² geometry.
//!
//! A functional is stored as a linear combination of monomials. A monomial is a
//! product of single-site factors, one per site, each either a power `eps_s^k`
//! or an indicator `1{eps_s = v}`. Like monomials are merged on construction,
//! so coefficients that cancel disappear. Two functionals with different term
//! lists can still be equal as functions; [`FiniteRangeFunctional::equal`]
//! compares them as value tables.
//!
//! Expectations and inner products are exact: sites are independent, so the
//! expectation of a monomial is the product of single-site moments.

mod chaos;
mod random;
mod stencil;

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::innovation::{advance, check_cap, Configuration, InnovationLaw};
use crate::lattice::{LatticeIndex, Rectangle};

pub use chaos::ChaosExpansion;
pub use random::{random_centered_functional, random_functional, RandomShape};
pub(crate) use stencil::Stencil;

/// Default tolerance for table equality.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Windows with at most this many configurations are compared entry by entry;
/// larger ones fall back to a rigorous upper bound from the chaos expansion.
const EXACT_SUP_LIMIT: f64 = 4096.0;

const CANCEL_ULPS: f64 = 8.0;

/// What a factor computes from the innovation at its site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorKind {
    /// `eps_s`
    Value,
    /// `1{eps_s = target}`
    Indicator(f64),
    /// `eps_s^k`
    Power(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor {
    pub site: LatticeIndex,
    pub kind: FactorKind,
}

impl Factor {
    pub fn value(site: LatticeIndex) -> Self {
        Self { site, kind: FactorKind::Value }
    }

    pub fn indicator(site: LatticeIndex, target: f64) -> Self {
        Self { site, kind: FactorKind::Indicator(target) }
    }

    pub fn power(site: LatticeIndex, k: u32) -> Self {
        Self { site, kind: FactorKind::Power(k) }
    }
}

/// `coeff * prod factors`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

/// Canonical single-site factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Local {
    Power(u32),
    Indicator(OrderedFloat<f64>),
}

impl Local {
    fn indicator(t: f64) -> Self {
        // fold -0.0 into 0.0 so both compare equal as keys
        Local::Indicator(OrderedFloat(if t == 0.0 { 0.0 } else { t }))
    }

    #[inline]
    pub(crate) fn eval(self, v: f64) -> f64 {
        match self {
            Local::Power(k) => v.powi(k as i32),
            Local::Indicator(t) => {
                if v == t.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn mean(self, law: &InnovationLaw) -> f64 {
        match self {
            Local::Power(k) => law.moment(k),
            Local::Indicator(t) => law.prob_of(t.0),
        }
    }

    /// Product of two factors at the same site, as `scalar * factor`; `None` is the zero function.
    fn times(self, other: Local) -> Option<(f64, Local)> {
        match (self, other) {
            (Local::Power(a), Local::Power(b)) => Some((1.0, Local::Power(a + b))),
            (Local::Indicator(t), Local::Power(k)) | (Local::Power(k), Local::Indicator(t)) => {
                let s = t.0.powi(k as i32);
                (s != 0.0).then_some((s, Local::Indicator(t)))
            }
            (Local::Indicator(t), Local::Indicator(u)) => (t == u).then_some((1.0, Local::Indicator(t))),
        }
    }
}

/// Sorted by site; one factor per site. The empty monomial is the constant 1.
pub(crate) type Monomial = Vec<(LatticeIndex, Local)>;

/// Product of two monomials as `scalar * monomial`, or `None` when it vanishes identically.
fn monomial_product(a: &Monomial, b: &Monomial) -> Option<(f64, Monomial)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut scalar = 1.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let (s, local) = a[i].1.times(b[j].1)?;
                scalar *= s;
                out.push((a[i].0, local));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((scalar, out))
}

/// `E[a * b]` for two monomials, without materializing the product.
fn monomial_cross_moment(a: &Monomial, b: &Monomial, law: &InnovationLaw) -> f64 {
    let mut acc = 1.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let m = if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            i += 1;
            a[i - 1].1.mean(law)
        } else if i >= a.len() || b[j].0 < a[i].0 {
            j += 1;
            b[j - 1].1.mean(law)
        } else {
            let m = match a[i].1.times(b[j].1) {
                Some((s, local)) => s * local.mean(law),
                None => 0.0,
            };
            i += 1;
            j += 1;
            m
        };
        acc *= m;
        if acc == 0.0 {
            return 0.0;
        }
    }
    acc
}

pub(crate) fn accumulate<K: Ord>(map: &mut BTreeMap<K, f64>, key: K, c: f64) {
    if c == 0.0 {
        return;
    }
    match map.entry(key) {
        Entry::Vacant(e) => {
            e.insert(c);
        }
        Entry::Occupied(mut e) => {
            let old = *e.get();
            let new = old + c;
            if new.abs() <= CANCEL_ULPS * f64::EPSILON * old.abs().max(c.abs()) {
                e.remove();
            } else {
                *e.get_mut() = new;
            }
        }
    }
}

/// A real function of finitely many innovations, closed under shift, sums and products.
#[derive(Clone, PartialEq)]
pub struct FiniteRangeFunctional {
    dim: usize,
    terms: BTreeMap<Monomial, f64>,
}

pub type Functional = FiniteRangeFunctional;

impl FiniteRangeFunctional {
    /// The zero functional (empty window).
    pub fn zero(dim: usize) -> Self {
        assert!((1..=crate::lattice::MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut f = Self::zero(dim);
        accumulate(&mut f.terms, Vec::new(), c);
        f
    }

    /// `eps_site`.
    pub fn value(site: LatticeIndex) -> Self {
        Self::single(site, Local::Power(1))
    }

    /// `1{eps_site = target}`.
    pub fn indicator(site: LatticeIndex, target: f64) -> Self {
        Self::single(site, Local::indicator(target))
    }

    /// `eps_site^k`.
    pub fn power(site: LatticeIndex, k: u32) -> Self {
        if k == 0 {
            return Self::constant(site.dim(), 1.0);
        }
        Self::single(site, Local::Power(k))
    }

    fn single(site: LatticeIndex, local: Local) -> Self {
        let mut f = Self::zero(site.dim());
        f.terms.insert(vec![(site, local)], 1.0);
        f
    }

    /// `sum coeff * prod factors` over the given terms.
    pub fn from_terms(dim: usize, terms: &[Term]) -> Result<Self> {
        if !(1..=crate::lattice::MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut out = Self::zero(dim);
        for term in terms {
            let mut mono = Self::constant(dim, term.coeff);
            for factor in &term.factors {
                if factor.site.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: factor.site.dim() });
                }
                let g = match factor.kind {
                    FactorKind::Value => Self::value(factor.site),
                    FactorKind::Indicator(t) => Self::indicator(factor.site, t),
                    FactorKind::Power(k) => Self::power(factor.site, k),
                };
                mono = &mono * &g;
            }
            out = &out + &mono;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Canonical term list: one factor per site, like terms merged.
    pub fn terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(mono, &coeff)| Term {
                coeff,
                factors: mono
                    .iter()
                    .map(|&(site, local)| Factor {
                        site,
                        kind: match local {
                            Local::Power(1) => FactorKind::Value,
                            Local::Power(k) => FactorKind::Power(k),
                            Local::Indicator(t) => FactorKind::Indicator(t.0),
                        },
                    })
                    .collect(),
            })
            .collect()
    }

    pub(crate) fn monomials(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub(crate) fn from_monomials(dim: usize, items: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        let mut f = Self::zero(dim);
        for (m, c) in items {
            accumulate(&mut f.terms, m, c);
        }
        f
    }

    /// Sites the functional depends on, sorted.
    pub fn window(&self) -> Vec<LatticeIndex> {
        let set: BTreeSet<LatticeIndex> = self.terms.keys().flat_map(|m| m.iter().map(|(s, _)| *s)).collect();
        set.into_iter().collect()
    }

    /// Smallest rectangle containing the window, `None` for constants.
    pub fn bounding_box(&self) -> Option<Rectangle> {
        let window = self.window();
        let first = *window.first()?;
        let (lo, hi) = window.iter().fold((first, first), |(lo, hi), s| (lo.meet(s), hi.join(s)));
        Some(Rectangle::new(lo, hi).expect("bounding box is well formed"))
    }

    /// Coordinate range of the window along `axis`.
    pub fn axis_span(&self, axis: usize) -> Option<(i32, i32)> {
        self.bounding_box().map(|b| (b.lo()[axis], b.hi()[axis]))
    }

    pub fn scale(&self, lambda: f64) -> Self {
        Self::from_monomials(self.dim, self.terms.iter().map(|(m, &c)| (m.clone(), c * lambda)))
    }

    /// `U_i f = f o T_i`: every site `s` becomes `s + i`.
    pub fn shift(&self, i: LatticeIndex) -> Self {
        assert_eq!(i.dim(), self.dim, "dimension mismatch");
        // translation preserves the lexicographic order of sites
        let terms = self
            .terms
            .iter()
            .map(|(m, &c)| (m.iter().map(|&(s, l)| (s + i, l)).collect::<Monomial>(), c))
            .collect();
        Self { dim: self.dim, terms }
    }

    /// Relabels sites through `map`, which must be injective and may change the dimension.
    pub fn map_sites(&self, dim: usize, map: impl Fn(LatticeIndex) -> LatticeIndex) -> Self {
        Self::from_monomials(
            dim,
            self.terms.iter().map(|(m, &c)| {
                let mut mono: Monomial = m.iter().map(|&(s, l)| (map(s), l)).collect();
                mono.sort_by(|a, b| a.0.cmp(&b.0));
                (mono, c)
            }),
        )
    }

    /// Averages out, under `law`, every site for which `integrate` holds.
    ///
    /// Exact: the factors at integrated sites are replaced termwise by their moments.
    pub fn integrate_sites(&self, law: &InnovationLaw, integrate: impl Fn(&LatticeIndex) -> bool) -> Self {
        Self::from_monomials(
            self.dim,
            self.terms.iter().map(|(m, &c)| {
                let mut coeff = c;
                let mut kept = Monomial::with_capacity(m.len());
                for &(s, l) in m {
                    if integrate(&s) {
                        coeff *= l.mean(law);
                    } else {
                        kept.push((s, l));
                    }
                }
                (kept, coeff)
            }),
        )
    }

    /// Value on a configuration that assigns every window site.
    pub fn evaluate(&self, c: &Configuration) -> Result<f64> {
        self.evaluate_with(|s| c.get(s))
    }

    pub fn evaluate_with(&self, lookup: impl Fn(&LatticeIndex) -> Option<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (m, &c) in &self.terms {
            let mut prod = c;
            for (s, l) in m {
                let v = lookup(s).ok_or_else(|| Error::MissingSite(s.to_string()))?;
                prod *= l.eval(v);
            }
            total += prod;
        }
        Ok(total)
    }

    /// `E f`.
    pub fn expectation(&self, law: &InnovationLaw) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.iter().map(|(_, l)| l.mean(law)).product::<f64>()).sum()
    }

    /// `E[f g]`.
    pub fn inner_product(&self, other: &Self, law: &InnovationLaw) -> f64 {
        let mut total = 0.0;
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                total += ca * cb * monomial_cross_moment(a, b, law);
            }
        }
        total
    }

    /// `||f||_2`.
    pub fn l2_norm(&self, law: &InnovationLaw) -> f64 {
        self.inner_product(self, law).max(0.0).sqrt()
    }

    /// Value table on the sorted window.
    pub fn materialize(&self, law: &InnovationLaw, cap: u64) -> Result<ValueTable> {
        let sites = self.window();
        check_cap(law.len(), sites.len(), cap)?;
        let stencil = Stencil::on_sites(self, &sites);
        let entries = table_values(&stencil, sites.len(), law);
        Ok(ValueTable { sites, entries })
    }

    /// Largest absolute difference between the two value tables.
    ///
    /// When the joint window is small both tables are evaluated and compared entry by
    /// entry; otherwise this is an upper bound obtained from the orthonormal chaos
    /// expansion of `self - other`.
    pub fn sup_distance(&self, other: &Self, law: &InnovationLaw) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let sites: Vec<LatticeIndex> = self.window().into_iter().chain(other.window()).collect::<BTreeSet<_>>().into_iter().collect();
        if (law.len() as f64).powi(sites.len() as i32) <= EXACT_SUP_LIMIT {
            let a = table_values(&Stencil::on_sites(self, &sites), sites.len(), law);
            let b = table_values(&Stencil::on_sites(other, &sites), sites.len(), law);
            return Ok(a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs())));
        }
        let diff = self - other;
        if diff.is_zero() {
            return Ok(0.0);
        }
        Ok(ChaosExpansion::new(&diff, law)?.sup_bound())
    }

    /// Table equality within `tol`.
    pub fn equal(&self, other: &Self, law: &InnovationLaw, tol: f64) -> Result<bool> {
        Ok(self.sup_distance(other, law)? <= tol)
    }
}

fn table_values(stencil: &Stencil, n_sites: usize, law: &InnovationLaw) -> Vec<f64> {
    let mut digits = vec![0usize; n_sites];
    let mut values = vec![law.values()[0]; n_sites];
    let mut out = Vec::new();
    loop {
        for (v, &k) in values.iter_mut().zip(&digits) {
            *v = law.values()[k];
        }
        out.push(stencil.eval_at(&values, 0));
        if !advance(&mut digits, law.len()) {
            break;
        }
    }
    out
}

/// Values of a functional on every configuration of its window
/// (law alphabet order, last site varying fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    sites: Vec<LatticeIndex>,
    entries: Vec<f64>,
}

impl ValueTable {
    pub fn sites(&self) -> &[LatticeIndex] {
        &self.sites
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entry for a configuration assigning every table site.
    pub fn get(&self, c: &Configuration, law: &InnovationLaw) -> Result<f64> {
        let mut k = 0;
        for s in &self.sites {
            let v = c.get(s).ok_or_else(|| Error::MissingSite(s.to_string()))?;
            let digit = law
                .values()
                .iter()
                .position(|&x| x == v)
                .ok_or_else(|| Error::InvalidArgument(format!("value {v} is not in the alphabet")))?;
            k = k * law.len() + digit;
        }
        Ok(self.entries[k])
    }
}

impl Add for &FiniteRangeFunctional {
    type Output = FiniteRangeFunctional;
    fn add(self, rhs: &FiniteRangeFunctional) -> FiniteRangeFunctional {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            accumulate(&mut out.terms, m.clone(), c);
        }
        out
    }
}

impl Sub for &FiniteRangeFunctional {
    type Output = FiniteRangeFunctional;
    fn sub(self, rhs: &FiniteRangeFunctional) -> FiniteRangeFunctional {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            accumulate(&mut out.terms, m.clone(), -c);
        }
        out
    }
}

impl Mul for &FiniteRangeFunctional {
    type Output = FiniteRangeFunctional;
    fn mul(self, rhs: &FiniteRangeFunctional) -> FiniteRangeFunctional {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = FiniteRangeFunctional::zero(self.dim);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                if let Some((s, m)) = monomial_product(a, b) {
                    accumulate(&mut out.terms, m, ca * cb * s);
                }
            }
        }
        out
    }
}

impl Mul<f64> for &FiniteRangeFunctional {
    type Output = FiniteRangeFunctional;
    fn mul(self, lambda: f64) -> FiniteRangeFunctional {
        self.scale(lambda)
    }
}

impl Neg for &FiniteRangeFunctional {
    type Output = FiniteRangeFunctional;
    fn neg(self) -> FiniteRangeFunctional {
        self.scale(-1.0)
    }
}

impl fmt::Display for FiniteRangeFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (s, l) in m {
                match l {
                    Local::Power(1) => write!(f, "*e{s}")?,
                    Local::Power(p) => write!(f, "*e{s}^{p}")?,
                    Local::Indicator(t) => write!(f, "*1[e{s}={}]", t.0)?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FiniteRangeFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional[d={}]({self})", self.dim)
    }
}
