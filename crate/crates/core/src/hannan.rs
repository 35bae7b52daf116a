//! Weak-dependence coefficients of `X_i = U_i f` for finite-range `f`.
//!
//! * Hannan terms `||P_0 U_i f||_2` and the martingale kernel `D_0 = sum_i P_0 U_i f`,
//!   with limit variance `sigma^2 = E D_0^2`.
//! * Physical dependence `delta_i = ||f(eps) - f(eps^{*i})||_2`, where `eps^{*i}`
//!   replaces the innovation at `i` by an independent copy.
//! * The projective coefficient `sum_{k >= 1} ||E(X_k | F_0)||_2 / |k|^{1/2}`.
//!
//! Every sum is finite and exact because the window is finite.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::functional::{Functional, Monomial};
use crate::innovation::InnovationLaw;
use crate::lattice::{prefix_sum, Grid, LatticeIndex, Rectangle};
use crate::projection::{cond_expect, project_full, ConditioningIndex};

/// Coefficients below this (relative to `1 + ||f||_2`) are treated as zero.
const ZERO_REL: f64 = 1e-12;

/// Per-site dependence coefficients of a functional.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DependenceProfile {
    pub hannan_terms: BTreeMap<LatticeIndex, f64>,
    pub hannan_total: f64,
    pub delta_terms: BTreeMap<LatticeIndex, f64>,
    pub delta_total: f64,
    pub wm_terms: BTreeMap<LatticeIndex, f64>,
    pub wm_total: f64,
    pub sigma2: f64,
}

/// `D_0` and `sigma^2 = ||D_0||_2^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleKernel {
    pub d0: Functional,
    pub sigma2: f64,
}

impl MartingaleKernel {
    /// `max_q sup |E^(q)_{-1} D_0|`, zero for an orthomartingale difference.
    pub fn martingale_violation(&self, law: &InnovationLaw) -> Result<f64> {
        let zero = Functional::zero(self.d0.dim());
        let mut worst: f64 = 0.0;
        for q in 0..self.d0.dim() {
            let e = cond_expect(&self.d0, ConditioningIndex::halfspace(q, -1), law)?;
            worst = worst.max(e.sup_distance(&zero, law)?);
        }
        Ok(worst)
    }

    /// `D_0` depends only on sites `s <= 0`.
    pub fn is_adapted(&self) -> bool {
        let origin = LatticeIndex::zero(self.d0.dim());
        self.d0.window().iter().all(|s| s.precedes(&origin))
    }
}

/// Fails unless `|E f| <= 1e-12 (1 + ||f||_2)`.
pub fn ensure_centered(f: &Functional, law: &InnovationLaw) -> Result<()> {
    let mean = f.expectation(law);
    if mean.abs() > ZERO_REL * (1.0 + f.l2_norm(law)) {
        return Err(Error::NotCentered { mean });
    }
    Ok(())
}

fn zero_threshold(f: &Functional, law: &InnovationLaw) -> f64 {
    ZERO_REL * (1.0 + f.l2_norm(law))
}

/// Shifts `i` for which `P_0 U_i f` can be nonzero: `window + i` must meet every
/// hyperplane `{s_q = 0}`, so `i_q` ranges over `[-max_q, -min_q]`.
pub fn hannan_support(f: &Functional) -> Option<Rectangle> {
    let bbox = f.bounding_box()?;
    Some(Rectangle::new(-bbox.hi(), -bbox.lo()).expect("reflected box"))
}

/// `i -> P_0 U_i f` over the support, zero components dropped.
pub fn hannan_components(f: &Functional, law: &InnovationLaw) -> Result<BTreeMap<LatticeIndex, Functional>> {
    let origin = LatticeIndex::zero(f.dim());
    let mut out = BTreeMap::new();
    if let Some(support) = hannan_support(f) {
        for i in support.points() {
            let p = project_full(&f.shift(i), &origin, law)?;
            if !p.is_zero() {
                out.insert(i, p);
            }
        }
    }
    Ok(out)
}

/// Hannan terms `||P_0 U_i f||_2` and their total.
pub fn hannan_profile(f: &Functional, law: &InnovationLaw) -> Result<DependenceProfile> {
    ensure_centered(f, law)?;
    let tiny = zero_threshold(f, law);
    let mut profile = DependenceProfile::default();
    for (i, p) in hannan_components(f, law)? {
        let norm = p.l2_norm(law);
        if norm > tiny {
            profile.hannan_terms.insert(i, norm);
        }
    }
    profile.hannan_total = profile.hannan_terms.values().sum();
    Ok(profile)
}

/// `D_0 = sum_i P_0 U_i f` and `sigma^2 = E D_0^2`.
pub fn martingale_kernel(f: &Functional, law: &InnovationLaw) -> Result<MartingaleKernel> {
    ensure_centered(f, law)?;
    let d0 = hannan_components(f, law)?.values().fold(Functional::zero(f.dim()), |acc, p| &acc + p);
    let sigma2 = d0.inner_product(&d0, law).max(0.0);
    Ok(MartingaleKernel { d0, sigma2 })
}

/// `delta_i^2 = E (f(eps) - f(eps^{*i}))^2`, computed exactly.
///
/// Writing `f = sum_t c_t m_t`, coupling gives
/// `delta_i^2 = 2 sum_{t,u} c_t c_u Cov(phi_t, phi_u)_i prod_{s != i} E[phi_t phi_u]_s`,
/// where `phi_t` is the factor of `m_t` at a site (1 if absent). Only monomials
/// that touch `i` contribute.
pub fn delta_at(f: &Functional, i: &LatticeIndex, law: &InnovationLaw) -> f64 {
    let touching: Vec<(&Monomial, f64)> = f.monomials().filter(|(m, _)| m.iter().any(|(s, _)| s == i)).collect();
    let mut total = 0.0;
    for (a, ca) in &touching {
        for (b, cb) in &touching {
            total += ca * cb * coupled_covariance(a, b, i, law);
        }
    }
    (2.0 * total).max(0.0).sqrt()
}

fn coupled_covariance(a: &Monomial, b: &Monomial, i: &LatticeIndex, law: &InnovationLaw) -> f64 {
    let split = |m: &Monomial| {
        let at = m.iter().find(|(s, _)| s == i).map(|(_, l)| *l);
        let rest: Monomial = m.iter().copied().filter(|(s, _)| s != i).collect();
        (at, rest)
    };
    let (la, ra) = split(a);
    let (lb, rb) = split(b);
    let fa = Functional::from_monomials(i.dim(), [(ra, 1.0)]);
    let fb = Functional::from_monomials(i.dim(), [(rb, 1.0)]);
    let rest = fa.inner_product(&fb, law);
    if rest == 0.0 {
        return 0.0;
    }
    let site = |l: Option<crate::functional::Local>| l.map_or_else(|| Functional::constant(i.dim(), 1.0), |l| Functional::from_monomials(i.dim(), [(vec![(*i, l)], 1.0)]));
    let (ga, gb) = (site(la), site(lb));
    let cov = ga.inner_product(&gb, law) - ga.expectation(law) * gb.expectation(law);
    cov * rest
}

/// Physical dependence terms over the window (zero elsewhere) and their total.
pub fn physical_dependence(f: &Functional, law: &InnovationLaw) -> DependenceProfile {
    let mut profile = DependenceProfile::default();
    let tiny = zero_threshold(f, law);
    for i in f.window() {
        let delta = delta_at(f, &i, law);
        if delta > tiny {
            profile.delta_terms.insert(i, delta);
        }
    }
    profile.delta_total = profile.delta_terms.values().sum();
    profile
}

/// Terms `||E(U_k f | F_0)||_2 / |k|^{1/2}` for `k >= 1` and their total.
///
/// `E(U_k f | F_0)` vanishes once `window + k` has no site `<= 0`, so only
/// `k_q <= -min_q` contributes.
pub fn wm_coefficient(f: &Functional, law: &InnovationLaw) -> Result<DependenceProfile> {
    ensure_centered(f, law)?;
    let mut profile = DependenceProfile::default();
    let d = f.dim();
    let Some(bbox) = f.bounding_box() else {
        return Ok(profile);
    };
    let hi: Vec<i32> = (0..d).map(|q| -bbox.lo()[q]).collect();
    if hi.iter().any(|&h| h < 1) {
        return Ok(profile);
    }
    let tiny = zero_threshold(f, law);
    let origin = LatticeIndex::zero(d);
    let support = Rectangle::from_extent(LatticeIndex::new(&hi)?)?;
    for k in support.points() {
        let e = cond_expect(&f.shift(k), ConditioningIndex::Corner(origin), law)?;
        let norm = e.l2_norm(law);
        if norm > tiny {
            profile.wm_terms.insert(k, norm / k.volume().sqrt());
        }
    }
    profile.wm_total = profile.wm_terms.values().sum();
    Ok(profile)
}

/// Hannan, physical dependence and projective coefficients together with `sigma^2`.
pub fn full_profile(f: &Functional, law: &InnovationLaw) -> Result<DependenceProfile> {
    let hannan = hannan_profile(f, law)?;
    let delta = physical_dependence(f, law);
    let wm = wm_coefficient(f, law)?;
    let kernel = martingale_kernel(f, law)?;
    Ok(DependenceProfile {
        hannan_terms: hannan.hannan_terms,
        hannan_total: hannan.hannan_total,
        delta_terms: delta.delta_terms,
        delta_total: delta.delta_total,
        wm_terms: wm.wm_terms,
        wm_total: wm.wm_total,
        sigma2: kernel.sigma2,
    })
}

/// Both sides of `sum_n |n|^{-1/2} (sum_{k >= n} a_k^2)^{1/2} >= 2^{-d} sum_k a_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma63Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the inequality for a nonnegative array over `[1, N]`.
pub fn lemma63_inequality(a: &Grid) -> Result<Lemma63Outcome> {
    if let Some((position, &value)) = a.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeEntry { position, value });
    }
    let rect = *a.rect();
    let d = rect.dim();
    // suffix sums of a^2 via a prefix sum over the reflected array
    let hi = rect.hi();
    let lo = rect.lo();
    let reflect = |i: LatticeIndex| lo + hi - i;
    let squares = Grid::from_fn(rect, |i| a.get(&reflect(i)).unwrap().powi(2));
    let tails = prefix_sum(&squares);
    let lhs: f64 = rect
        .points()
        .map(|n| {
            let tail = tails.at(&reflect(n)).unwrap().max(0.0);
            tail.sqrt() / n.volume().sqrt()
        })
        .sum();
    let rhs = a.values().iter().sum::<f64>() / 2f64.powi(d as i32);
    let holds = lhs >= rhs - 1e-12 * (1.0 + rhs);
    Ok(Lemma63Outcome { lhs, rhs, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::DEFAULT_TOL;

    fn idx(c: &[i32]) -> LatticeIndex {
        LatticeIndex::new(c).unwrap()
    }

    fn eps(c: &[i32]) -> Functional {
        Functional::value(idx(c))
    }

    fn rad() -> InnovationLaw {
        InnovationLaw::rademacher()
    }

    #[test]
    fn linear_hannan_terms() {
        let a = -0.3;
        let f = &eps(&[0]) + &eps(&[-1]).scale(a);
        let p = hannan_profile(&f, &rad()).unwrap();
        assert_eq!(p.hannan_terms.len(), 2);
        assert!((p.hannan_terms[&idx(&[0])] - 1.0).abs() < 1e-15);
        assert!((p.hannan_terms[&idx(&[1])] - a.abs()).abs() < 1e-15);
        assert!((p.hannan_total - 1.3).abs() < 1e-15);
    }

    #[test]
    fn identity_functional() {
        for d in 1..=3 {
            let f = Functional::value(LatticeIndex::zero(d));
            let p = hannan_profile(&f, &rad()).unwrap();
            assert_eq!(p.hannan_terms.len(), 1);
            assert_eq!(p.hannan_terms[&LatticeIndex::zero(d)], 1.0);
            let k = martingale_kernel(&f, &rad()).unwrap();
            assert_eq!(k.sigma2, 1.0);
            assert!(k.d0.equal(&f, &rad(), DEFAULT_TOL).unwrap());
        }
    }

    #[test]
    fn uncentered_input_is_rejected() {
        let f = Functional::indicator(idx(&[0]), 1.0);
        let err = hannan_profile(&f, &rad()).unwrap_err();
        assert!(err.to_string().contains("functional must be centered"));
        assert!(martingale_kernel(&f, &rad()).is_err());
    }

    #[test]
    fn linear_kernels() {
        let a = 0.5;
        let f = &eps(&[0]) + &eps(&[-1]).scale(a);
        let k = martingale_kernel(&f, &rad()).unwrap();
        assert!(k.d0.equal(&eps(&[0]).scale(1.0 + a), &rad(), DEFAULT_TOL).unwrap());
        assert!((k.sigma2 - 2.25).abs() < 1e-14);

        let f2 = &eps(&[0, 0]) + &eps(&[-1, 0]).scale(a);
        let k2 = martingale_kernel(&f2, &rad()).unwrap();
        assert!(k2.d0.equal(&eps(&[0, 0]).scale(1.0 + a), &rad(), DEFAULT_TOL).unwrap());
        assert!((k2.sigma2 - 2.25).abs() < 1e-14);
        assert!(k2.is_adapted());
        assert!(k2.martingale_violation(&rad()).unwrap() <= 1e-12);
    }

    #[test]
    fn delta_examples() {
        let law = rad();
        let p = physical_dependence(&eps(&[0]), &law);
        assert_eq!(p.delta_terms.len(), 1);
        assert!((p.delta_terms[&idx(&[0])] - 2f64.sqrt()).abs() < 1e-15);
        let a = 0.4;
        let f = &eps(&[0]) + &eps(&[-1]).scale(a);
        assert!((delta_at(&f, &idx(&[-1]), &law) - a * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(delta_at(&f, &idx(&[5]), &law), 0.0);
    }

    #[test]
    fn wm_examples() {
        let law = rad();
        assert_eq!(wm_coefficient(&eps(&[0]), &law).unwrap().wm_total, 0.0);
        let a = 0.6;
        let f = &eps(&[0]) + &eps(&[-1]).scale(a);
        let p = wm_coefficient(&f, &law).unwrap();
        assert_eq!(p.wm_terms.len(), 1);
        assert!((p.wm_terms[&idx(&[1])] - a).abs() < 1e-15);
    }

    #[test]
    fn lemma63_examples() {
        for d in 1..=3 {
            let rect = Rectangle::from_extent(LatticeIndex::splat(d, 3)).unwrap();
            let spike = Grid::from_fn(rect, |i| if i == LatticeIndex::ones(d) { 1.0 } else { 0.0 });
            let out = lemma63_inequality(&spike).unwrap();
            assert!(out.lhs >= 1.0 - 1e-15);
            assert_eq!(out.rhs, 1.0 / 2f64.powi(d as i32));
            assert!(out.holds);

            let zero = Grid::zeros(rect);
            let out = lemma63_inequality(&zero).unwrap();
            assert_eq!((out.lhs, out.rhs, out.holds), (0.0, 0.0, true));
        }
        let rect = Rectangle::from_extent(idx(&[2])).unwrap();
        let neg = Grid::from_values(rect, vec![1.0, -0.5]).unwrap();
        assert!(matches!(lemma63_inequality(&neg), Err(Error::NegativeEntry { position: 1, .. })));
    }
}
