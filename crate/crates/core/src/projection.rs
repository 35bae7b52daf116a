//! Conditional expectations and projection operators for the filtration generated by
//! the innovations, `F_j = sigma(eps_k : k <= j)`.
//!
//! Conditioning is partial integration: a factor at a site that is not measurable
//! with respect to the conditioning sigma-algebra is replaced by its moment under the
//! law. Half-space sigma-algebras `F^(q)_l` keep the sites with `s_q <= l`; the levels
//! `i64::MIN` and `i64::MAX` act as `-inf` and `+inf`.
//!
//! Axes are 0-based throughout.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::functional::{Functional, Monomial};
use crate::innovation::InnovationLaw;
use crate::lattice::{LatticeIndex, Rectangle};

/// Which sigma-algebra to condition on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditioningIndex {
    /// `F_j`: sites `s <= j`.
    Corner(LatticeIndex),
    /// `F^(q)_l`: sites with `s_q <= l`.
    Halfspace { axis: usize, level: i64 },
}

impl ConditioningIndex {
    pub fn halfspace(axis: usize, level: i64) -> Self {
        Self::Halfspace { axis, level }
    }

    fn measurable(&self, s: &LatticeIndex) -> bool {
        match self {
            Self::Corner(j) => s.precedes(j),
            Self::Halfspace { axis, level } => i64::from(s[*axis]) <= *level,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Corner(j) if j.dim() != dim => Err(Error::DimensionMismatch { expected: dim, found: j.dim() }),
            Self::Halfspace { axis, .. } if *axis >= dim => {
                Err(Error::InvalidArgument(format!("axis {axis} out of range for d = {dim}")))
            }
            _ => Ok(()),
        }
    }
}

/// `E(f | F)` for the sigma-algebra named by `c`.
pub fn cond_expect(f: &Functional, c: ConditioningIndex, law: &InnovationLaw) -> Result<Functional> {
    c.validate(f.dim())?;
    Ok(f.integrate_sites(law, |s| !c.measurable(s)))
}

/// `P^(q)_l f = E^(q)_l f - E^(q)_{l-1} f`.
pub fn project_line(f: &Functional, axis: usize, level: i64, law: &InnovationLaw) -> Result<Functional> {
    ConditioningIndex::halfspace(axis, level).validate(f.dim())?;
    let mut out: Vec<(Monomial, f64)> = Vec::new();
    for (mono, c) in f.monomials() {
        if !mono.iter().any(|(s, _)| i64::from(s[axis]) == level) {
            continue;
        }
        let mut coeff = c;
        let mut upper: Monomial = Vec::with_capacity(mono.len());
        let mut on_level = 1.0;
        for &(s, l) in mono {
            let x = i64::from(s[axis]);
            if x > level {
                coeff *= l.mean(law);
            } else {
                if x == level {
                    on_level *= l.mean(law);
                }
                upper.push((s, l));
            }
        }
        if coeff == 0.0 {
            continue;
        }
        let lower: Monomial = upper.iter().copied().filter(|(s, _)| i64::from(s[axis]) < level).collect();
        out.push((upper, coeff));
        out.push((lower, -coeff * on_level));
    }
    Ok(Functional::from_monomials(f.dim(), out))
}

/// `P_j = prod_q P^(q)_{j_q}`.
pub fn project_full(f: &Functional, j: &LatticeIndex, law: &InnovationLaw) -> Result<Functional> {
    if j.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: j.dim() });
    }
    let mut g = f.clone();
    for q in 0..f.dim() {
        if g.is_zero() {
            break;
        }
        g = project_line(&g, q, i64::from(j[q]), law)?;
    }
    Ok(g)
}

/// All nonzero `P_j f`. Only `j` inside the window's bounding box can contribute, and
/// the components sum to `f - E f`.
pub fn projective_decomposition(f: &Functional, law: &InnovationLaw) -> Result<BTreeMap<LatticeIndex, Functional>> {
    let mut out = BTreeMap::new();
    let Some(bbox) = f.bounding_box() else {
        return Ok(out);
    };
    for j in bbox.points() {
        let p = project_full(f, &j, law)?;
        if !p.is_zero() {
            out.insert(j, p);
        }
    }
    Ok(out)
}

/// Sum of the components of a projective decomposition.
pub fn recompose(dim: usize, parts: &BTreeMap<LatticeIndex, Functional>) -> Functional {
    parts.values().fold(Functional::zero(dim), |acc, p| &acc + p)
}

/// Largest violations of the projection-operator identities over a set of indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lemma24Report {
    /// `sup |P^(q)_l P^(q')_m f - P^(q')_m P^(q)_l f|` over `q != q'`, and the same for full projections.
    pub commutation: f64,
    /// `|<P_i f, P_j g>|` for `i != j`.
    pub orthogonality: f64,
    /// `sup |P_i P_j f|` for `i != j`.
    pub annihilation: f64,
    /// `sup |P_i P_i f - P_i f|`.
    pub idempotence: f64,
    /// `sup |E^(q)_{l-1} P^(q)_l f|`.
    pub level_annihilation: f64,
    /// Every `P_i f` depends only on sites `s <= i`.
    pub adapted: bool,
    pub pairs_checked: usize,
}

impl Lemma24Report {
    pub fn max_violation(&self) -> f64 {
        let worst = [self.commutation, self.orthogonality, self.annihilation, self.idempotence, self.level_annihilation]
            .into_iter()
            .fold(0.0, f64::max);
        if self.adapted {
            worst
        } else {
            f64::INFINITY
        }
    }

    fn merge(&mut self, other: &Self) {
        self.commutation = self.commutation.max(other.commutation);
        self.orthogonality = self.orthogonality.max(other.orthogonality);
        self.annihilation = self.annihilation.max(other.annihilation);
        self.idempotence = self.idempotence.max(other.idempotence);
        self.level_annihilation = self.level_annihilation.max(other.level_annihilation);
        self.adapted &= other.adapted;
        self.pairs_checked += other.pairs_checked;
    }
}

/// Checks commutation, orthogonality, mutual annihilation and idempotence of the
/// projections, plus the observable content of the range property, on `f, g`.
pub fn lemma24_suite(f: &Functional, g: &Functional, indices: &[LatticeIndex], law: &InnovationLaw) -> Result<Lemma24Report> {
    let zero = Functional::zero(f.dim());
    let pf: Vec<Functional> = indices.iter().map(|i| project_full(f, i, law)).collect::<Result<_>>()?;
    let pg: Vec<Functional> = indices.iter().map(|i| project_full(g, i, law)).collect::<Result<_>>()?;
    let mut report = Lemma24Report { adapted: true, ..Default::default() };

    for (a, i) in indices.iter().enumerate() {
        report.adapted &= pf[a].window().iter().all(|s| s.precedes(i));
        report.idempotence = report.idempotence.max(project_full(&pf[a], i, law)?.sup_distance(&pf[a], law)?);
        for q in 0..f.dim() {
            let line = project_line(f, q, i64::from(i[q]), law)?;
            let below = cond_expect(&line, ConditioningIndex::halfspace(q, i64::from(i[q]) - 1), law)?;
            report.level_annihilation = report.level_annihilation.max(below.sup_distance(&zero, law)?);
        }
        for (b, j) in indices.iter().enumerate() {
            for q in 0..f.dim() {
                for r in (0..f.dim()).filter(|&r| r != q) {
                    let lq = i64::from(i[q]);
                    let lr = i64::from(j[r]);
                    let qr = project_line(&project_line(f, r, lr, law)?, q, lq, law)?;
                    let rq = project_line(&project_line(f, q, lq, law)?, r, lr, law)?;
                    report.commutation = report.commutation.max(qr.sup_distance(&rq, law)?);
                }
            }
            if a == b {
                continue;
            }
            report.pairs_checked += 1;
            let ij = project_full(&pf[b], i, law)?;
            let ji = project_full(&pf[a], j, law)?;
            report.commutation = report.commutation.max(ij.sup_distance(&ji, law)?);
            report.annihilation = report.annihilation.max(ij.sup_distance(&zero, law)?);
            report.orthogonality = report.orthogonality.max(pf[a].inner_product(&pg[b], law).abs());
        }
    }
    Ok(report)
}

/// Runs [`lemma24_suite`] over several `(f, g)` pairs and keeps the worst case.
pub fn lemma24_suite_many(pairs: &[(Functional, Functional)], indices: &[LatticeIndex], law: &InnovationLaw) -> Result<Lemma24Report> {
    let mut total = Lemma24Report { adapted: true, ..Default::default() };
    for (f, g) in pairs {
        total.merge(&lemma24_suite(f, g, indices, law)?);
    }
    Ok(total)
}

/// All indices of a rectangle, for use as a suite index set.
pub fn indices_of(rect: &Rectangle) -> Vec<LatticeIndex> {
    rect.points().collect()
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

    fn same(a: &Functional, b: &Functional) -> bool {
        a.equal(b, &rad(), DEFAULT_TOL).unwrap()
    }

    #[test]
    fn halfspace_conditioning_drops_later_sites() {
        let a = 0.7;
        let f = &eps(&[0, 0]) + &eps(&[-1, 0]).scale(a);
        let e = cond_expect(&f, ConditioningIndex::halfspace(0, -1), &rad()).unwrap();
        assert!(same(&e, &eps(&[-1, 0]).scale(a)));
    }

    #[test]
    fn measurable_functional_is_fixed() {
        let f = &(&eps(&[-1, 0]) * &eps(&[0, -2])) + &Functional::indicator(idx(&[-3, -3]), 1.0);
        let e = cond_expect(&f, ConditioningIndex::Corner(idx(&[0, 0])), &rad()).unwrap();
        assert_eq!(e, f);
    }

    #[test]
    fn corner_conditioning_kills_centered_top_factor() {
        let z = &(&Functional::indicator(idx(&[-2, -2]), -1.0) * &Functional::indicator(idx(&[-1, -1]), -1.0))
            * &eps(&[0, 0]);
        let e = cond_expect(&z, ConditioningIndex::Corner(idx(&[-1, -1])), &rad()).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn line_projection_examples() {
        let law = rad();
        assert!(same(&project_line(&eps(&[0, 0]), 0, 0, &law).unwrap(), &eps(&[0, 0])));
        assert!(project_line(&eps(&[1, 0]), 0, 0, &law).unwrap().is_zero());
        let prod = &eps(&[0, 0]) * &eps(&[-1, -1]);
        assert!(same(&project_line(&prod, 0, 0, &law).unwrap(), &prod));
    }

    #[test]
    fn full_projection_examples() {
        let law = rad();
        for d in 1..=3 {
            let origin = LatticeIndex::zero(d);
            let f = Functional::value(origin);
            assert!(same(&project_full(&f, &origin, &law).unwrap(), &f));
        }
        let f = &eps(&[0, 0]) + &eps(&[-1, 0]).scale(0.5);
        assert!(same(&project_full(&f, &idx(&[0, 0]), &law).unwrap(), &eps(&[0, 0])));
    }

    #[test]
    fn decomposition_of_simple_functionals() {
        let law = rad();
        let parts = projective_decomposition(&eps(&[0]), &law).unwrap();
        assert_eq!(parts.keys().copied().collect::<Vec<_>>(), vec![idx(&[0])]);
        let parts = projective_decomposition(&(&eps(&[0]) + &eps(&[-1])), &law).unwrap();
        assert_eq!(parts.keys().copied().collect::<Vec<_>>(), vec![idx(&[-1]), idx(&[0])]);
    }

    #[test]
    fn constants_have_no_components() {
        let parts = projective_decomposition(&Functional::constant(2, 3.0), &rad()).unwrap();
        assert!(parts.is_empty());
    }

    #[test]
    fn bad_axis_is_rejected() {
        assert!(project_line(&eps(&[0]), 1, 0, &rad()).is_err());
        assert!(project_full(&eps(&[0]), &idx(&[0, 0]), &rad()).is_err());
    }
}
