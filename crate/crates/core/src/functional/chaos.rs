//! Expansion in the product basis built from per-site orthonormal polynomials.
//!
//! With `psi_0 = 1, psi_1, ..., psi_{K-1}` orthonormal under the law, every function of
//! finitely many sites has a unique expansion in the products `prod_s psi_{b_s}(eps_s)`.
//! Coefficients therefore identify functions, `||f||_2^2` is the sum of squared
//! coefficients, and `sum |c| prod sup|psi|` bounds the sup norm.

use std::collections::BTreeMap;

use super::{accumulate, FiniteRangeFunctional, Local};
use crate::error::{Error, Result};
use crate::innovation::InnovationLaw;
use crate::lattice::LatticeIndex;

const MAX_CHAOS_TERMS: usize = 1 << 22;
const DROP_REL: f64 = 1e-14;

#[derive(Clone, Debug)]
struct LocalBasis {
    /// `psi[b][j] = psi_b(values[j])`
    psi: Vec<Vec<f64>>,
    sup: Vec<f64>,
}

impl LocalBasis {
    fn new(law: &InnovationLaw) -> Self {
        let k = law.len();
        let p = law.probs();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(p).map(|((x, y), w)| x * y * w).sum::<f64>();
        let mut psi: Vec<Vec<f64>> = Vec::with_capacity(k);
        for deg in 0..k {
            let mut v: Vec<f64> = law.values().iter().map(|x| x.powi(deg as i32)).collect();
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for u in &psi {
                    let c = dot(&v, u);
                    v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            psi.push(v);
        }
        // psi_0 must be exactly 1
        psi[0] = vec![1.0; k];
        let sup = psi.iter().map(|v| v.iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect();
        Self { psi, sup }
    }

    /// Coefficients of a single-site factor in the basis.
    fn coefficients(&self, local: Local, law: &InnovationLaw) -> Vec<f64> {
        let phi: Vec<f64> = law.values().iter().map(|&v| local.eval(v)).collect();
        let mut alpha: Vec<f64> = self
            .psi
            .iter()
            .map(|psi| phi.iter().zip(psi).zip(law.probs()).map(|((a, b), w)| a * b * w).sum())
            .collect();
        let scale = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        alpha.iter_mut().for_each(|a| {
            if a.abs() <= DROP_REL * scale {
                *a = 0.0
            }
        });
        alpha
    }
}

/// Orthonormal chaos coefficients of a functional, keyed by `(site, basis index >= 1)` lists.
#[derive(Clone, Debug)]
pub struct ChaosExpansion {
    coeffs: BTreeMap<Vec<(LatticeIndex, u8)>, f64>,
    sup: Vec<f64>,
}

impl ChaosExpansion {
    pub fn new(f: &FiniteRangeFunctional, law: &InnovationLaw) -> Result<Self> {
        let basis = LocalBasis::new(law);
        let mut cache: BTreeMap<Local, Vec<f64>> = BTreeMap::new();
        let mut coeffs = BTreeMap::new();
        for (mono, c) in f.monomials() {
            let mut partial: Vec<(Vec<(LatticeIndex, u8)>, f64)> = vec![(Vec::new(), c)];
            for &(site, local) in mono {
                let alpha = cache.entry(local).or_insert_with(|| basis.coefficients(local, law));
                let mut next = Vec::with_capacity(partial.len() * 2);
                for (key, coef) in &partial {
                    for (b, &a) in alpha.iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        let mut k = key.clone();
                        if b > 0 {
                            k.push((site, b as u8));
                        }
                        next.push((k, coef * a));
                    }
                }
                if next.len() > MAX_CHAOS_TERMS {
                    return Err(Error::CapExceeded { needed: next.len() as f64, cap: MAX_CHAOS_TERMS as u64 });
                }
                partial = next;
            }
            for (k, v) in partial {
                accumulate(&mut coeffs, k, v);
            }
        }
        Ok(Self { coeffs, sup: basis.sup })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `||f||_2`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Upper bound on `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c.abs() * k.iter().map(|&(_, b)| self.sup[b as usize]).product::<f64>())
            .sum()
    }

    /// Coefficient of the constant function, i.e. `E f`.
    pub fn mean(&self) -> f64 {
        self.coeffs.get(&Vec::new()).copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(c: &[i32]) -> LatticeIndex {
        LatticeIndex::new(c).unwrap()
    }

    #[test]
    fn basis_is_orthonormal() {
        let law = InnovationLaw::new(vec![0.0, 1.0, 2.5], vec![0.2, 0.3, 0.5]).unwrap();
        let basis = LocalBasis::new(&law);
        for a in &basis.psi {
            for b in &basis.psi {
                let ip: f64 = a.iter().zip(b).zip(law.probs()).map(|((x, y), w)| x * y * w).sum();
                let target = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_and_mean_match_direct_computation() {
        let law = InnovationLaw::new(vec![-1.0, 0.5, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
        let f = &(&FiniteRangeFunctional::value(idx(&[0])) * &FiniteRangeFunctional::indicator(idx(&[1]), 0.5))
            + &FiniteRangeFunctional::power(idx(&[1]), 2).scale(-0.7);
        let chaos = ChaosExpansion::new(&f, &law).unwrap();
        assert!((chaos.l2_norm() - f.l2_norm(&law)).abs() < 1e-12);
        assert!((chaos.mean() - f.expectation(&law)).abs() < 1e-12);
    }

    #[test]
    fn different_syntax_same_function_cancels() {
        let law = InnovationLaw::rademacher();
        let a = FiniteRangeFunctional::value(idx(&[3]));
        let b = &FiniteRangeFunctional::indicator(idx(&[3]), 1.0) - &FiniteRangeFunctional::indicator(idx(&[3]), -1.0);
        let chaos = ChaosExpansion::new(&(&a - &b), &law).unwrap();
        assert!(chaos.sup_bound() < 1e-15);
    }
}
