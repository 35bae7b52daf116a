use rand::Rng;

use super::{Factor, FiniteRangeFunctional, Term};
use crate::innovation::InnovationLaw;
use crate::lattice::LatticeIndex;

/// Size parameters for randomly generated functionals.
#[derive(Clone, Copy, Debug)]
pub struct RandomShape {
    pub dim: usize,
    /// Sites are drawn from `[-radius, radius]^d`.
    pub radius: i32,
    pub max_terms: usize,
    pub max_factors: usize,
}

impl RandomShape {
    pub fn new(dim: usize, radius: i32) -> Self {
        Self { dim, radius, max_terms: 4, max_factors: 3 }
    }
}

/// A random combination of products of values, indicators and small powers.
pub fn random_functional<R: Rng + ?Sized>(rng: &mut R, shape: &RandomShape, law: &InnovationLaw) -> FiniteRangeFunctional {
    let n_terms = rng.random_range(1..=shape.max_terms.max(1));
    let terms: Vec<Term> = (0..n_terms)
        .map(|_| {
            let n_factors = rng.random_range(1..=shape.max_factors.max(1));
            let factors = (0..n_factors)
                .map(|_| {
                    let coords: Vec<i32> = (0..shape.dim).map(|_| rng.random_range(-shape.radius..=shape.radius)).collect();
                    let site = LatticeIndex::new(&coords).expect("valid dimension");
                    match rng.random_range(0..20) {
                        0..=11 => Factor::value(site),
                        12..=16 => Factor::indicator(site, law.values()[rng.random_range(0..law.len())]),
                        _ => Factor::power(site, rng.random_range(2..=3)),
                    }
                })
                .collect();
            Term { coeff: rng.random_range(-1.0..1.0), factors }
        })
        .collect();
    FiniteRangeFunctional::from_terms(shape.dim, &terms).expect("consistent dimensions")
}

/// `f - E f` for a random `f`.
pub fn random_centered_functional<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &RandomShape,
    law: &InnovationLaw,
) -> FiniteRangeFunctional {
    let f = random_functional(rng, shape, law);
    let mean = f.expectation(law);
    &f - &FiniteRangeFunctional::constant(shape.dim, mean)
}
