mod common;

use common::*;
use orthofield::functional::{random_centered_functional, RandomShape};
use orthofield::hannan::*;
use orthofield::lattice::{Grid, Rectangle};
use orthofield::projection::{cond_expect, project_full, ConditioningIndex};
use orthofield::{Functional, InnovationLaw, LatticeIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn centered(seed: u64, dim: usize, law: &InnovationLaw) -> Functional {
    random_centered_functional(&mut ChaCha8Rng::seed_from_u64(seed), &RandomShape::new(dim, 1), law)
}

/// `P_0 U_i f` through the `2^d`-term difference of corner expectations.
fn p0_oracle(f: &Functional, law: &InnovationLaw) -> Functional {
    let d = f.dim();
    let mut out = Functional::zero(d);
    for mask in 0u32..(1 << d) {
        let corner: Vec<i32> = (0..d).map(|q| if mask & (1 << q) != 0 { -1 } else { 0 }).collect();
        let e = cond_expect(f, ConditioningIndex::Corner(idx(&corner)), law).unwrap();
        out = if mask.count_ones() % 2 == 0 { &out + &e } else { &out - &e };
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn physical_dependence_matches_coupling_enumeration(seed: u64, dim in 1usize..=2, k in 0u8..2) {
        let law = if k == 0 { InnovationLaw::rademacher() } else { three_point_law() };
        let f = centered(seed, dim, &law);
        for i in f.window() {
            prop_assert!((delta_at(&f, &i, &law).powi(2) - delta_sq(&f, &i, &law)).abs() < 1e-11);
        }
    }

    #[test]
    fn hannan_terms_match_corner_differences(seed: u64, dim in 1usize..=2) {
        let law = InnovationLaw::rademacher();
        let f = centered(seed, dim, &law);
        let profile = hannan_profile(&f, &law).unwrap();
        let support = Rectangle::new(LatticeIndex::splat(dim, -3), LatticeIndex::splat(dim, 3)).unwrap();
        let mut total = 0.0;
        for i in support.points() {
            let oracle = p0_oracle(&f.shift(i), &law);
            let norm = inner(&oracle, &oracle, &law).max(0.0).sqrt();
            let reported = profile.hannan_terms.get(&i).copied().unwrap_or(0.0);
            prop_assert!((norm - reported).abs() < 1e-10, "i = {}: {} vs {}", i, norm, reported);
            total += norm;
        }
        prop_assert!((total - profile.hannan_total).abs() < 1e-9);
    }

    #[test]
    fn kernel_is_an_adapted_martingale_difference(seed: u64, dim in 1usize..=3) {
        let law = InnovationLaw::rademacher();
        let f = centered(seed, dim, &law);
        let k = martingale_kernel(&f, &law).unwrap();
        prop_assert!(k.is_adapted());
        prop_assert!(k.martingale_violation(&law).unwrap() <= 1e-10);
        prop_assert!((k.d0.expectation(&law)).abs() < 1e-12);
        let p0 = project_full(&k.d0, &LatticeIndex::zero(dim), &law).unwrap();
        prop_assert!(p0.sup_distance(&k.d0, &law).unwrap() <= 1e-10);
    }

    #[test]
    fn conditional_tails_are_tail_sums_of_hannan_terms(seed: u64, dim in 1usize..=2) {
        // ||E(X_n | F_0)||^2 = sum_{k >= n} ||P_0 U_k f||^2
        let law = InnovationLaw::rademacher();
        let f = centered(seed, dim, &law);
        let profile = hannan_profile(&f, &law).unwrap();
        let origin = LatticeIndex::zero(dim);
        for n in Rectangle::new(LatticeIndex::splat(dim, 0), LatticeIndex::splat(dim, 3)).unwrap().points() {
            let e = cond_expect(&f.shift(n), ConditioningIndex::Corner(origin), &law).unwrap();
            let tail: f64 = profile.hannan_terms.iter().filter(|(k, _)| n.precedes(k)).map(|(_, a)| a * a).sum();
            prop_assert!((e.l2_norm(&law).powi(2) - tail).abs() < 1e-10);
        }
    }

    #[test]
    fn projective_coefficient_dominates_hannan_sum(seed: u64, dim in 1usize..=2) {
        let law = InnovationLaw::rademacher();
        let f = centered(seed, dim, &law);
        let h = hannan_profile(&f, &law).unwrap();
        let wm = wm_coefficient(&f, &law).unwrap();
        // the origin term of the Hannan sum is not covered by k >= 1
        let head = h.hannan_terms.iter().filter(|(k, _)| k.coords().iter().any(|&c| c < 1)).map(|(_, a)| a).sum::<f64>();
        prop_assert!(h.hannan_total - head <= 2f64.powi(dim as i32) * wm.wm_total + 1e-10);
    }

    #[test]
    fn lemma63_holds_on_random_arrays(seed: u64, dim in 1usize..=3, side in 1i32..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rect = Rectangle::from_extent(LatticeIndex::splat(dim, side)).unwrap();
        let a = Grid::from_fn(rect, |_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..10.0) });
        let out = lemma63_inequality(&a).unwrap();
        prop_assert!(out.holds);
        let direct: f64 = rect.points().map(|n| {
            let tail: f64 = rect.points().filter(|k| n.precedes(k)).map(|k| a.get(&k).unwrap().powi(2)).sum();
            tail.sqrt() / n.volume().sqrt()
        }).sum();
        prop_assert!((direct - out.lhs).abs() < 1e-9 * (1.0 + direct));
    }
}

#[test]
fn linear_example_profile() {
    let law = InnovationLaw::rademacher();
    let f = &eps(&[0]) + &eps(&[-1]).scale(0.5);
    let p = full_profile(&f, &law).unwrap();
    assert!((p.hannan_total - 1.5).abs() < 1e-15);
    assert!((p.sigma2 - 2.25).abs() < 1e-14);
    assert!((p.delta_total - 1.5 * 2f64.sqrt()).abs() < 1e-14);
    assert!((p.wm_total - 0.5).abs() < 1e-15);
}
