mod common;

use common::*;
use orthofield::montecarlo::*;
use orthofield::stats::*;
use orthofield::{Functional, InnovationLaw, LatticeIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `Phi` from the Maclaurin series of `erf`, accurate to ~1e-13 for `|x| <= 4`.
fn phi_series(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    let mut term = z;
    let mut sum = z;
    for n in 1..200 {
        term *= -z * z / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    0.5 + sum / std::f64::consts::PI.sqrt()
}

fn rad() -> InnovationLaw {
    InnovationLaw::rademacher()
}

fn normals(seed: u64, m: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn normal_cdf_against_series() {
    assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
    for i in 0..=800 {
        let x = -4.0 + 0.01 * i as f64;
        assert!((normal_cdf(x) - phi_series(x)).abs() <= 1e-7, "x = {x}");
    }
}

#[test]
fn normal_cdf_is_monotone() {
    let grid: Vec<f64> = (0..10_000).map(|i| -8.0 + 16.0 * i as f64 / 9_999.0).collect();
    for w in grid.windows(2) {
        assert!(normal_cdf(w[1]) >= normal_cdf(w[0]));
    }
}

#[test]
fn ks_accepts_normal_draws() {
    let r = ks_test(&normals(31, 2000), normal_cdf, 0.01).unwrap();
    assert!(r.pass, "{r:?}");
    let shifted: Vec<f64> = normals(31, 2000).iter().map(|x| x + 0.3).collect();
    assert!(!ks_test(&shifted, normal_cdf, 0.01).unwrap().pass);
}

#[test]
fn variance_of_normal_draws() {
    let s = moment_summary(&normals(5, 10_000)).unwrap();
    assert!(s.var_within(1.0, 4.0), "{s:?}");
    assert!(s.mean.abs() <= 4.0 * s.se_mean);
}

#[test]
fn partial_sums_are_centered() {
    let f = &eps(&[0, 0]) + &eps(&[-1, 0]).scale(0.5);
    let n = idx(&[8, 8]);
    let sim = CoupledSimulator::field_only(&f, n, &rad()).unwrap();
    let ends: Vec<f64> = (0..500).map(|r| sim.field(9, r).0.at(&n).unwrap()).collect();
    let s = moment_summary(&ends).unwrap();
    assert!(s.mean.abs() <= 4.0 * s.se_mean);
}

#[test]
fn normalized_variance_approaches_sigma2() {
    // S_n = 0.5 eps_0 + 1.5 (eps_1 + ... + eps_{n-1}) + eps_n, so Var(S_n) / n = 2.25 - 1/n
    let f = &eps(&[0]) + &eps(&[-1]).scale(0.5);
    let mut previous_gap = f64::INFINITY;
    for n in [4, 64] {
        let paths = sample_paths(&f, idx(&[n]), &rad(), 2000, 17, 1).unwrap();
        let ends: Vec<f64> = paths.iter().map(PathSample::endpoint).collect();
        let s = moment_summary(&ends).unwrap();
        let exact = 2.25 - 1.0 / n as f64;
        assert!(s.var_within(exact, 4.0), "n = {n}: {s:?}");
        assert!(2.25 - exact < previous_gap);
        previous_gap = 2.25 - exact;
    }
}

#[test]
fn gap_vanishes_for_martingale_differences_and_shrinks_otherwise() {
    let zero_gap = approximation_gap(&eps(&[0, 0]), idx(&[8, 8]), &rad(), 20, 1).unwrap();
    assert!(zero_gap.samples.iter().all(|&g| g == 0.0));

    let f = &eps(&[0, 0]) + &eps(&[-1, 0]).scale(0.5);
    let small = approximation_gap(&f, idx(&[8, 8]), &rad(), 200, 2).unwrap();
    let large = approximation_gap(&f, idx(&[64, 64]), &rad(), 200, 2).unwrap();
    assert!(large.summary.median < small.summary.median);
    assert!(small.samples.iter().all(|&g| g >= 0.0));
}

#[test]
fn maximal_inequality_examples() {
    let o = maximal_inequality_check(&eps(&[0]), idx(&[64]), &rad(), 500, 3).unwrap();
    assert_eq!(o.rhs, 16.0);
    assert!(o.holds && o.lhs <= 16.0);
    let f = &eps(&[0, 0]) + &eps(&[-1, 0]).scale(0.5);
    assert!(maximal_inequality_check(&f, idx(&[32, 32]), &rad(), 200, 3).unwrap().holds);
}

#[test]
fn truncated_moments_decrease_in_the_level() {
    let levels = [0.0, 1.0, 4.0, 100.0];
    let rows = uniform_integrability_diagnostic(&eps(&[0, 0]), &[idx(&[8, 8]), idx(&[16, 16])], &levels, &rad(), 300, 4).unwrap();
    for chunk in rows.chunks(levels.len()) {
        for w in chunk.windows(2) {
            assert!(w[1].estimate <= w[0].estimate);
        }
        assert!(chunk[3].estimate <= 0.05 * chunk[0].estimate);
    }
}

#[test]
fn sheet_covariance_targets() {
    let f = eps(&[0, 0]);
    let paths = sample_paths(&f, idx(&[16, 16]), &rad(), 400, 8, 2).unwrap();
    let pairs = vec![
        (vec![1.0, 1.0], vec![1.0, 1.0]),
        (vec![0.5, 1.0], vec![1.0, 0.5]),
        (vec![1.0, 0.5], vec![0.5, 1.0]),
        (vec![0.0, 1.0], vec![1.0, 1.0]),
    ];
    let rows = sheet_covariance_check(&paths, &pairs, 1.0).unwrap();
    assert_eq!(rows[0].target, 1.0);
    assert_eq!(rows[1].target, 0.25);
    assert_eq!(rows[1].estimate, rows[2].estimate);
    assert_eq!((rows[3].target, rows[3].estimate), (0.0, 0.0));
    assert!(rows.iter().all(|r| r.within(4.0)), "{rows:?}");
    assert!(sheet_covariance_check(&paths, &[(vec![0.3, 1.0], vec![1.0, 1.0])], 1.0).is_err());
}

#[test]
fn thread_count_does_not_change_results() {
    let f = &eps(&[0, 0]) + &eps(&[-1, 0]).scale(0.5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| approximation_gap(&f, idx(&[16, 16]), &rad(), 64, 99).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn simulations_reject_oversized_grids() {
    let err = CoupledSimulator::field_only(&Functional::value(LatticeIndex::zero(2)), idx(&[10_000, 10_000]), &rad()).unwrap_err();
    assert!(matches!(err, orthofield::Error::CapExceeded { .. }));
}
