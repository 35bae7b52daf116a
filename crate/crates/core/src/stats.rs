//! Normal CDF, Kolmogorov-Smirnov test, Brownian-sheet covariance checks and moment summaries.

use crate::error::{Error, Result};
use crate::montecarlo::PathSample;

/// Smallest sample accepted by [`ks_test`] and [`sheet_covariance_check`].
pub const MIN_SAMPLES: usize = 200;

/// `erfc(x)` by the Chebyshev fit of Numerical Recipes (`erfcc`), relative error below 1.2e-7.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807 + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Standard normal CDF, `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Outcome of a goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub level: f64,
    pub pass: bool,
    pub sample_size: usize,
}

/// Asymptotic Kolmogorov critical value for `sqrt(m) D`.
pub fn kolmogorov_critical(level: f64) -> Result<f64> {
    if level == 0.05 {
        Ok(1.3581)
    } else if level == 0.01 {
        Ok(1.6276)
    } else {
        Err(Error::InvalidArgument(format!("unsupported KS level {level}; use 0.05 or 0.01")))
    }
}

/// One-sample Kolmogorov-Smirnov test against a continuous `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<TestResult> {
    let coeff = kolmogorov_critical(level)?;
    let m = samples.len();
    if m < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, found: m });
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mf = m as f64;
    let statistic = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i + 1) as f64 / mf - f).max(f - i as f64 / mf)
    });
    let critical_value = coeff / mf.sqrt();
    Ok(TestResult { statistic, critical_value, level, pass: statistic <= critical_value, sample_size: m })
}

/// Empirical covariance of the sheet at `(s, t)` against `sigma^2 prod_q min(s_q, t_q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceRow {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub target: f64,
    pub estimate: f64,
    pub se: f64,
    /// `(estimate - target) / se`.
    pub z: f64,
}

impl CovarianceRow {
    pub fn within(&self, n_se: f64) -> bool {
        (self.estimate - self.target).abs() <= n_se * self.se
    }
}

/// Covariance of path values at each pair, with the standard error of the sample
/// covariance taken from the spread of the centered products.
pub fn sheet_covariance_check(paths: &[PathSample], pairs: &[(Vec<f64>, Vec<f64>)], sigma2: f64) -> Result<Vec<CovarianceRow>> {
    let m = paths.len();
    if m < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, found: m });
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (s, t) in pairs {
        let column = |u: &[f64]| -> Result<Vec<f64>> {
            paths.iter().map(|p| p.value_at(u).ok_or_else(|| Error::OutOfBounds(format!("t = {u:?} not on the path grid")))).collect()
        };
        let xs = column(s)?;
        let ys = column(t)?;
        if s.len() != t.len() {
            return Err(Error::DimensionMismatch { expected: s.len(), found: t.len() });
        }
        let mx = mean(&xs);
        let my = mean(&ys);
        let products: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
        let mf = m as f64;
        let estimate = products.iter().sum::<f64>() / (mf - 1.0);
        let mp = mean(&products);
        let spread = products.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / (mf - 1.0);
        let se = (spread / mf).sqrt();
        let target = sigma2 * s.iter().zip(t).map(|(a, b)| a.min(*b)).product::<f64>();
        let z = if se > 0.0 {
            (estimate - target) / se
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(CovarianceRow { s: s.clone(), t: t.clone(), target, estimate, se, z });
    }
    Ok(rows)
}

/// Sample mean and unbiased variance with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

impl MomentSummary {
    pub fn var_within(&self, target: f64, n_se: f64) -> bool {
        (self.var - target).abs() <= n_se * self.se_var
    }
}

pub fn moment_summary(samples: &[f64]) -> Result<MomentSummary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: n });
    }
    let nf = n as f64;
    let mu = mean(samples);
    let m2 = samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>();
    let m4 = samples.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / nf;
    let var = m2 / (nf - 1.0);
    let var_of_var = (m4 - var * var * (nf - 3.0) / (nf - 1.0)) / nf;
    Ok(MomentSummary {
        n,
        mean: mu,
        var,
        se_mean: (var / nf).sqrt(),
        se_var: var_of_var.max(0.0).sqrt(),
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_symmetry() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-7);
        for i in 0..200 {
            let x = -6.0 + 0.06 * i as f64;
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 2e-7);
        }
        assert!(normal_cdf(-40.0) >= 0.0 && normal_cdf(40.0) <= 1.0);
    }

    #[test]
    fn ks_quantile_samples() {
        let m = 400;
        let samples: Vec<f64> = (1..=m).map(|i| (i as f64 - 0.5) / m as f64).collect();
        let r = ks_test(&samples, |x| x.clamp(0.0, 1.0), 0.05).unwrap();
        assert!((r.statistic - 0.5 / m as f64).abs() < 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn ks_constant_samples_fail() {
        let r = ks_test(&[0.3; 500], normal_cdf, 0.01).unwrap();
        assert!(r.statistic >= 0.5);
        assert!(!r.pass);
    }

    #[test]
    fn ks_critical_value() {
        let samples: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let r = ks_test(&samples, normal_cdf, 0.01).unwrap();
        assert!((r.critical_value - 0.0364).abs() < 5e-5);
        assert!(ks_test(&samples, normal_cdf, 0.1).is_err());
        assert!(matches!(ks_test(&samples[..10], normal_cdf, 0.05), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn moment_examples() {
        let s = moment_summary(&[1.0, -1.0]).unwrap();
        assert_eq!((s.mean, s.var), (0.0, 2.0));
        let c = moment_summary(&[3.0; 10]).unwrap();
        assert_eq!(c.var, 0.0);
        assert!(moment_summary(&[1.0]).is_err());
    }

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
    }
}
