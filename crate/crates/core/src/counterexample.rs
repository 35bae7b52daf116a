//! A martingale difference with summable Hannan coefficients whose physical dependence
//! coefficients are not summable.
//!
//! `Z_n` is the product of indicators `eps_{-2n} = eps_{-2n+1} = -1`,
//! `eps_{-2n+2} = ... = eps_{-1} = 1` times `eps_0`, so `||Z_n||_2^2 = 4^{-n}` and the
//! `Z_n` are orthogonal. With `c_n = 2^n / n`, `f_N = sum_{n <= N} c_n Z_n` has a
//! single Hannan term `(sum n^{-2})^{1/2}`, while `sum_i delta_i(f_N)` grows without bound.

use crate::error::{Error, Result};
use crate::functional::{Factor, Functional, Term};
use crate::hannan::{delta_at, hannan_profile, physical_dependence};
use crate::innovation::{check_cap, InnovationLaw};
use crate::lattice::LatticeIndex;

/// Largest truncation handled exactly: `2N + 1` Rademacher sites stay within `2^23` configurations.
pub const MAX_EXACT_N: u32 = 11;
const EXACT_CAP: u64 = 1 << 23;

/// `(pi^2 / 6)^{1/2}`.
pub fn hannan_bound() -> f64 {
    (std::f64::consts::PI.powi(2) / 6.0).sqrt()
}

fn site(k: i32) -> LatticeIndex {
    LatticeIndex::new(&[k]).expect("one-dimensional site")
}

/// `Z_n` on `Z`.
pub fn build_zn(n: u32, law: &InnovationLaw) -> Result<Functional> {
    if !law.is_rademacher() {
        return Err(Error::NotRademacher);
    }
    if n == 0 {
        return Err(Error::InvalidArgument("Z_n needs n >= 1".into()));
    }
    let n = n as i32;
    let mut factors = vec![Factor::indicator(site(-2 * n), -1.0), Factor::indicator(site(-2 * n + 1), -1.0)];
    factors.extend((-2 * n + 2..0).map(|k| Factor::indicator(site(k), 1.0)));
    factors.push(Factor::value(site(0)));
    Functional::from_terms(1, &[Term { coeff: 1.0, factors }])
}

/// `c_n = 2^n / n`.
pub fn coefficient(n: u32) -> f64 {
    2f64.powi(n as i32) / f64::from(n)
}

/// `f_N = sum_{n=1}^N c_n Z_n`.
pub fn build_truncated(big_n: u32, law: &InnovationLaw) -> Result<Functional> {
    if big_n == 0 {
        return Err(Error::InvalidArgument("truncation N must be positive".into()));
    }
    check_cap(law.len(), 2 * big_n as usize + 1, EXACT_CAP)?;
    let mut f = Functional::zero(1);
    for n in 1..=big_n {
        f = &f + &build_zn(n, law)?.scale(coefficient(n));
    }
    Ok(f)
}

/// `(sum_{n <= N} n^{-2})^{1/2}`.
pub fn hannan_total_closed_form(big_n: u32) -> f64 {
    (1..=big_n).map(|n| 1.0 / f64::from(n).powi(2)).sum::<f64>().sqrt()
}

/// `(1/2) sum_{j=k}^N j^{-2}`, the lower bound for `delta_i^2` at `i in {-2k, -2k+1}`.
pub fn site_lower_bound_sq(k: u32, big_n: u32) -> f64 {
    0.5 * (k..=big_n).map(|j| 1.0 / f64::from(j).powi(2)).sum::<f64>()
}

/// `sum_{k=1}^N (2 sum_{j=k}^N j^{-2})^{1/2}`, the sum of the per-site bounds over both sites of each pair.
pub fn delta_lower_bound(big_n: u32) -> f64 {
    (1..=big_n).map(|k| 2.0 * site_lower_bound_sq(k, big_n).sqrt()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Analytic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleRow {
    pub n: u32,
    pub hannan_total: f64,
    pub hannan_bound: f64,
    /// `None` beyond the exact range.
    pub delta_total: Option<f64>,
    pub delta_lower_bound: f64,
    /// Smallest `delta_i^2 - bound_i` over the bounded sites; `None` beyond the exact range.
    pub site_bound_slack: Option<f64>,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub truncations: Vec<u32>,
    pub rows: Vec<CounterexampleRow>,
    /// `(N, delta_total(2N) / delta_total(N))` whenever both are exact and requested.
    pub growth_ratios: Vec<(u32, f64)>,
}

impl CounterexampleReport {
    /// Whether the exact per-site bounds hold for every exact row.
    pub fn site_bounds_hold(&self) -> bool {
        self.rows.iter().filter_map(|r| r.site_bound_slack).all(|s| s >= -1e-12)
    }

    pub fn row(&self, n: u32) -> Option<&CounterexampleRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Exact rows for `N <= 11`, closed-form rows beyond.
pub fn report(truncations: &[u32]) -> Result<CounterexampleReport> {
    if truncations.is_empty() {
        return Err(Error::InvalidArgument("no truncations given".into()));
    }
    let law = InnovationLaw::rademacher();
    let mut rows = Vec::with_capacity(truncations.len());
    for &n in truncations {
        if n == 0 {
            return Err(Error::InvalidArgument("truncation N must be positive".into()));
        }
        rows.push(if n <= MAX_EXACT_N { exact_row(n, &law)? } else { analytic_row(n) });
    }
    let mut growth_ratios = Vec::new();
    for r in &rows {
        let doubled = rows.iter().find(|s| s.n == 2 * r.n);
        if let (Some(a), Some(b)) = (r.delta_total, doubled.and_then(|s| s.delta_total)) {
            growth_ratios.push((r.n, b / a));
        }
    }
    Ok(CounterexampleReport { truncations: truncations.to_vec(), rows, growth_ratios })
}

fn exact_row(n: u32, law: &InnovationLaw) -> Result<CounterexampleRow> {
    let f = build_truncated(n, law)?;
    let hannan = hannan_profile(&f, law)?;
    let delta = physical_dependence(&f, law);
    let mut slack = f64::INFINITY;
    for k in 1..=n {
        let bound = site_lower_bound_sq(k, n);
        for i in [-2 * k as i32, -2 * k as i32 + 1] {
            slack = slack.min(delta_at(&f, &site(i), law).powi(2) - bound);
        }
    }
    Ok(CounterexampleRow {
        n,
        hannan_total: hannan.hannan_total,
        hannan_bound: hannan_bound(),
        delta_total: Some(delta.delta_total),
        delta_lower_bound: delta_lower_bound(n),
        site_bound_slack: Some(slack),
        mode: Mode::Exact,
    })
}

fn analytic_row(n: u32) -> CounterexampleRow {
    CounterexampleRow {
        n,
        hannan_total: hannan_total_closed_form(n),
        hannan_bound: hannan_bound(),
        delta_total: None,
        delta_lower_bound: delta_lower_bound(n),
        site_bound_slack: None,
        mode: Mode::Analytic,
    }
}

/// Relabels site `k` of a one-dimensional functional as `k (1, ..., 1)`.
pub fn embed_diagonal(f: &Functional, d: usize) -> Result<Functional> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: f.dim() });
    }
    if !(2..=crate::lattice::MAX_DIM).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(f.map_sites(d, |s| LatticeIndex::splat(d, s[0])))
}
