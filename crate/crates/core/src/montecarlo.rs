//! Seeded simulation of partial sums `S_n = sum_{1 <= i <= n} X_i` and of the approximating
//! orthomartingale `M_n = sum_{i in [n]} U_i D_0`, plus the empirical checks built on them.
//!
//! `S` and `M` are always computed on one innovation sample. Replicates run in parallel,
//! each on its own stream, and results are collected in replicate order, so the thread
//! count never changes any output.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{Functional, Stencil};
use crate::hannan::{hannan_profile, martingale_kernel};
use crate::innovation::{sample_region, FieldSample, InnovationLaw};
use crate::lattice::{prefix_sum, Grid, LatticeIndex, Rectangle, SummedAreaTable};
use crate::stats::quantile_sorted;

/// Largest sampled region, in sites.
pub const SIM_CAP: u64 = 1 << 26;
/// Relative slack of the Monte Carlo inequality checks, on top of three standard errors.
pub const MC_SLACK: f64 = 0.10;

/// Simulates `X_i = U_i f` and `D_i = U_i D_0` on `[1, n]` from one shared innovation sample.
///
/// The sample covers `[1 - r, n + r]` with `r` the larger of the radius and the diameter
/// of `f`'s window, which also covers the window of `D_0`.
#[derive(Clone, Debug)]
pub struct CoupledSimulator {
    n: LatticeIndex,
    law: InnovationLaw,
    region: Rectangle,
    grid: Rectangle,
    bases: Vec<isize>,
    field: Stencil,
    kernel: Option<(Stencil, f64)>,
}

impl CoupledSimulator {
    /// Fails if `f` is not centered; use [`CoupledSimulator::field_only`] for that case.
    pub fn new(f: &Functional, n: LatticeIndex, law: &InnovationLaw) -> Result<Self> {
        let mut sim = Self::field_only(f, n, law)?;
        let kernel = martingale_kernel(f, law)?;
        sim.kernel = Some((Stencil::on_region(&kernel.d0, &sim.region), kernel.sigma2));
        Ok(sim)
    }

    /// Simulator for `X` alone; `f` need not be centered.
    pub fn field_only(f: &Functional, n: LatticeIndex, law: &InnovationLaw) -> Result<Self> {
        if n.dim() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), found: n.dim() });
        }
        let grid = Rectangle::from_extent(n)?;
        let r = margin(f);
        let region = Rectangle::new(LatticeIndex::splat(f.dim(), 1 - r), n + LatticeIndex::splat(f.dim(), r))?;
        let needed = region.cardinality() as u64 + 2 * grid.cardinality() as u64;
        if needed > SIM_CAP {
            return Err(Error::CapExceeded { needed: needed as f64, cap: SIM_CAP });
        }
        let bases = grid.points().map(|i| region.flat_index(&i).expect("grid inside region") as isize).collect();
        Ok(Self { n, law: law.clone(), region, grid, bases, field: Stencil::on_region(f, &region), kernel: None })
    }

    pub fn n(&self) -> LatticeIndex {
        self.n
    }

    pub fn region(&self) -> &Rectangle {
        &self.region
    }

    /// `sigma^2 = E D_0^2`, if the kernel was built.
    pub fn sigma2(&self) -> Option<f64> {
        self.kernel.as_ref().map(|k| k.1)
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        sample_region(&self.region, &self.law, seed, replicate)
    }

    fn evaluate(&self, stencil: &Stencil, sample: &FieldSample) -> Grid {
        let values: Vec<f64> = self.bases.iter().map(|&b| stencil.eval_at(sample.values(), b)).collect();
        Grid::from_values(self.grid, values).expect("one value per grid point")
    }

    /// `X_i` for `i in [1, n]`.
    pub fn field_values(&self, sample: &FieldSample) -> Grid {
        self.evaluate(&self.field, sample)
    }

    /// `D_i` for `i in [1, n]`.
    pub fn kernel_values(&self, sample: &FieldSample) -> Result<Grid> {
        let (stencil, _) = self.kernel.as_ref().ok_or_else(|| Error::InvalidArgument("simulator built without a martingale kernel".into()))?;
        Ok(self.evaluate(stencil, sample))
    }

    /// Partial-sum table of `X` and the values themselves.
    pub fn field(&self, seed: u64, replicate: u64) -> (SummedAreaTable, Grid) {
        let x = self.field_values(&self.sample(seed, replicate));
        (prefix_sum(&x), x)
    }

    /// Partial-sum table of `D`.
    pub fn orthomartingale(&self, seed: u64, replicate: u64) -> Result<SummedAreaTable> {
        Ok(prefix_sum(&self.kernel_values(&self.sample(seed, replicate))?))
    }

    /// `(S, M)` on one sample.
    pub fn coupled(&self, seed: u64, replicate: u64) -> Result<(SummedAreaTable, SummedAreaTable)> {
        let sample = self.sample(seed, replicate);
        let s = prefix_sum(&self.field_values(&sample));
        let m = prefix_sum(&self.kernel_values(&sample)?);
        Ok((s, m))
    }
}

fn margin(f: &Functional) -> i32 {
    let window = f.window();
    let radius = window.iter().flat_map(|s| s.coords().iter().map(|c| c.abs())).max().unwrap_or(0);
    let diameter = (0..f.dim()).filter_map(|q| f.axis_span(q)).map(|(lo, hi)| hi - lo).max().unwrap_or(0);
    radius.max(diameter)
}

/// Runs `work` for replicates `0..replicates` in parallel, returning results in replicate order.
pub fn run_replicates<T, F>(replicates: u64, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..replicates).into_par_iter().map(work).collect()
}

/// `(S table, X values)` for one replicate.
pub fn simulate_field(f: &Functional, n: LatticeIndex, law: &InnovationLaw, seed: u64, replicate: u64) -> Result<(SummedAreaTable, Grid)> {
    Ok(CoupledSimulator::field_only(f, n, law)?.field(seed, replicate))
}

/// `M` table for one replicate, on the same sample as [`simulate_field`].
pub fn simulate_orthomartingale(f: &Functional, n: LatticeIndex, law: &InnovationLaw, seed: u64, replicate: u64) -> Result<SummedAreaTable> {
    CoupledSimulator::new(f, n, law)?.orthomartingale(seed, replicate)
}

/// The normalized path `t -> S_{floor(n t)} / |n|^{1/2}` on the grid `{0, 1/r, ..., 1}^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub grid_n: LatticeIndex,
    pub resolution: u32,
    /// Row-major over `k in [0, r]^d`, the value at `t = k / r`.
    pub values: Vec<f64>,
    pub replicate: u64,
    pub seed: u64,
}

impl PathSample {
    pub fn from_table(s: &SummedAreaTable, resolution: u32, seed: u64, replicate: u64) -> Self {
        assert!(resolution >= 1, "path resolution must be positive");
        let n = s.rect().hi();
        let d = n.dim();
        let norm = n.volume().sqrt();
        let r = resolution as i64;
        let ks = Rectangle::new(LatticeIndex::zero(d), LatticeIndex::splat(d, resolution as i32)).expect("path grid");
        let values = ks
            .points()
            .map(|k| {
                let coords: Vec<i32> = (0..d).map(|q| (i64::from(n[q]) * i64::from(k[q]) / r) as i32).collect();
                if coords.contains(&0) {
                    0.0
                } else {
                    s.at(&LatticeIndex::new(&coords).expect("dimension")).expect("inside table") / norm
                }
            })
            .collect();
        Self { grid_n: n, resolution, values, replicate, seed }
    }

    pub fn dim(&self) -> usize {
        self.grid_n.dim()
    }

    /// All grid points `t`.
    pub fn t_grid(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let r = self.resolution as i32;
        Rectangle::new(LatticeIndex::zero(d), LatticeIndex::splat(d, r))
            .expect("path grid")
            .points()
            .map(|k| k.coords().iter().map(|&c| f64::from(c) / f64::from(r)).collect())
            .collect()
    }

    /// Value at `t`, if `t` lies on the grid.
    pub fn value_at(&self, t: &[f64]) -> Option<f64> {
        if t.len() != self.dim() {
            return None;
        }
        let r = f64::from(self.resolution);
        let mut flat = 0usize;
        for &tq in t {
            let k = (tq * r).round();
            if !(0.0..=r).contains(&k) || (k / r - tq).abs() > 1e-12 {
                return None;
            }
            flat = flat * (self.resolution as usize + 1) + k as usize;
        }
        Some(self.values[flat])
    }

    /// `S_n / |n|^{1/2}`.
    pub fn endpoint(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }
}

/// Paths for replicates `0..replicates`.
pub fn sample_paths(f: &Functional, n: LatticeIndex, law: &InnovationLaw, replicates: u64, seed: u64, resolution: u32) -> Result<Vec<PathSample>> {
    let sim = CoupledSimulator::field_only(f, n, law)?;
    run_replicates(replicates, |rep| Ok(PathSample::from_table(&sim.field(seed, rep).0, resolution, seed, rep)))
}

/// Mean, median and spread of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&sorted, p);
        Self {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            min: sorted[0],
            q10: q(0.10),
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            q90: q(0.90),
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Per-replicate `max_{m in [n]} |S_m - M_m| / |n|^{1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapStatistic {
    pub grid_n: LatticeIndex,
    pub replicates: u64,
    pub samples: Vec<f64>,
    pub summary: Summary,
}

pub fn approximation_gap(f: &Functional, n: LatticeIndex, law: &InnovationLaw, replicates: u64, seed: u64) -> Result<GapStatistic> {
    if replicates == 0 {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    let sim = CoupledSimulator::new(f, n, law)?;
    let norm = n.volume().sqrt();
    let samples = run_replicates(replicates, |rep| {
        let (s, m) = sim.coupled(seed, rep)?;
        let gap = s.values().iter().zip(m.values()).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        Ok(gap / norm)
    })?;
    Ok(GapStatistic { grid_n: n, replicates, summary: Summary::of(&samples), samples })
}

/// Monte Carlo estimate of `E max_i |M_i|^p / E |M_n|^p` against `(p/(p-1))^{dp}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CairoliOutcome {
    pub ratio: f64,
    pub ratio_se: f64,
    pub bound: f64,
    pub max_moment: f64,
    pub corner_moment: f64,
    /// `ratio <= (1 + slack) bound + 3 se`.
    pub holds: bool,
}

pub fn cairoli_check(f: &Functional, n: LatticeIndex, law: &InnovationLaw, replicates: u64, seed: u64, p: f64) -> Result<CairoliOutcome> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("Cairoli exponent must exceed 1, got {p}")));
    }
    if replicates < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: replicates as usize });
    }
    let sim = nondegenerate(f, n, law)?;
    let pairs = run_replicates(replicates, |rep| {
        let m = sim.orthomartingale(seed, rep)?;
        let corner = m.at(&n).expect("corner").abs().powf(p);
        Ok((m.max_abs().powf(p), corner))
    })?;
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (ratio, ratio_se) = ratio_estimate(&a, &b);
    let bound = (p / (p - 1.0)).powf(n.dim() as f64 * p);
    Ok(CairoliOutcome {
        ratio,
        ratio_se,
        bound,
        max_moment: mean(&a),
        corner_moment: mean(&b),
        holds: ratio <= (1.0 + MC_SLACK) * bound + 3.0 * ratio_se,
    })
}

fn nondegenerate(f: &Functional, n: LatticeIndex, law: &InnovationLaw) -> Result<CoupledSimulator> {
    let sim = CoupledSimulator::new(f, n, law)?;
    if sim.sigma2().unwrap_or(0.0) <= 0.0 {
        return Err(Error::Degenerate("sigma^2 = 0".into()));
    }
    Ok(sim)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `mean(a) / mean(b)` with its delta-method standard error.
fn ratio_estimate(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let r = ma / mb;
    let mut var = 0.0;
    for (x, y) in a.iter().zip(b) {
        let e = (x - ma) - r * (y - mb);
        var += e * e;
    }
    var /= m - 1.0;
    (r, (var / m).sqrt() / mb.abs())
}

/// One cell of the uniform-integrability table: `E[Y^2; Y^2 > a]` with `Y = max_i |M_i| / |n|^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UiRow {
    pub grid_n: LatticeIndex,
    pub level: f64,
    pub estimate: f64,
    pub se: f64,
}

pub fn uniform_integrability_diagnostic(
    f: &Functional,
    ns: &[LatticeIndex],
    levels: &[f64],
    law: &InnovationLaw,
    replicates: u64,
    seed: u64,
) -> Result<Vec<UiRow>> {
    if replicates < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: replicates as usize });
    }
    let mut rows = Vec::with_capacity(ns.len() * levels.len());
    for &n in ns {
        let sim = nondegenerate(f, n, law)?;
        let norm2 = n.volume();
        let y2 = run_replicates(replicates, |rep| Ok(sim.orthomartingale(seed, rep)?.max_abs().powi(2) / norm2))?;
        for &a in levels {
            let truncated: Vec<f64> = y2.iter().map(|&y| if y > a { y } else { 0.0 }).collect();
            let est = mean(&truncated);
            let var = truncated.iter().map(|x| (x - est).powi(2)).sum::<f64>() / (replicates as f64 - 1.0);
            rows.push(UiRow { grid_n: n, level: a, estimate: est, se: (var / replicates as f64).sqrt() });
        }
    }
    Ok(rows)
}

/// `||max_{m in [n]} |S_m| ||_2` against `2^d |n|^{1/2} sum_i ||P_0 U_i f||_2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaximalOutcome {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    /// `lhs <= (1 + slack) rhs + 3 se`.
    pub holds: bool,
}

pub fn maximal_inequality_check(f: &Functional, n: LatticeIndex, law: &InnovationLaw, replicates: u64, seed: u64) -> Result<MaximalOutcome> {
    if replicates < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: replicates as usize });
    }
    let hannan = hannan_profile(f, law)?;
    let sim = CoupledSimulator::field_only(f, n, law)?;
    let squares = run_replicates(replicates, |rep| Ok(sim.field(seed, rep).0.max_abs().powi(2)))?;
    let second = mean(&squares);
    let lhs = second.sqrt();
    let var = squares.iter().map(|x| (x - second).powi(2)).sum::<f64>() / (replicates as f64 - 1.0);
    let se_second = (var / replicates as f64).sqrt();
    let lhs_se = if lhs > 0.0 { se_second / (2.0 * lhs) } else { 0.0 };
    let rhs = 2f64.powi(n.dim() as i32) * n.volume().sqrt() * hannan.hannan_total;
    Ok(MaximalOutcome { lhs, lhs_se, rhs, holds: lhs <= (1.0 + MC_SLACK) * rhs + 3.0 * lhs_se })
}
