//! The five commands. Each is a pure function of the configuration, seed and
//! replicate count, returning a [`Report`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orthofield::coboundary::{center, decompose as core_decompose, subset_label, CHECK_TOL, VERIFY_TOL};
use orthofield::counterexample;
use orthofield::functional::{random_centered_functional, random_functional, RandomShape};
use orthofield::hannan::{full_profile, lemma63_inequality, martingale_kernel};
use orthofield::innovation::{check_cap, enumerate_configs};
use orthofield::lattice::{Grid, Rectangle};
use orthofield::montecarlo::{approximation_gap, sample_paths, PathSample};
use orthofield::projection::{cond_expect, indices_of, lemma24_suite_many, project_full, projective_decomposition, recompose, ConditioningIndex};
use orthofield::stats::{ks_test, moment_summary, normal_cdf, sheet_covariance_check};
use orthofield::{Functional, InnovationLaw, LatticeIndex};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{Cell, Report, Section};

/// Standard errors allowed between an estimate and its target.
pub const SE_TOLERANCE: f64 = 4.0;

/// Inputs shared by every command besides the configuration itself.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub config_bytes: Vec<u8>,
    pub seed: u64,
    pub replicates: u64,
}

fn core(context: &'static str) -> impl Fn(orthofield::Error) -> CliError {
    move |e| CliError::from_core(e, context)
}

fn config_string(c: &orthofield::innovation::Configuration) -> String {
    c.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Rows `(prefix.., configuration, value)` over the window of `f`, or `None` past `max_rows`.
fn table_rows(f: &Functional, law: &InnovationLaw, max_rows: u64) -> Option<Vec<(String, f64)>> {
    let sites = f.window();
    check_cap(law.len(), sites.len(), max_rows).ok()?;
    let configs = enumerate_configs(&sites, law, max_rows).ok()?;
    Some(configs.map(|c| (config_string(&c), f.evaluate(&c).expect("window covers the functional"))).collect())
}

fn index_section(name: &str, terms: &std::collections::BTreeMap<LatticeIndex, f64>) -> Section {
    let mut s = Section::new(name, &["index", "value"]);
    for (i, v) in terms {
        s.push(vec![i.to_string().into(), (*v).into()]);
    }
    s
}

pub fn describe(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Report, CliError> {
    let law = cfg.law()?;
    let (f, label) = cfg.functional(&law)?;
    let profile = full_profile(&f, &law).map_err(core("describe"))?;
    let kernel = martingale_kernel(&f, &law).map_err(core("describe"))?;

    let mut report = Report::new("describe", &ctx.config_bytes, ctx.seed);
    report.meta("functional", &label);
    report.meta("dimension", cfg.dimension);

    let mut summary = Section::new("summary", &["quantity", "value"]);
    let window = f.window();
    summary.push(vec!["window_size".into(), window.len().into()]);
    summary.push(vec!["l2_norm".into(), f.l2_norm(&law).into()]);
    summary.push(vec!["hannan_total".into(), profile.hannan_total.into()]);
    summary.push(vec!["delta_total".into(), profile.delta_total.into()]);
    summary.push(vec!["wm_total".into(), profile.wm_total.into()]);
    summary.push(vec!["sigma2".into(), profile.sigma2.into()]);
    report.add(summary);

    let mut w = Section::new("window", &["site"]);
    for s in &window {
        w.push(vec![s.to_string().into()]);
    }
    report.add(w);
    report.add(index_section("hannan", &profile.hannan_terms));
    report.add(index_section("delta", &profile.delta_terms));
    report.add(index_section("wm", &profile.wm_terms));

    let mut d0_window = Section::new("d0_window", &["position", "site"]);
    for (k, s) in kernel.d0.window().iter().enumerate() {
        d0_window.push(vec![k.into(), s.to_string().into()]);
    }
    report.add(d0_window);
    let mut d0 = Section::new("d0_table", &["configuration", "value"]);
    match table_rows(&kernel.d0, &law, cfg.describe.max_table_rows) {
        Some(rows) => rows.into_iter().for_each(|(c, v)| d0.push(vec![c.into(), v.into()])),
        None => report.meta("d0_table", "omitted: exceeds describe.max_table_rows"),
    }
    report.add(d0);
    Ok(report)
}

/// Smallest `M >= 1` with the window inside `[-M, M]^d`.
fn default_order(f: &Functional) -> i32 {
    f.window().iter().flat_map(|s| s.coords().iter().map(|c| c.abs())).max().unwrap_or(0).max(1)
}

pub fn decompose(cfg: &ExperimentConfig, ctx: &RunContext, m_override: Option<i32>, auto_center: bool) -> Result<Report, CliError> {
    let law = cfg.law()?;
    let (g, label) = cfg.functional(&law)?;
    let m = m_override.or(cfg.decompose.m).unwrap_or_else(|| default_order(&g));
    if m < 1 {
        return Err(CliError::config(format!("decompose.m: must be positive, got {m}")));
    }
    let auto_center = auto_center || cfg.decompose.auto_center;
    let f = if auto_center { center(&g, m, &law).map_err(core("decompose.auto_center"))? } else { g };
    let parts = core_decompose(&f, m, &law).map_err(|e| match e {
        orthofield::Error::CenteringViolated { .. } => {
            CliError::config(format!("decompose: {e}; set decompose.auto_center = true or choose a larger decompose.m"))
        }
        other => CliError::from_core(other, "decompose"),
    })?;
    let d = cfg.dimension;
    let max_rows = cfg.decompose.max_table_rows.unwrap_or(cfg.describe.max_table_rows);

    let mut report = Report::new("decompose", &ctx.config_bytes, ctx.seed);
    report.meta("functional", &label);
    report.meta("dimension", d);
    report.meta("order_m", m);
    report.meta("auto_center", auto_center);

    let mut checks = Section::new("checks", &["quantity", "value", "tolerance", "pass"]);
    for (name, value) in [
        ("reconstruction_residual", parts.residual),
        ("top_component_residual", parts.hd_residual),
        ("martingale_violation", parts.martingale_violation),
    ] {
        checks.push(vec![name.into(), value.into(), VERIFY_TOL.into(), (value <= VERIFY_TOL).into()]);
    }
    report.add(checks);

    let zero = Functional::zero(d);
    let mut axes = Section::new("martingale_axes", &["mask", "subset", "axis", "violation", "tolerance", "pass"]);
    let mut comps = Section::new("components", &["mask", "subset", "terms", "window_size", "l2_norm", "table_rows"]);
    let mut windows = Section::new("component_windows", &["mask", "position", "site"]);
    let mut tables = Section::new("component_tables", &["mask", "configuration", "value"]);
    for (mask, h) in parts.components.iter().enumerate() {
        let label = subset_label(mask as u32, d);
        for q in (0..d).filter(|q| mask & (1 << q) != 0) {
            let e = cond_expect(h, ConditioningIndex::halfspace(q, -1), &law).map_err(core("decompose"))?;
            let v = e.sup_distance(&zero, &law).map_err(core("decompose"))?;
            axes.push(vec![mask.into(), label.clone().into(), q.into(), v.into(), CHECK_TOL.into(), (v <= CHECK_TOL).into()]);
        }
        let rows = table_rows(h, &law, max_rows);
        let window = h.window();
        comps.push(vec![
            mask.into(),
            label.clone().into(),
            h.num_terms().into(),
            window.len().into(),
            h.l2_norm(&law).into(),
            rows.as_ref().map(Vec::len).into(),
        ]);
        for (k, s) in window.iter().enumerate() {
            windows.push(vec![mask.into(), k.into(), s.to_string().into()]);
        }
        for (c, v) in rows.into_iter().flatten() {
            tables.push(vec![mask.into(), c.into(), v.into()]);
        }
    }
    report.failed = axes.rows.iter().any(|r| r[5] == Cell::Bool(false));
    report.add(axes);
    report.add(comps);
    report.add(windows);
    report.add(tables);
    Ok(report)
}

fn point_label(t: &[f64]) -> String {
    let parts: Vec<String> = t.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

pub fn verify_clt(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Report, CliError> {
    let law = cfg.law()?;
    let (f, label) = cfg.functional(&law)?;
    let grids = cfg.grids()?;
    let pairs = cfg.pairs()?;
    let level = cfg.clt.level;
    if level != 0.05 && level != 0.01 {
        return Err(CliError::config(format!("clt.level: must be 0.05 or 0.01, got {level}")));
    }
    if cfg.clt.t_resolution < 1 {
        return Err(CliError::config("clt.t_resolution: must be positive"));
    }
    let kernel = martingale_kernel(&f, &law).map_err(core("verify-clt"))?;
    if kernel.sigma2 <= 0.0 {
        return Err(CliError::config("verify-clt: degenerate limit (sigma^2 = 0); use describe"));
    }
    let sigma = kernel.sigma2.sqrt();
    let reps = ctx.replicates;
    let gap_reps = cfg.clt.gap_replicates.unwrap_or(reps);

    let mut report = Report::new("verify-clt", &ctx.config_bytes, ctx.seed);
    report.meta("functional", &label);
    report.meta("dimension", cfg.dimension);
    report.meta("replicates", reps);
    report.meta("sigma2", crate::report::format_float(kernel.sigma2));

    let mut marginal = Section::new(
        "marginal",
        &["grid", "replicates", "sigma2", "ks_statistic", "ks_critical", "level", "ks_pass", "variance", "variance_se", "variance_z", "variance_pass", "mean", "mean_se"],
    );
    let mut cov = Section::new("covariance", &["grid", "s", "t", "target", "estimate", "se", "z", "pass"]);
    let mut gap = Section::new("approximation_gap", &["grid", "replicates", "mean", "q10", "q25", "median", "q75", "q90", "max"]);
    let mut per_rep = Section::new("replicates", &["grid", "replicate", "endpoint", "gap"]);

    for &n in &grids {
        let grid_label = n.to_string();
        let paths = sample_paths(&f, n, &law, reps, ctx.seed, cfg.clt.t_resolution).map_err(core("verify-clt"))?;
        let ends: Vec<f64> = paths.iter().map(PathSample::endpoint).collect();
        let standardized: Vec<f64> = ends.iter().map(|x| x / sigma).collect();
        let ks = ks_test(&standardized, normal_cdf, level).map_err(core("verify-clt"))?;
        let moments = moment_summary(&ends).map_err(core("verify-clt"))?;
        let var_z = (moments.var - kernel.sigma2) / moments.se_var;
        let var_pass = moments.var_within(kernel.sigma2, SE_TOLERANCE);
        report.failed |= !ks.pass || !var_pass;
        marginal.push(vec![
            grid_label.clone().into(),
            reps.into(),
            kernel.sigma2.into(),
            ks.statistic.into(),
            ks.critical_value.into(),
            level.into(),
            ks.pass.into(),
            moments.var.into(),
            moments.se_var.into(),
            var_z.into(),
            var_pass.into(),
            moments.mean.into(),
            moments.se_mean.into(),
        ]);

        for row in sheet_covariance_check(&paths, &pairs, kernel.sigma2).map_err(core("clt.pairs"))? {
            let pass = row.within(SE_TOLERANCE);
            report.failed |= !pass;
            cov.push(vec![
                grid_label.clone().into(),
                point_label(&row.s).into(),
                point_label(&row.t).into(),
                row.target.into(),
                row.estimate.into(),
                row.se.into(),
                row.z.into(),
                pass.into(),
            ]);
        }

        let gaps = if cfg.clt.gap {
            let g = approximation_gap(&f, n, &law, gap_reps, ctx.seed).map_err(core("verify-clt"))?;
            let s = g.summary;
            gap.push(vec![
                grid_label.clone().into(),
                gap_reps.into(),
                s.mean.into(),
                s.q10.into(),
                s.q25.into(),
                s.median.into(),
                s.q75.into(),
                s.q90.into(),
                s.max.into(),
            ]);
            g.samples
        } else {
            Vec::new()
        };

        if cfg.clt.per_replicate_rows {
            for (r, end) in ends.iter().enumerate() {
                per_rep.push(vec![grid_label.clone().into(), r.into(), (*end).into(), gaps.get(r).copied().into()]);
            }
        }
    }
    report.add(marginal);
    report.add(cov);
    report.add(gap);
    report.add(per_rep);
    Ok(report)
}

pub fn counterexample_report(cfg: Option<&ExperimentConfig>, ctx: &RunContext) -> Result<Report, CliError> {
    let truncations = cfg.map(|c| c.counterexample.truncations.clone()).unwrap_or_else(|| crate::config::CounterexampleSpec::default().truncations);
    if truncations.is_empty() {
        return Err(CliError::config("counterexample.truncations: at least one N is required"));
    }
    let r = counterexample::report(&truncations).map_err(core("counterexample.truncations"))?;
    let mut report = Report::new("counterexample", &ctx.config_bytes, ctx.seed);
    report.meta("max_exact_n", counterexample::MAX_EXACT_N);

    let mut rows = Section::new(
        "counterexample",
        &["N", "mode", "hannan_total", "hannan_bound", "delta_total", "delta_lower_bound", "site_bound_slack", "site_bound_ok"],
    );
    for row in &r.rows {
        let ok = row.site_bound_slack.map(|s| s >= -1e-12);
        report.failed |= ok == Some(false) || row.hannan_total > row.hannan_bound;
        rows.push(vec![
            row.n.into(),
            row.mode.as_str().into(),
            row.hannan_total.into(),
            row.hannan_bound.into(),
            row.delta_total.into(),
            row.delta_lower_bound.into(),
            row.site_bound_slack.into(),
            ok.into(),
        ]);
    }
    report.add(rows);
    let mut growth = Section::new("growth", &["N", "delta_ratio_2N_over_N"]);
    for (n, ratio) in &r.growth_ratios {
        growth.push(vec![(*n).into(), (*ratio).into()]);
    }
    report.add(growth);
    Ok(report)
}

struct SuiteOutcome {
    name: &'static str,
    cases: usize,
    violation: f64,
    tolerance: f64,
}

fn suite_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(orthofield::innovation::mix64(seed ^ salt))
}

/// Exact identity suites on seeded random functionals. `tolerance` replaces every
/// suite's own tolerance when given.
pub fn selftest(ctx: &RunContext, tolerance: Option<f64>) -> Result<Report, CliError> {
    // asymmetric and uncentered, so the identities are exercised in floating point
    let law = InnovationLaw::new(vec![-1.0, 0.5, 2.0], vec![0.3, 0.5, 0.2]).expect("selftest law");
    let err = core("selftest");
    let mut outcomes = Vec::new();

    let mut rng = suite_rng(ctx.seed, 1);
    let shape = RandomShape::new(2, 1);
    let pairs: Vec<(Functional, Functional)> =
        (0..20).map(|_| (random_functional(&mut rng, &shape, &law), random_functional(&mut rng, &shape, &law))).collect();
    let box2 = Rectangle::new(LatticeIndex::splat(2, -1), LatticeIndex::splat(2, 1)).expect("box");
    let r = lemma24_suite_many(&pairs, &indices_of(&box2), &law).map_err(&err)?;
    outcomes.push(SuiteOutcome { name: "projection_identities", cases: pairs.len(), violation: r.max_violation(), tolerance: 1e-10 });

    let mut rng = suite_rng(ctx.seed, 2);
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        for _ in 0..10 {
            let f = random_centered_functional(&mut rng, &RandomShape::new(d, 2), &law);
            let parts = projective_decomposition(&f, &law).map_err(&err)?;
            worst = worst.max(recompose(d, &parts).sup_distance(&f, &law).map_err(&err)?);
        }
    }
    outcomes.push(SuiteOutcome { name: "projective_completeness", cases: 30, violation: worst, tolerance: 1e-10 });

    let mut rng = suite_rng(ctx.seed, 3);
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        for _ in 0..10 {
            let g = random_functional(&mut rng, &RandomShape::new(d, 2), &law);
            let f = center(&g, 2, &law).map_err(&err)?;
            match core_decompose(&f, 2, &law) {
                Ok(p) => worst = worst.max(p.residual).max(p.hd_residual).max(p.martingale_violation),
                Err(orthofield::Error::VerificationFailed(_)) => worst = f64::INFINITY,
                Err(e) => return Err(err(e)),
            }
        }
    }
    outcomes.push(SuiteOutcome { name: "coboundary_round_trip", cases: 30, violation: worst, tolerance: VERIFY_TOL });

    let mut rng = suite_rng(ctx.seed, 4);
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        for _ in 0..10 {
            let f = random_centered_functional(&mut rng, &RandomShape::new(d, 1), &law);
            let k = martingale_kernel(&f, &law).map_err(&err)?;
            let p0 = project_full(&k.d0, &LatticeIndex::zero(d), &law).map_err(&err)?;
            let v = k.martingale_violation(&law).map_err(&err)?.max(p0.sup_distance(&k.d0, &law).map_err(&err)?);
            worst = worst.max(if k.is_adapted() { v } else { f64::INFINITY });
        }
    }
    outcomes.push(SuiteOutcome { name: "martingale_kernel", cases: 30, violation: worst, tolerance: 1e-10 });

    let mut rng = suite_rng(ctx.seed, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(1..=3);
        let side = rng.random_range(1..=6);
        let rect = Rectangle::from_extent(LatticeIndex::splat(d, side)).expect("box");
        let a = Grid::from_fn(rect, |_| rng.random_range(0.0..1.0));
        let out = lemma63_inequality(&a).map_err(&err)?;
        worst = worst.max(out.rhs - out.lhs);
    }
    outcomes.push(SuiteOutcome { name: "lemma63_arrays", cases: 100, violation: worst.max(0.0), tolerance: 0.0 });

    let mut report = Report::new("selftest", &ctx.config_bytes, ctx.seed);
    if let Some(t) = tolerance {
        report.meta("tolerance_override", crate::report::format_float(t));
    }
    let mut s = Section::new("suites", &["suite", "cases", "max_violation", "tolerance", "pass"]);
    for o in outcomes {
        let tol = tolerance.unwrap_or(o.tolerance);
        let pass = o.violation <= tol;
        report.failed |= !pass;
        s.push(vec![o.name.into(), o.cases.into(), o.violation.into(), tol.into(), pass.into()]);
    }
    report.add(s);
    Ok(report)
}
