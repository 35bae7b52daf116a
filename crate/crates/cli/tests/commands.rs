use std::path::{Path, PathBuf};
use std::process::Command;

use orthofield_cli::report::{Cell, Report};
use orthofield_cli::{execute, Cli};

use clap::Parser;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Report {
    let cli = Cli::try_parse_from(std::iter::once("orthofield").chain(args.iter().copied())).unwrap();
    execute(&cli).map(|(r, _, _)| r).unwrap_or_else(|e| panic!("{args:?}: {e}"))
}

fn summary_value(r: &Report, quantity: &str) -> f64 {
    let s = r.section("summary").unwrap();
    let row = (0..s.rows.len()).find(|&k| s.get(k, "quantity") == Some(&Cell::Text(quantity.into()))).unwrap();
    s.get(row, "value").unwrap().as_f64().unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_orthofield")).args(args).output().unwrap().status.code().unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn describe_linear_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    for a in [0.5f64, -0.25, 2.0] {
        let cfg = write_config(dir.path(), &format!("dimension = 2\n[functional]\nbuiltin = \"linear\"\na = {a}\n"));
        let r = run(&["--config", cfg.to_str().unwrap(), "describe"]);
        // P_0 eps_0 = eps_0 and P_0 U_{e_1} (a eps_{-e_1}) = a eps_0
        assert!((summary_value(&r, "hannan_total") - (1.0 + a.abs())).abs() < 1e-12);
        assert!((summary_value(&r, "sigma2") - (1.0 + a).powi(2)).abs() < 1e-12);
        assert!((summary_value(&r, "l2_norm") - (1.0 + a * a).sqrt()).abs() < 1e-12);
        assert_eq!(r.section("d0_table").unwrap().rows.len(), 2);
    }
}

#[test]
fn describe_identity_and_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 3\n[functional]\nbuiltin = \"identity\"\n");
    let r = run(&["--config", cfg.to_str().unwrap(), "describe"]);
    assert_eq!(summary_value(&r, "sigma2"), 1.0);
    assert_eq!(summary_value(&r, "window_size"), 1.0);

    let cfg = write_config(dir.path(), "dimension = 1\n[functional]\nbuiltin = \"counterexample:3\"\n");
    let r = run(&["--config", cfg.to_str().unwrap(), "describe"]);
    let expected = (1.0f64 + 0.25 + 1.0 / 9.0).sqrt();
    assert!((summary_value(&r, "hannan_total") - expected).abs() < 1e-12);
    assert_eq!(summary_value(&r, "window_size"), 7.0);
}

#[test]
fn decompose_telescope_is_a_pure_coboundary() {
    let cfg = configs_dir().join("decompose_telescope.toml");
    let r = run(&["--config", cfg.to_str().unwrap(), "decompose"]);
    let windows = r.section("component_windows").unwrap();
    assert_eq!(windows.rows, vec![vec![Cell::Int(0), Cell::Int(0), Cell::Text("(-1)".into())]]);
    let tables = r.section("component_tables").unwrap();
    let h_empty: Vec<(String, f64)> = tables
        .rows
        .iter()
        .filter(|row| row[0] == Cell::Int(0))
        .map(|row| (row[1].as_str().unwrap().to_string(), row[2].as_f64().unwrap()))
        .collect();
    assert_eq!(h_empty, vec![("-1".to_string(), -1.0), ("1".to_string(), 1.0)]);
    let comps = r.section("components").unwrap();
    assert_eq!(comps.get(1, "l2_norm").unwrap().as_f64(), Some(0.0));
    assert!(!r.failed);
}

#[test]
fn decompose_requires_centering() {
    let dir = tempfile::tempdir().unwrap();
    let text = "dimension = 1\n[functional]\nterms = [{ coeff = 1.0, factors = [{ site = [2], kind = \"value\" }] }]\n[decompose]\nm = 1\n";
    let cfg = write_config(dir.path(), text);
    let cli = Cli::try_parse_from(["orthofield", "--config", cfg.to_str().unwrap(), "decompose"]).unwrap();
    let err = execute(&cli).unwrap_err();
    assert!(err.message.contains("auto_center"), "{}", err.message);
    let r = run(&["--config", cfg.to_str().unwrap(), "decompose", "--auto-center", "--m", "2"]);
    assert!(!r.failed);
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let a = run(&["selftest"]);
    assert!(!a.failed);
    let suites = a.section("suites").unwrap();
    assert_eq!(suites.rows.len(), 5);
    for k in 0..suites.rows.len() {
        assert!(suites.get(k, "max_violation").unwrap().as_f64().unwrap() <= 1e-9);
    }
    let b = run(&["selftest"]);
    assert_eq!(a.render(orthofield_cli::config::Format::Csv).unwrap(), b.render(orthofield_cli::config::Format::Csv).unwrap());
}

#[test]
fn selftest_negative_control() {
    let r = run(&["selftest", "--tolerance", "1e-30"]);
    assert!(r.failed);
    let suites = r.section("suites").unwrap();
    assert!((0..suites.rows.len()).any(|k| suites.get(k, "pass") == Some(&Cell::Bool(false))));
}

#[test]
fn counterexample_json_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs_dir().join("counterexample.toml");
    assert_eq!(exit_code(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "counterexample"]), 0);
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["metadata"]["command"], "counterexample");
    let rows = v["sections"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[7][1], "analytic");
    assert!(rows[7][4].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad = write_config(dir.path(), "dimension = 2\nunknown_key = 1\n");
    assert_eq!(exit_code(&["--config", bad.to_str().unwrap(), "--out", out, "describe"]), 1);
    assert_eq!(exit_code(&["--out", out, "describe"]), 1);
    assert_eq!(exit_code(&["--out", out, "--threads", "0", "selftest"]), 1);

    let huge = dir.path().join("huge.toml");
    std::fs::write(&huge, "dimension = 2\n[functional]\nbuiltin = \"identity\"\n[clt]\ngrids = [[20000, 20000]]\n").unwrap();
    assert_eq!(exit_code(&["--config", huge.to_str().unwrap(), "--out", out, "verify-clt"]), 2);

    assert_eq!(exit_code(&["--out", out, "selftest", "--tolerance", "1e-30"]), 3);
    assert_eq!(exit_code(&["--out", out, "selftest"]), 0);
}

#[test]
fn metadata_carries_hash_and_seed() {
    let cfg = configs_dir().join("describe_linear.toml");
    let r = run(&["--config", cfg.to_str().unwrap(), "--seed", "99", "describe"]);
    let meta: std::collections::HashMap<_, _> = r.metadata.iter().cloned().collect();
    assert_eq!(meta["seed"], "99");
    assert_eq!(meta["config_sha256"].len(), 64);
}
