use std::path::{Path, PathBuf};
use std::process::Command as Process;

use mrp_cli::config::ExperimentConfig;
use mrp_cli::{execute, Command};
use mrp_core::{systems, MapSystem};
use serde_json::Value;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name)).unwrap()
}

/// Shrinks every experiment so a full `all` run takes well under a second.
fn small(mut cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.oracle.ell_max = 3;
    cfg.oracle.geometric_ell_max = 4;
    cfg.oracle.grid_points = 9;
    cfg.split.horizon = 6;
    cfg.operator.n_steps = 6;
    cfg.operator.particles = 2000;
    cfg.operator.target_samples = 2000;
    cfg.sync.trials = 10;
    cfg.sync.n_max = 25;
    cfg.sync.cloud_size = 32;
    cfg.contract.trials = 4;
    cfg.weak_hyp.trials = 200;
    cfg.coding.invariance_samples = 100;
    cfg.ergodic.n = 20_000;
    cfg.ergodic.reference_samples = 2000;
    cfg
}

fn same_system(a: &MapSystem, b: &MapSystem) {
    assert_eq!(a.exact_ambient(), b.exact_ambient());
    assert_eq!(a.exact_matrix_rows(), b.exact_matrix_rows());
    assert_eq!(a.maps().len(), b.maps().len());
    for (x, y) in a.maps().iter().zip(b.maps()) {
        assert_eq!(x.exact, y.exact);
    }
}

#[test]
fn shipped_configs_match_reference_systems() {
    type Reference = fn() -> MapSystem;
    let cases: [(&str, Reference); 5] = [
        ("cantor_iid", systems::cantor_iid),
        ("cantor_markov", systems::cantor_markov),
        ("diagonal_2d", systems::diagonal_2d),
        ("moebius_pair", systems::moebius_pair),
        ("identity_control", systems::identity_control),
    ];
    for (name, reference) in cases {
        same_system(&load(name).system.build().unwrap(), &reference());
    }
}

#[test]
fn cantor_all_succeeds_with_rate_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(small(load("cantor_iid")), Command::All, None, Some(dir.path().into()), false).unwrap();
    assert_eq!(outcome.exit_code(), 0, "{:?}", outcome.failures);
    let r = &outcome.summary["results"];
    let q = r["sync"]["max_q_hat"].as_f64().unwrap();
    assert!((q - 1.0 / 3.0).abs() < 1e-9, "q = {q}");
    let verdicts = r["oracle"]["coordinates"][0]["verdicts"].as_object().unwrap();
    assert_eq!(verdicts.keys().collect::<Vec<_>>(), ["holds"]);
    assert!(r["oracle"]["geometric_verdicts"].as_array().unwrap().iter().all(|v| v == "holds"));
    assert_eq!(r["split-check"]["horizon"]["status"], "certified");
    for f in outcome.summary["files"].as_array().unwrap() {
        assert!(dir.path().join(f.as_str().unwrap()).is_file(), "{f}");
    }
    let curves = std::fs::read_to_string(dir.path().join("sync_curves.csv")).unwrap();
    assert!(curves.starts_with("trial,n,upper,lower\n"));
}

#[test]
fn exact_oracle_agrees_with_float_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let float = execute(small(load("moebius_pair")), Command::Oracle, None, Some(dir.path().join("f")), false).unwrap();
    let exact = execute(small(load("moebius_pair")), Command::Oracle, None, Some(dir.path().join("e")), true).unwrap();
    assert_eq!(float.exit_code(), 0);
    assert_eq!(exact.exit_code(), 0);
    let verdicts = |o: &mrp_cli::Outcome| o.summary["results"]["oracle"]["coordinates"].clone();
    assert_eq!(verdicts(&float), verdicts(&exact));
    assert_eq!(exact.summary["oracle_arithmetic"], "exact-rational");
}

#[test]
fn control_system_skips_what_does_not_apply() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(small(load("identity_control")), Command::All, None, Some(dir.path().into()), false).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    let r = &outcome.summary["results"];
    for block in ["split-check", "oracle", "operator", "ergodic"] {
        assert!(r[block]["skipped"].is_string(), "{block}: {}", r[block]);
    }
    assert_eq!(r["weak-hyp"]["fraction"], 0.0);
    assert_eq!(r["sync"]["fraction_contracting"], 0.0);
}

#[test]
fn seed_changes_curves_but_not_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: Option<u64>, sub: &str| {
        let out = dir.path().join(sub);
        let o = execute(small(load("cantor_markov")), Command::All, seed, Some(out.clone()), false).unwrap();
        (o, std::fs::read_to_string(out.join("sync_curves.csv")).unwrap())
    };
    let (a, curves_a) = run(None, "a");
    let (b, curves_b) = run(Some(99), "b");
    assert_ne!(curves_a, curves_b);
    assert_eq!(b.summary["seed"], 99);
    let verdicts = |o: &mrp_cli::Outcome| {
        let r = &o.summary["results"];
        (r["oracle"]["coordinates"].clone(), r["split-check"]["horizon"]["status"].clone(), o.exit_code())
    };
    assert_eq!(verdicts(&a), verdicts(&b));
}

#[test]
fn reports_are_bit_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let files = |sub: &str| {
        let out = dir.path().join(sub);
        let o = execute(small(load("diagonal_2d")), Command::All, None, Some(out.clone()), false).unwrap();
        o.summary["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| std::fs::read(out.join(f.as_str().unwrap())).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(files("first"), files("second"));
}

fn mrp(args: &[&str]) -> (i32, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_mrp")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn non_stochastic_row_exits_two_naming_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config_path("cantor_markov"))
        .unwrap()
        .replace("[\"0.2\", \"0.8\"]", "[\"0.2\", \"0.7\"]");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let (code, stderr) = mrp(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "stationary"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("row 2"), "{stderr}");
}

#[test]
fn missing_config_exits_two() {
    let (code, stderr) = mrp(&["stationary"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--config"), "{stderr}");
    let (code, _) = mrp(&["--config", "/nonexistent/mrp.toml", "stationary"]);
    assert_eq!(code, 2);
}

fn write_variant(dir: &Path, name: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(config_path("cantor_iid")).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{from}");
        text = text.replace(from, to);
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn overlapping_images_are_a_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    // x/2 and x/2 + 1/4: the witness images [0, 1/4] and [1/4, 1/2] touch.
    let cfg = write_variant(
        dir.path(),
        "overlap.toml",
        &[("matrix = [[\"1/3\"]]", "matrix = [[\"1/2\"]]"), ("offset = [\"2/3\"]", "offset = [\"1/4\"]")],
    );
    let out = dir.path().join("out");
    let (code, stderr) = mrp(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "split-check"]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("overlap"), "{stderr}");
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["exit_code"], 1);
    assert_eq!(summary["results"]["split-check"]["horizon"]["status"], "violated");
}

#[test]
fn malformed_witness_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_variant(dir.path(), "mismatch.toml", &[("b = \"2,1\"", "b = \"1,2\"")]);
    let out = dir.path().join("out");
    let (code, stderr) = mrp(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "split-check"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("different symbols"), "{stderr}");
}
