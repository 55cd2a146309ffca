use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trisre_cli::{run, DiffStatus, ExperimentConfig, RunReport};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn trisre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trisre")).args(args).output().expect("binary runs")
}

fn report_at(dir: &Path) -> RunReport {
    RunReport::from_json(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn value(r: &RunReport, name: &str) -> f64 {
    r.results.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no record {name}")).value
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(config_path("")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let c = ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(path.file_stem().unwrap().to_str().unwrap(), c.pipeline.as_str());
    }
}

#[test]
fn solve_index_recovers_lognormal_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = trisre(&[
        "solve-index",
        "--config",
        config_path("solve_index.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report_at(dir.path());
    assert!(r.pass);
    assert!((value(&r, "alpha2") - 2.0).abs() < 1e-10);
    assert!(value(&r, "alpha2_residual").abs() <= 1e-10);
    assert!(dir.path().join("timing.json").exists());
}

#[test]
fn invalid_config_exits_2_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config_path("solve_index.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["law"]["a4"]["sigma"] = "wide".into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = trisre(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/law/a4/sigma"));

    let out = trisre(&["tails", "--config", config_path("solve_index.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/tolerances/n_se"));

    assert_eq!(trisre(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn reports_are_identical_across_worker_counts() {
    let text = std::fs::read_to_string(config_path("tails.json")).unwrap();
    let mut c = ExperimentConfig::from_json(&text).unwrap();
    c.sim.n_draws = 40_000;
    c.workers = 1;
    let a = run(&c).unwrap();
    c.workers = 4;
    let b = run(&c).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert_eq!(a.artifacts, b.artifacts);
    assert_eq!(a.report.config_digest, b.report.config_digest);
}

#[test]
fn step_errors_are_recorded_not_fatal() {
    let text = std::fs::read_to_string(config_path("constants.json")).unwrap();
    let mut c = ExperimentConfig::from_json(&text).unwrap();
    // far too few draws for the plateau
    c.sim.n_draws = 200;
    let out = run(&c).unwrap();
    assert!(!out.report.pass);
    assert_eq!(out.report.errors.len(), 1);
    assert_eq!(out.report.errors[0].step, "constants");
    assert!(out.report.results.iter().any(|r| r.name == "constants.error" && r.pass == Some(false)));
}

#[test]
fn diff_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("solve_index.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, seed) in [(&a, "1"), (&b, "2")] {
        let out = trisre(&["solve-index", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let ra = a.join("report.json");
    let rb = b.join("report.json");
    // the solver is deterministic, so only the seed differs and no record changes
    let out = trisre(&["diff", ra.to_str().unwrap(), rb.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_ne!(report_at(&a).config_digest, report_at(&b).config_digest);

    let mut other = report_at(&b);
    other.pipeline = "tails".into();
    let rc = dir.path().join("other.json");
    std::fs::write(&rc, other.to_json()).unwrap();
    assert_eq!(trisre(&["diff", ra.to_str().unwrap(), rc.to_str().unwrap()]).status.code(), Some(2));

    let mut shifted = report_at(&b);
    shifted.results[0].value += 1.0;
    shifted.results.pop();
    std::fs::write(&rc, shifted.to_json()).unwrap();
    let a_report = report_at(&a);
    let d = trisre_cli::compare_reports(&a_report, &shifted).unwrap();
    assert!(d.iter().any(|e| e.status == DiffStatus::OnlyInA));
    assert_eq!(trisre(&["diff", ra.to_str().unwrap(), rc.to_str().unwrap()]).status.code(), Some(1));
}
