use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn lmsnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmsnav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_smoke(out: &Path, extra: &[&str]) -> Output {
    let config = scenario("smoke.json");
    let mut args = vec![
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    lmsnav(&args)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn smoke_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_smoke(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("epochs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(dir.path().join("cn0.csv").exists());
    let s = summary(dir.path());
    assert_eq!(s["epochs_total"], 100);
    assert_eq!(s["filter"], "ekf");
    assert_eq!(s["seed"], 7);
    assert_eq!(s["config_digest"].as_str().unwrap().len(), 64);
    assert!(s["tool_version"].is_string());
}

#[test]
fn missing_config_is_runtime_error_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = lmsnav(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"), "{}", stderr(&o));
}

#[test]
fn invalid_config_is_runtime_error_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"duration_s": -5, "dt_s": 0.1}"#).unwrap();
    let o = lmsnav(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duration_s"));
}

#[test]
fn filter_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_smoke(
        dir.path(),
        &["--filter", "ukf", "--seed", "11", "--channel", "rayleigh"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path());
    assert_eq!(s["filter"], "ukf");
    assert_eq!(s["seed"], 11);
    assert_eq!(s["channel_model"], "rayleigh");
}

#[test]
fn raim_off_clears_detections() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_smoke(dir.path(), &["--raim", "off"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(summary(dir.path())["detections"], 0);
    let csv = std::fs::read_to_string(dir.path().join("epochs.csv")).unwrap();
    // unavailable statistic and threshold are empty cells
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(12) == Some("")));
}

#[test]
fn conflicting_integrity_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_smoke(dir.path(), &["--raim", "off", "--fde", "on"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--fde"));
}

#[test]
fn unknown_flag_is_usage_error_naming_it() {
    let o = lmsnav(&["run", "--config", "x.json", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--bogus-flag"));
}

#[test]
fn bad_flag_value_is_usage_error() {
    let o = lmsnav(&["run", "--config", "x.json", "--filter", "pf"]);
    assert_eq!(o.status.code(), Some(1));
    let o = lmsnav(&[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_on_every_subcommand() {
    for args in [
        vec!["--help"],
        vec!["run", "--help"],
        vec!["montecarlo", "--help"],
        vec!["plot", "--help"],
    ] {
        let o = lmsnav(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"), "{args:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_smoke(a.path(), &[]).status.code(), Some(0));
    assert_eq!(run_smoke(b.path(), &[]).status.code(), Some(0));
    for f in ["epochs.csv", "cn0.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn plot_every_series() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_smoke(dir.path(), &[]).status.code(), Some(0));
    let input = dir.path().join("epochs.csv");
    for (series, lines) in [("error_enu", 3), ("raim_statistic", 2), ("cn0", 1)] {
        let out = dir.path().join(format!("{series}.svg"));
        let o = lmsnav(&[
            "plot",
            "--input",
            input.to_str().unwrap(),
            "--series",
            series,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{series}: {}", stderr(&o));
        let svg = std::fs::read_to_string(&out).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.matches(r#"class="series""#).count() >= lines, "{series}");
        assert_eq!(svg.matches(r#"class="outage""#).count(), 1, "{series}");
    }
}

#[test]
fn plot_missing_input_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.svg");
    let o = lmsnav(&[
        "plot",
        "--input",
        "nowhere/epochs.csv",
        "--series",
        "cn0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere"));
}

#[test]
fn montecarlo_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = scenario("smoke.json");
    let o = lmsnav(&[
        "montecarlo",
        "--config",
        config.to_str().unwrap(),
        "--runs",
        "3",
        "--seed",
        "40",
        "--jobs",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("montecarlo.json")).unwrap()).unwrap();
    let seeds: Vec<u64> = report["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, vec![40, 41, 42]);
    assert!(report["aggregates"]["rmse_3d"]["median"].is_number());
    assert_eq!(report["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn montecarlo_zero_runs_is_usage_error() {
    let config = scenario("smoke.json");
    let o = lmsnav(&["montecarlo", "--config", config.to_str().unwrap(), "--runs", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
