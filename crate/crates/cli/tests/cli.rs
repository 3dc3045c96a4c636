//! End-to-end tests of the `flocksim` binary: artifact emission, exit codes,
//! and the gain-validation gate.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flocksim_core::bundled_scenario;

fn flocksim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flocksim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_bundled_scenario_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = flocksim(
        &["simulate", "example1_attack_free", "--output-dir", "out", "--horizon-override", "15000"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    for name in [
        "trace.csv",
        "detection.csv",
        "residual_agent_1.csv",
        "residual_agent_2.csv",
        "residual_agent_3.csv",
        "bounds.txt",
        "summary.txt",
    ] {
        assert!(dir.path().join("out").join(name).exists(), "missing artifact {name}");
    }
    let summary = stdout(&out);
    assert!(summary.contains("scenario = example1_attack_free"));
    assert!(summary.contains("threshold_source = auto-calibrated"));
    assert!(summary.contains("reference_threshold = 0.44"));

    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    assert!(header.starts_with("step,t,"));
    assert_eq!(trace.lines().count(), 15001, "header plus one row per step");
}

#[test]
fn gain_validation_report_flags_the_coupling_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = flocksim(&["validate-gains", "example1_attack_free"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report = stdout(&out);
    assert!(report.contains("[FAIL] coupling-gain bound"));
    assert!(report.contains("[PASS] error-feedback bound"));
    assert!(report.contains("margin ="));
    assert!(report.contains("overall = FAIL"));
}

#[test]
fn simulate_refuses_unvalidated_gains_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let text = bundled_scenario("example1_attack_free")
        .unwrap()
        .replace("force = true", "force = false");
    let path = dir.path().join("strict.toml");
    fs::write(&path, text).unwrap();

    let refused = flocksim(
        &["simulate", "strict.toml", "--output-dir", "a", "--horizon-override", "12000"],
        dir.path(),
    );
    assert_eq!(refused.status.code(), Some(2));
    assert!(stderr(&refused).contains("gain validation failed"));

    let forced = flocksim(
        &[
            "simulate",
            "strict.toml",
            "--force",
            "--output-dir",
            "b",
            "--horizon-override",
            "12000",
        ],
        dir.path(),
    );
    assert_eq!(forced.status.code(), Some(0), "stderr: {}", stderr(&forced));
    assert!(stderr(&forced).contains("--force"));
}

#[test]
fn calibrate_refuses_scenarios_with_attacks() {
    let dir = tempfile::tempdir().unwrap();
    let out = flocksim(&["calibrate", "example1_case1"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("attack"));
}

#[test]
fn calibrated_bounds_file_feeds_a_later_run() {
    let dir = tempfile::tempdir().unwrap();
    let cal = flocksim(
        &["calibrate", "example1_attack_free", "--output-dir", ".", "--horizon-override", "15000"],
        dir.path(),
    );
    assert_eq!(cal.status.code(), Some(0), "stderr: {}", stderr(&cal));
    assert!(stdout(&cal).contains("threshold = "));
    assert!(stdout(&cal).contains("reference threshold 0.44"));
    assert!(dir.path().join("bounds.txt").exists());

    // Point a copy of the scenario at the written file; the summary should
    // name it as the threshold source instead of calibrating again.
    let text = bundled_scenario("example1_attack_free")
        .unwrap()
        .replace("source = \"auto\"", "source = \"file\"\nfile = \"bounds.txt\"");
    let path = dir.path().join("from_file.toml");
    fs::write(&path, text).unwrap();
    let sim = flocksim(
        &["simulate", "from_file.toml", "--output-dir", "out", "--horizon-override", "12000"],
        dir.path(),
    );
    assert_eq!(sim.status.code(), Some(0), "stderr: {}", stderr(&sim));
    assert!(stdout(&sim).contains("threshold_source = bounds file"));
}

#[test]
fn detectability_reports_guaranteed_detection() {
    let dir = tempfile::tempdir().unwrap();
    let out = flocksim(
        &["detectability", "example1_case1", "actuator_agent1", "--output-dir", "out"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("guaranteed_detectable = yes"));
    assert!(report.contains("attack_id = actuator_agent1"));
    assert!(dir.path().join("out/detectability_actuator_agent1.csv").exists());
}

#[test]
fn unknown_attack_id_is_a_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let out = flocksim(&["detectability", "example1_case1", "nosuch"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("nosuch"));
}

#[test]
fn unknown_scenario_lists_the_bundled_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = flocksim(&["simulate", "no_such_thing"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("example1_attack_free"));
    assert!(err.contains("example1_case3"));
}

#[test]
fn repeated_runs_write_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = flocksim(
            &["simulate", "example1_case2", "--output-dir", sub, "--horizon-override", "15000"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    let a = fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b, "trace bytes differ between identical runs");
}
