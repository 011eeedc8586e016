//! Subcommand smoke tests against the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn optomo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn optomo")
}

fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = optomo(dir, args);
    assert!(
        out.status.success(),
        "optomo {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn state_writes_descriptor_and_covariance() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["state", "--kind", "squeezed", "--r", "0.5", "--out", "s.json"]);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["cov"].as_array().unwrap().len(), 4);
    let s11 = doc["cov"][0][0].as_f64().unwrap();
    assert!((s11 - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
}

#[test]
fn unknown_state_kind_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = optomo(dir.path(), &["state", "--kind", "cat"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown state kind"));
}

#[test]
fn full_pipeline_thermal_passes() {
    // a thermal state keeps every inequality strictly interior, so the
    // sampled verdicts are clean passes rather than saturated borderline calls
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["state", "--kind", "thermal", "--nbar1", "0.5", "--nbar2", "0.3", "--out", "v.json"]);
    run_ok(
        dir.path(),
        &["sample", "--state", "v.json", "--schedule", "cubic", "--n", "20000", "--seed", "3", "--out", "ds"],
    );
    assert!(dir.path().join("ds.jsonl").exists());
    assert!(dir.path().join("ds.meta.json").exists());

    run_ok(dir.path(), &["moments", "--data", "ds", "--max-degree", "3", "--out", "m.json"]);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(doc["tables"].as_array().unwrap().len(), 2);

    let out = optomo(dir.path(), &["check", "--data", "ds", "--out", "chk.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analytic_check_needs_no_dataset() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["state", "--kind", "thermal", "--nbar1", "0.5", "--nbar2", "0.2", "--out", "t.json"]);
    let out = optomo(dir.path(), &["check", "--analytic", "--state", "t.json", "--out", "chk.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("chk.json")).unwrap())
            .unwrap();
    assert_eq!(doc["summary"]["pass"], true);
}

#[test]
fn missing_source_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = optomo(dir.path(), &["check"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data"));
}

#[test]
fn reconstruct_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["state", "--kind", "vacuum", "--out", "v.json"]);
    run_ok(
        dir.path(),
        &[
            "reconstruct", "--analytic", "--state", "v.json", "--order", "6",
            "--k-len", "25", "--x-len", "41", "--out", "rec",
        ],
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rec.json")).unwrap())
            .unwrap();
    assert!(doc["admitted_window"].as_f64().unwrap() > 0.0);
    assert!((doc["charfn_origin"]["re"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("rec.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,w\n"));
    assert_eq!(csv.lines().count(), 1 + 41 * 41);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"schedule":"uncertainty","shots":5000,"seed":11}"#,
    )
    .unwrap();
    run_ok(dir.path(), &["state", "--kind", "vacuum", "--out", "v.json"]);
    run_ok(dir.path(), &["--config", "run.json", "sample", "--state", "v.json", "--out", "ds"]);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ds.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["schedule"], "uncertainty");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["state", "--kind", "tmsv", "--r", "0.3", "--out", "s.json"]);
    run_ok(
        dir.path(),
        &["sample", "--state", "s.json", "--schedule", "cubic", "--n", "5000", "--seed", "21", "--out", "a"],
    );
    run_ok(
        dir.path(),
        &["sample", "--state", "s.json", "--schedule", "cubic", "--n", "5000", "--seed", "21", "--out", "b"],
    );
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b, "datasets with equal seeds must match byte for byte");

    optomo(dir.path(), &["check", "--data", "a", "--out", "ra.json"]);
    optomo(dir.path(), &["check", "--data", "b", "--out", "rb.json"]);
    let ra = std::fs::read(dir.path().join("ra.json")).unwrap();
    let rb = std::fs::read(dir.path().join("rb.json")).unwrap();
    assert_eq!(ra, rb, "check reports must be deterministic");
}
