use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn opseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opseq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

#[test]
fn eval_named_sequence() {
    let out = opseq(&["eval", &fixture("sg_chain"), "seq1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let z = v["amplitude"].as_array().unwrap();
    assert!((z[0].as_f64().unwrap().powi(2) + z[1].as_f64().unwrap().powi(2) - 0.5).abs() < 1e-12);
}

#[test]
fn output_is_deterministic() {
    let a = opseq(&["check", "sg_chain", "--seed", "11"]);
    let b = opseq(&["check", "sg_chain", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn attribute_respects_potential_policy() {
    let all = json(&opseq(&["attribute", "zeno_arrow", "regions"]));
    let atoms = json(&opseq(&[
        "attribute",
        "zeno_arrow",
        "regions",
        "--potentials",
        "atomic-only",
    ]));
    let potentials = |v: &Value| {
        v.as_array()
            .unwrap()
            .iter()
            .filter(|a| a["modality"] == "potential")
            .count()
    };
    assert_eq!(potentials(&all), 5 * 6);
    assert_eq!(potentials(&atoms), 5 * 3);
}

#[test]
fn compare_shows_interference() {
    let v = json(&opseq(&["compare", "double_slit"]));
    let e = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["sequence"] == "E")
        .unwrap()
        .clone();
    assert!((e["classical"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(e["quantum"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["classical_source"], "refinement-sum");
}

#[test]
fn scenario_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exported.json");
    let out = opseq(&["scenario", "double_slit", "--export", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        std::fs::read_to_string(fixture("double_slit")).unwrap()
    );
    let out = opseq(&["eval", path.to_str().unwrap(), "E"]);
    assert!(json(&out)["probability"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn all_scenarios_pass() {
    let out = opseq(&["scenario"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out).as_array().unwrap().iter().all(|r| r["pass"] == true));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.json");
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("closure_counterexample")).unwrap()).unwrap();
    v["closure"]["expect_violation"] = Value::Bool(false);
    std::fs::write(&path, v.to_string()).unwrap();
    let out = opseq(&["check", path.to_str().unwrap(), "--format", "table"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn invalid_file_reports_positioned_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overlap.json");
    let text = std::fs::read_to_string(fixture("sg_chain")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["measurements"]["T"]["blocks"] = serde_json::json!([[0, 1], [1]]);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = opseq(&["eval", path.to_str().unwrap(), "seq1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    let d = &err["diagnostics"][0];
    assert_eq!(d["rule"], "partition");
    assert!(d["path"].as_str().unwrap().starts_with("/measurements/T"));
    assert!(d["line"].as_u64().unwrap() > 1);
}

#[test]
fn usage_errors_exit_two() {
    let out = opseq(&["launch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(opseq(&["eval", "sg_chain", "missing"]).status.code(), Some(2));
    assert_eq!(opseq(&["eval", "no_such_fixture", "x"]).status.code(), Some(2));
}
