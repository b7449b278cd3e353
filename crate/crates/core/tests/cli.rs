use std::process::{Command, Output};

use choquard::grid::read_field;
use serde_json::Value;

fn choquard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_choquard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_hartree_example() {
    let out = choquard(&["classify", "--model", "hartree", "--d", "3", "--alpha", "2", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["stability"]["verdict"], "Stable");
    assert_eq!(v["result"]["stability"]["gamma_big"].as_f64(), Some(1.0));
    assert_eq!(v["config"]["model"]["d"], 3);
}

#[test]
#[allow(clippy::approx_constant)]
fn classify_kg_example() {
    let out = choquard(&[
        "classify", "--model", "kg", "--d", "3", "--alpha", "2", "--p", "2", "--omega", "0.9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = &json(&out)["result"]["stability"];
    assert_eq!(s["verdict"], "Stable");
    assert!((s["kg_threshold"].as_f64().unwrap() - 0.70711).abs() < 1e-5);
}

#[test]
fn no_soliton_exits_two_with_payload() {
    let out = choquard(&["solve", "--alpha", "0.5", "--p", "1.2"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["verdict"]["regime"], "NoSoliton");
    let out = choquard(&["classify", "--d", "3", "--alpha", "2", "--p", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["result"]["stability"]["verdict"], "NoSoliton");
}

#[test]
fn config_errors_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[model]\ngamma = 0.5\np = 2.2\nmas = 2\n").unwrap();
    let out = choquard(&["classify", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mas") && err.contains("line 4"), "{err}");
    assert_eq!(choquard(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(choquard(&["--help"]).status.code(), Some(0));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[model]\nd = 3\nalpha = 2.0\np = 2.0\n[grid]\nbox = 8.0\n").unwrap();
    let out = choquard(&["check-params", "--config", path.to_str().unwrap(), "--p", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let cfg = &json(&out)["config"];
    assert_eq!(cfg["model"]["p"].as_f64(), Some(3.0));
    assert_eq!(cfg["model"]["alpha"].as_f64(), Some(2.0));
    assert_eq!(cfg["grid"]["box"].as_f64(), Some(8.0));
    assert_eq!(cfg["solver"]["tol"].as_f64(), Some(1e-8));
}

#[test]
fn sweep_writes_csv() {
    let out = choquard(&["sweep", "--d", "1", "--alpha", "0.5", "--p-range", "2:4:0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("d,alpha,p"));
    assert!(lines[3].contains("Stable"), "{}", lines[3]);
    assert!(lines[5].contains("Unstable"), "{}", lines[5]);
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("solve.json");
    let field = dir.path().join("phi.fld");
    let profile = dir.path().join("phi.csv");
    let out = choquard(&[
        "solve",
        "--gamma",
        "0.5",
        "--p",
        "2.2",
        "--grid",
        "1024",
        "--box",
        "32",
        "--out",
        report.to_str().unwrap(),
        "--field",
        field.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let state = &v["result"]["state"];
    assert!(state["residual"].as_f64().unwrap() < 1e-8);
    assert!(state["omega"].as_f64().unwrap() < 0.0);
    let phi = read_field(&field).unwrap();
    assert_eq!(phi.len(), 1024);
    let csv = std::fs::read_to_string(&profile).unwrap();
    assert_eq!(csv.lines().count(), 513);
}

#[test]
fn spectrum_falls_back_to_classical_profile() {
    // p = 4 in d = 1 has no normalized minimizer but a classical soliton.
    let out = choquard(&["spectrum", "--alpha", "0.5", "--p", "4", "--grid", "256", "--box", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["result"];
    assert_eq!(r["omega"].as_f64(), Some(-1.0));
    assert_eq!(r["n_Lplus"], 1);
}
