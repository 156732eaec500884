use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qmeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmeter")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

/// Report bytes with the timestamp line removed.
fn without_timestamp(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.contains("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

// Projectors onto the σ_y eigenbasis (|0⟩ ± i|1⟩)/√2.
const SY_PROJECTORS: &str = r#"{"dim": 2, "outcomes": [
  {"label": "y+", "matrix": {"rows": 2, "cols": 2, "data": [[0.5,0],[0,-0.5],[0,0.5],[0.5,0]]}},
  {"label": "y-", "matrix": {"rows": 2, "cols": 2, "data": [[0.5,0],[0,0.5],[0,-0.5],[0.5,0]]}}
]}"#;

const LOWERING_ONLY: &str = r#"{"dim": 2, "outcomes": [
  {"label": "click", "matrix": {"rows": 2, "cols": 2, "data": [[0,0],[1,0],[0,0],[0,0]]}}
]}"#;

const EAVESDROP: &str = r#"{"scenario": "eavesdrop",
 "eve": {"dim": 2, "outcomes": [
   {"label": "up", "matrix": {"rows": 2, "cols": 2, "data": [[1,0],[0,0],[0,0],[0,0]]}},
   {"label": "down", "matrix": {"rows": 2, "cols": 2, "data": [[0,0],[0,0],[0,0],[1,0]]}}]},
 "a": "sz", "b": "sx", "trials": 20000, "seed": 3}"#;

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let complete = write(&dir, "c.json", SY_PROJECTORS);
    let out = qmeter(&["validate", s(&complete)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["status"], "complete");

    let implicit = write(&dir, "i.json", LOWERING_ONLY);
    let out = qmeter(&["validate", s(&implicit)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["report"]["status"], "incomplete");

    let partial = write(&dir, "p.json", &LOWERING_ONLY.replace("\n]}", "\n], \"complete\": false}"));
    let out = qmeter(&["validate", s(&partial)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["status"], "partial");
    assert_eq!(v["report"]["completeness"]["max_deviation"], 1.0);

    let bad = write(&dir, "b.json", "{\"dim\": 2, \"outcomes\": [");
    assert_eq!(qmeter(&["validate", s(&bad)]).status.code(), Some(2));
    assert_eq!(qmeter(&["validate", "/no/such/file.json"]).status.code(), Some(2));
}

#[test]
fn manifest_records_input_digest_and_tolerance() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "c.json", SY_PROJECTORS);
    let v = json(&qmeter(&["validate", s(&p), "--tol", "1e-6"]));
    let m = &v["manifest"];
    assert_eq!(m["command"], "validate");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["tolerances"][0][1], 1e-6);
    assert_eq!(v["report"]["completeness"]["tolerance"], 1e-6);
}

#[test]
fn characterize_pair_on_cloning_set() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "c.json", SY_PROJECTORS);
    let out = qmeter(&["characterize", s(&p), "--pair", "sz,sx"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let pairs = v["report"]["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 2);
    for p in pairs {
        assert!(p["resolution_slack"].as_f64().unwrap() >= -1e-10);
        assert!(p["disturbance_slack"].as_f64().unwrap() >= -1e-10);
        assert_eq!(p["satisfied"], true);
    }
}

#[test]
fn characterize_photon_preset() {
    let out = qmeter(&["characterize", "--preset", "photon", "--dim", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let n = &v["report"]["rows"][0];
    assert_eq!(n["observable"], "n");
    assert!((n["estimate"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(n["resolution"].as_f64().unwrap().abs() < 1e-12);
    assert!((n["disturbance"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn characterize_teleport_preset() {
    let out =
        qmeter(&["characterize", "--preset", "classical-teleport", "--alpha", "0.5+0.3i", "--dim", "60"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["report"]["rows"].as_array().unwrap();
    assert!((rows[0]["estimate"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((rows[1]["estimate"].as_f64().unwrap() - 0.3).abs() < 1e-6);
    for r in rows {
        assert!((r["resolution"].as_f64().unwrap() - 0.25).abs() < 1e-6);
        assert!((r["disturbance"].as_f64().unwrap() - 0.5).abs() < 1e-4);
    }
    assert_eq!(
        qmeter(&["characterize", "--preset", "classical-teleport", "--alpha", "abc"]).status.code(),
        Some(2)
    );
}

#[test]
fn unreachable_outcome_is_reported_not_fatal() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "z.json",
        r#"{"dim": 2, "outcomes": [
          {"label": "all", "matrix": {"rows": 2, "cols": 2, "data": [[1,0],[0,0],[0,0],[1,0]]}},
          {"label": "never", "matrix": {"rows": 2, "cols": 2, "data": [[0,0],[0,0],[0,0],[0,0]]}}]}"#,
    );
    let out = qmeter(&["characterize", s(&p), "--observable", "sz", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("never,sz,unreachable,,,"), "{text}");
}

#[test]
fn characterize_writes_tables() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "c.json", SY_PROJECTORS);
    let out_dir = dir.path().join("out");
    let out = qmeter(&["characterize", s(&p), "--pair", "sz,sx", "--outcome", "y+", "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0));
    for f in
        ["characterize.json", "characterize.csv", "characterize_pairs.csv", "characterize_disturbance.csv"]
    {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let d = std::fs::read_to_string(out_dir.join("characterize_disturbance.csv")).unwrap();
    assert!(d.starts_with("outcome,observable,B_f,w,delta2,systematic,Delta2"));
    assert!(d.lines().skip(1).all(|l| l.starts_with("y+,")));
    assert_eq!(qmeter(&["characterize", s(&p), "--pair", "sz,sq"]).status.code(), Some(2));
}

#[test]
fn verify_is_deterministic_and_catches_scaled_bound() {
    let a = qmeter(&["verify", "--dims", "2..3", "--samples", "30", "--seed", "9"]);
    let b = qmeter(&["verify", "--dims", "2..3", "--samples", "30", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(without_timestamp(&a.stdout), without_timestamp(&b.stdout));
    assert_eq!(json(&a)["manifest"]["seed"], 9);

    let bad = qmeter(&["verify", "--dims", "2", "--samples", "5", "--bound-scale", "1.01"]);
    assert_eq!(bad.status.code(), Some(1));
    let v = json(&bad);
    let violated =
        v["report"]["relations"].as_array().unwrap().iter().find(|r| r["violations"] != 0).unwrap();
    assert!(violated["first_violation"]["kraus"]["data"].is_array());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("violation"));

    assert_eq!(qmeter(&["verify", "--dims", "1..3"]).status.code(), Some(2));
}

#[test]
fn eavesdrop_scenario_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "e.json", EAVESDROP);
    let a = qmeter(&["scenario", s(&p)]);
    let b = Command::new(env!("CARGO_BIN_EXE_qmeter"))
        .env("QMETER_THREADS", "1")
        .args(["scenario", s(&p)])
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(without_timestamp(&a.stdout), without_timestamp(&b.stdout));
    let v = json(&a);
    let bases = v["report"]["bases"].as_array().unwrap();
    assert_eq!(bases[0]["overall"]["empirical"], 0.0);
    let x = &bases[1]["overall"];
    assert!((x["empirical"].as_f64().unwrap() - 2.0).abs() <= 3.0 * x["std_error"].as_f64().unwrap());

    let c = qmeter(&["scenario", s(&p), "--seed", "4"]);
    assert_eq!(json(&c)["manifest"]["seed"], 4);
    assert_ne!(without_timestamp(&a.stdout), without_timestamp(&c.stdout));
}

#[test]
fn scenario_outputs_and_errors() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "q.json",
        r#"{"scenario": "qnd", "dim": 12, "sigma": 2.0, "grid": {"start": -8, "stop": 20}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = qmeter(&["scenario", s(&p), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["scenario"], "qnd");
    assert!(v["report"]["characterization"]["completeness"]["pass"].as_bool().unwrap());
    assert!(out_dir.join("scenario.csv").exists());

    let bad = write(&dir, "bad.json", "{\"scenario\": \"qnd\",\n \"dim\": 12,\n \"sigmaa\": 2.0}");
    let out = qmeter(&["scenario", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sigmaa") && err.contains("line 3"), "{err}");
}

#[test]
fn identity_eve_and_wide_qnd_do_not_disturb() {
    let dir = TempDir::new().unwrap();
    let identity = EAVESDROP.replace(
        r#"{"label": "up", "matrix": {"rows": 2, "cols": 2, "data": [[1,0],[0,0],[0,0],[0,0]]}},
   {"label": "down", "matrix": {"rows": 2, "cols": 2, "data": [[0,0],[0,0],[0,0],[1,0]]}}"#,
        r#"{"label": "id", "matrix": {"rows": 2, "cols": 2, "data": [[1,0],[0,0],[0,0],[1,0]]}}"#,
    );
    let p = write(&dir, "id.json", &identity);
    let out = qmeter(&["scenario", s(&p)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for basis in json(&out)["report"]["bases"].as_array().unwrap() {
        assert_eq!(basis["overall"]["empirical"], 0.0);
        assert_eq!(basis["overall"]["analytic"], 0.0);
    }

    let p = write(
        &dir,
        "q.json",
        r#"{"scenario": "qnd", "dim": 30, "sigma": 5.0, "grid": {"start": -10, "stop": 40}}"#,
    );
    let v = json(&qmeter(&["scenario", s(&p)]));
    let rows = v["report"]["characterization"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| r["disturbance"].as_f64().unwrap().abs() <= 1e-12));
}
