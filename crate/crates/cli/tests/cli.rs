use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_causal-dep"));
    c.env_remove("CAUSAL_DEP_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn edges(v: &Value, key: &str) -> Vec<(String, String)> {
    v[key]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e[0].as_str().unwrap().to_owned(), e[1].as_str().unwrap().to_owned()))
        .collect()
}

fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
    list.iter().map(|&(a, b)| (a.to_owned(), b.to_owned())).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["gen", "--p", "4", "--n", "1000", "--seed", "9", "--out", s(d)]);
    }
    for f in ["data.csv", "model.json", "oracle_dep.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("data.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x1,x2,x3,x4");
    assert_eq!(lines.clone().count(), 1000);
    assert!(lines.all(|l| l.split(',').count() == 4));
    let model = json(&fs::read(a.join("model.json")).unwrap());
    let nonzero = model["coefficients"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).filter(|w| w.as_f64().unwrap() != 0.0).count();
    assert_eq!(nonzero, 6);
    assert!(model["oracle_dep"]["nodes"].is_array());
}

#[test]
fn gen_random_mode_honours_counts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--p", "5", "--n", "50", "--mode", "random", "--density", "0", "--ng", "2", "--out", s(dir.path())]);
    let model = json(&fs::read(dir.path().join("model.json")).unwrap());
    let kinds = model["disturbances"].as_array().unwrap();
    assert_eq!(kinds.iter().filter(|k| *k == "centered-lognormal").count(), 2);
    let dep = json(&fs::read(dir.path().join("oracle_dep.json")).unwrap());
    assert!(edges(&dep, "directed").is_empty() && edges(&dep, "undirected").is_empty());
}

#[test]
fn oracle_discover_orients_all_but_the_gaussian_pair() {
    let out = ok(&["discover", "--oracle", "--model", s(&fixture("complete_model.json"))]);
    let dep = json(&out.stdout);
    assert_eq!(
        edges(&dep, "directed"),
        pairs(&[("x1", "x2"), ("x1", "x3"), ("x1", "x4"), ("x2", "x3"), ("x2", "x4")])
    );
    assert_eq!(edges(&dep, "undirected"), pairs(&[("x3", "x4")]));
    let tags: Vec<&str> = dep["provenance"].as_array().unwrap().iter().map(|t| t["tag"].as_str().unwrap()).collect();
    assert!(tags.contains(&"gaussian-rule") && tags.contains(&"ancestor-rule") && tags.contains(&"from-pc"));
    let log = json(&out.stderr);
    assert_eq!(log["gaussian_rule"], 3);
    assert_eq!(log["ancestor_rule"], 2);
    assert_eq!(log["repaired"], false);
}

#[test]
fn baseline_agrees_with_discover_in_oracle_mode() {
    let model = fixture("complete_model.json");
    let a = json(&ok(&["discover", "--oracle", "--model", s(&model)]).stdout);
    let b = json(&ok(&["baseline", "--oracle", "--model", s(&model)]).stdout);
    for key in ["nodes", "directed", "undirected"] {
        assert_eq!(a[key], b[key], "{key}");
    }
}

#[test]
fn baseline_cap_is_an_error() {
    let out = run(&["baseline", "--oracle", "--model", s(&fixture("complete_model.json")), "--max-enum", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn given_dsep_skips_pc() {
    let dir = tempfile::tempdir().unwrap();
    let dsep = dir.path().join("dsep.json");
    // fully directed pattern: nothing is left to orient, so it comes back as is
    fs::write(
        &dsep,
        r#"{"nodes": ["x1", "x2", "x3", "x4"], "directed": [["x2", "x1"], ["x3", "x1"], ["x4", "x1"]]}"#,
    )
    .unwrap();
    let out = ok(&["discover", "--oracle", "--model", s(&fixture("complete_model.json")), "--dsep", s(&dsep)]);
    let dep = json(&out.stdout);
    assert_eq!(edges(&dep, "directed"), pairs(&[("x2", "x1"), ("x3", "x1"), ("x4", "x1")]));
}

#[test]
fn pc_writes_json_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let (out, dot) = (dir.path().join("dsep.json"), dir.path().join("dsep.dot"));
    ok(&["pc", "--oracle", "--model", s(&fixture("complete_model.json")), "--out", s(&out), "--dot", s(&dot)]);
    let dsep = json(&fs::read(&out).unwrap());
    assert_eq!(edges(&dsep, "undirected").len(), 6);
    assert_eq!(dsep["sepsets"], Value::Array(vec![]));
    let dot = fs::read_to_string(&dot).unwrap();
    assert!(dot.contains("\"x1\" -> \"x2\" [dir=none];"));
}

#[test]
fn data_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--p", "4", "--n", "2000", "--seed", "3", "--out", s(dir.path())]);
    let data = dir.path().join("data.csv");
    let dsep_path = dir.path().join("dsep.json");
    ok(&["pc", "--data", s(&data), "--out", s(&dsep_path)]);
    let log_path = dir.path().join("log.json");
    let out = ok(&["discover", "--data", s(&data), "--dsep", s(&dsep_path), "--log", s(&log_path), "--repair"]);
    let dep = json(&out.stdout);
    assert_eq!(dep["nodes"], serde_json::json!(["x1", "x2", "x3", "x4"]));
    let log = json(&fs::read(&log_path).unwrap());
    assert!(log["gaussianity_tests"].as_u64().unwrap() >= 1);
    let dep_path = dir.path().join("dep.json");
    fs::write(&dep_path, &out.stdout).unwrap();
    assert_eq!(run(&["check", "--dep", s(&dep_path), "--dsep", s(&dsep_path)]).status.code(), Some(0));
}

#[test]
fn check_reports_cycle_and_new_collider() {
    let out = run(&["check", "--dep", s(&fixture("exception_dep.json")), "--dsep", s(&fixture("exception_dsep.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out.stdout);
    assert_eq!(
        v,
        serde_json::json!([
            {"kind": "directed-cycle", "vertices": ["x1", "x2", "x3"]},
            {"kind": "new-v-structure", "collider": "x1", "parents": ["x3", "x4", "x5"]}
        ])
    );
}

#[test]
fn check_accepts_identical_files() {
    let dsep = fixture("exception_dsep.json");
    let out = run(&["check", "--dep", s(&dsep), "--dsep", s(&dsep)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out.stdout), Value::Array(vec![]));
}

#[test]
fn check_rejects_mismatched_node_sets() {
    let out = run(&["check", "--dep", s(&fixture("renamed_dep.json")), "--dsep", s(&fixture("exception_dsep.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("do not match"));
}

#[test]
fn repair_output_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    let (fixed, dot) = (dir.path().join("fixed.json"), dir.path().join("fixed.dot"));
    let dsep = fixture("exception_dsep.json");
    ok(&["repair", "--dep", s(&fixture("exception_dep.json")), "--dsep", s(&dsep), "--seed", "4", "--out", s(&fixed), "--dot", s(&dot)]);
    assert_eq!(run(&["check", "--dep", s(&fixed), "--dsep", s(&dsep)]).status.code(), Some(0));
    let dep = json(&fs::read(&fixed).unwrap());
    assert!(dep["provenance"].as_array().unwrap().iter().any(|t| t["tag"] == "repair"));
    assert!(fs::read_to_string(dot).unwrap().starts_with("digraph"));
}

#[test]
fn bench_appends_rows_under_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let args = ["bench", "--p", "4", "--n", "300", "--iters", "2", "--out", s(&csv)];
    ok(&args);
    let first = fs::read_to_string(&csv).unwrap();
    assert_eq!(first.lines().next(), Some("p,n,method,iter,seconds,correct"));
    assert_eq!(first.lines().count(), 5);
    bin().args(args).env("CAUSAL_DEP_THREADS", "2").output().unwrap();
    let second = fs::read_to_string(&csv).unwrap();
    assert_eq!(second.lines().count(), 9);
    assert_eq!(second.matches("p,n,method").count(), 1);
}

#[test]
fn bench_reports_capped_cells_and_continues() {
    let out = ok(&["bench", "--p", "4", "--n", "300", "--iters", "1", "--max-enum", "10"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.contains(",proposed,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pclingam"));
}

#[test]
fn input_mode_is_validated() {
    assert_eq!(run(&["discover"]).status.code(), Some(2));
    assert_eq!(run(&["discover", "--oracle"]).status.code(), Some(2));
    let out = run(&["discover", "--data", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/data.csv"));
    let out = run(&["bench", "--methods", "lingam", "--p", "4", "--n", "300", "--iters", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
