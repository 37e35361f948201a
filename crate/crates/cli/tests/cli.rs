use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("not JSON ({}): {}", e, self.stdout))
    }
}

fn corrlab(args: &[&str], stdin: &str, env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_corrlab"));
    cmd.args(args)
        .env_remove("CORRLAB_EPSILON")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    Run {
        code: out.status.code().expect("exited"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run(args: &[&str], stdin: &str) -> Run {
    corrlab(args, stdin, &[])
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("corrlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn pr_box_pipeline() {
    let pr = run(&["demo", "pr-box"], "");
    assert_eq!(pr.code, 0);
    let check = run(&["lhv-check"], &pr.stdout);
    assert_eq!(check.code, 1);
    let v = check.json();
    assert_eq!(v["verdict"], "infeasible");
    assert_eq!(v["mode"], "exact");
    assert_eq!(v["strategies"], 16);
    assert!(v["violation"].as_f64().unwrap() > 0.0);
    let full: Vec<String> = v["witness"]["full_correlators"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect();
    assert_eq!(full[0], full[1]);
    assert_eq!(full[0], full[2]);
    assert_eq!(format!("-{}", full[0]), full[3]);
}

#[test]
fn noisy_pr_box_is_local() {
    let pr = run(&["demo", "pr-box", "--gamma", "1/2"], "");
    let v = run(&["lhv-check"], &pr.stdout);
    assert_eq!(v.code, 0);
    let j = v.json();
    assert_eq!(j["verdict"], "feasible");
    assert!(j["model"]["omega"].as_array().unwrap().len() <= 16);
}

#[test]
fn threshold_pipeline() {
    let iso = run(&["demo", "isotropic", "--d", "2", "--gamma", "0.5"], "");
    let t = run(&["threshold", "--s1", "2", "--s2", "2"], &iso.stdout);
    assert_eq!(t.code, 0);
    assert!((t.json()["threshold"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let text = run(&["threshold", "--s1", "2", "--s2", "2", "--format", "text"], &iso.stdout);
    assert_eq!(text.stdout.lines().next(), Some("0.5"));
}

#[test]
fn malformed_json_exits_two() {
    let out = run(&["validate"], "{\"parties\": ");
    assert_eq!(out.code, 2);
    assert_eq!(out.json()["kind"], "parse");
    assert!(out.stderr.contains("json"));
}

#[test]
fn validate_reports_issues_with_exit_one() {
    let doc = r#"{"parties": 1, "settings": [2], "outcomes": 2,
                  "tables": {"1": ["1/2", "1/3"]}}"#;
    let out = run(&["validate"], doc);
    assert_eq!(out.code, 1);
    let v = out.json();
    assert_eq!(v["verdict"], "invalid");
    let kinds: Vec<&str> = v["issues"].as_array().unwrap().iter().map(|i| i["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, vec!["missing_table"]);
    let ok = r#"{"parties": 1, "settings": [1], "outcomes": 2, "tables": {"1": ["1/2", "1/2"]}}"#;
    assert_eq!(run(&["validate"], ok).code, 0);
    let neg = r#"{"parties": 1, "settings": [1], "outcomes": 2, "tables": {"1": ["3/2", "-1/2"]}}"#;
    let bad = run(&["validate"], neg);
    assert_eq!(bad.code, 1);
    assert_eq!(bad.json()["violation"], 0.5);
}

#[test]
fn invalid_behavior_is_an_input_error_for_lhv_check() {
    let neg = r#"{"parties": 1, "settings": [1], "outcomes": 2, "tables": {"1": ["3/2", "-1/2"]}}"#;
    assert_eq!(run(&["lhv-check"], neg).code, 2);
}

#[test]
fn nonsignaling_detects_signaling() {
    let doc = r#"{"parties": 2, "settings": [1, 2], "outcomes": 2,
                  "tables": {"1,1": ["1", "0", "0", "0"], "1,2": ["0", "0", "1", "0"]}}"#;
    let out = run(&["nonsignaling"], doc);
    assert_eq!(out.code, 1);
    let v = out.json();
    assert_eq!(v["violation"], 1.0);
    assert_eq!(v["witness"]["sites"], serde_json::json!([1]));
}

#[test]
fn epr_local_fixture() {
    let path = fixture("context_dependent_mixing.json");
    let out = run(&["epr-local", path.to_str().unwrap()], "");
    assert_eq!(out.code, 1);
    let v = out.json();
    assert_eq!(v["violation"], 0.25);
    assert_eq!(v["witness"]["contexts"], serde_json::json!(["E1", "E2"]));
    assert!(v["per_context"].as_array().unwrap().iter().all(|c| c["verdict"] == "pass"));
}

#[test]
fn correlations_pipeline() {
    let doc = r#"{"parties": 2, "settings": [2, 2], "mode": "exact", "means": {
        "1|1": 0, "1|2": 0, "2|1": 0, "2|2": 0,
        "1,2|1,1": 1, "1,2|1,2": 1, "1,2|2,1": 1, "1,2|2,2": -1}}"#;
    let out = run(&["lhv-from-correlations"], doc);
    assert_eq!(out.code, 1);
    assert_eq!(out.json()["verdict"], "infeasible");
    let bad = doc.replace("\"1,2|1,1\": 1", "\"1,2|1,1\": 1, \"1|1\": 1");
    assert_eq!(run(&["lhv-from-correlations"], &bad).json()["verdict"], "invalid_correlations");
    let missing = r#"{"parties": 1, "settings": [1], "means": {}}"#;
    assert_eq!(run(&["lhv-from-correlations"], missing).code, 2);
}

#[test]
fn quantum_behavior_pipeline() {
    let setup = temp_file("setup.json", &run(&["demo", "chsh-setup"], "").stdout);
    let state = run(&["demo", "isotropic", "--gamma", "1"], "").stdout;
    let out = run(&["quantum-behavior", "-", setup.to_str().unwrap()], &state);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let b = out.json();
    assert_eq!(b["mode"], "float");
    assert_eq!(run(&["nonsignaling"], &out.stdout).code, 0);
    assert_eq!(run(&["validate"], &out.stdout).code, 0);
}

#[test]
fn chsh_singlet_demo() {
    let full = run(&["demo", "chsh-singlet"], "");
    assert_eq!(run(&["lhv-check"], &full.stdout).code, 1);
    let noisy = run(&["demo", "chsh-singlet", "--gamma", "0.6"], "");
    assert_eq!(run(&["lhv-check"], &noisy.stdout).code, 0);
}

#[test]
fn source_op_reports() {
    let iso = run(&["demo", "isotropic", "--gamma", "0.5"], "").stdout;
    let ok = run(&["source-op", "--gamma", "0.5", "--copies", "2", "--direction", "left"], &iso);
    assert_eq!(ok.code, 0);
    let v = ok.json();
    assert_eq!(v["checks"].as_array().unwrap().len(), 5);
    assert_eq!(v["dims"], serde_json::json!([2, 2, 2]));
    let pure = run(&["demo", "isotropic"], "").stdout;
    let bad = run(&["source-op", "--gamma", "0.9", "--copies", "2"], &pure);
    assert_eq!(bad.code, 1);
    assert_eq!(bad.json()["witness"], "min eigenvalue");
    let default = run(&["source-op", "--copies", "3", "--emit-matrix"], &iso).json();
    assert!((default["gamma"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(default["operator"]["matrix"].as_array().unwrap().len(), 16);
    let huge = run(&["source-op", "--copies", "20"], &iso);
    assert_eq!(huge.code, 2);
    assert_eq!(huge.json()["kind"], "resource");
}

#[test]
fn epsilon_precedence() {
    let near = r#"{"parties": 1, "settings": [1], "outcomes": 2, "tables": {"1": [0.5, 0.5000001]}}"#;
    assert_eq!(run(&["validate"], near).code, 1);
    let env = corrlab(&["validate"], near, &[("CORRLAB_EPSILON", "1e-6")]);
    assert_eq!(env.code, 0);
    assert_eq!(env.json()["tolerance"], 1e-6);
    let flag = corrlab(&["validate", "--epsilon", "1e-8"], near, &[("CORRLAB_EPSILON", "1e-6")]);
    assert_eq!(flag.code, 1);
    assert_eq!(run(&["validate", "--epsilon", "-1"], near).code, 2);
}

#[test]
fn mode_override_and_mixed_modes() {
    let float = r#"{"parties": 1, "settings": [1], "outcomes": 2, "tables": {"1": [0.25, 0.75]}}"#;
    let out = run(&["validate", "--mode", "exact"], float).json();
    assert_eq!(out["mode"], "exact");
    assert_eq!(out["tolerance"], 0.0);
    let mixed = r#"{"parties": 1, "settings": [1], "outcomes": 2, "tables": {"1": ["1/4", 0.75]}}"#;
    assert_eq!(run(&["validate"], mixed).code, 2);
}

#[test]
fn cap_is_enforced() {
    let pr = run(&["demo", "pr-box"], "").stdout;
    let out = run(&["lhv-check", "--cap", "8"], &pr);
    assert_eq!(out.code, 2);
    assert_eq!(out.json()["kind"], "resource");
}

#[test]
fn text_format_is_a_rendering() {
    let pr = run(&["demo", "pr-box"], "").stdout;
    let out = run(&["lhv-check", "--format", "text"], &pr);
    assert_eq!(out.code, 1);
    assert!(out.stdout.starts_with("verdict: infeasible\n"));
    assert!(out.stdout.contains("mode: exact"));
}

#[test]
fn demos_round_trip_through_their_consumers() {
    let setup = temp_file("round-trip-setup.json", &run(&["demo", "chsh-setup"], "").stdout);
    for (demo, consumers) in [
        (vec!["demo", "pr-box"], vec![vec!["validate"], vec!["nonsignaling"], vec!["lhv-check"]]),
        (vec!["demo", "chsh-singlet", "--gamma", "0.7"], vec![vec!["validate"], vec!["lhv-check"]]),
        (
            vec!["demo", "isotropic", "--d", "3", "--gamma", "0.2"],
            vec![
                vec!["threshold", "--s1", "3", "--s2", "2"],
                vec!["source-op", "--copies", "2"],
            ],
        ),
        (vec!["demo", "isotropic"], vec![vec!["quantum-behavior", "-", setup.to_str().unwrap()]]),
    ] {
        let doc = run(&demo, "");
        assert_eq!(doc.code, 0);
        for args in consumers {
            let out = run(&args, &doc.stdout);
            assert_ne!(out.code, 2, "{:?} | {:?}: {}", demo, args, out.stdout);
            out.json();
        }
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let out = run(&["validate", "/nonexistent/behavior.json"], "");
    assert_eq!(out.code, 2);
    assert_eq!(out.json()["kind"], "input");
}
