//! End-to-end runs of the binary against the shipped fixtures.

use std::path::PathBuf;
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> (String, String, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_homog"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code(),
    )
}

#[test]
fn classify_k3_exits_zero_with_report() {
    let path = fixture("k3free.json");
    let (stdout, _, code) = run(&[
        "classify",
        path.to_str().unwrap(),
        "--sockel-bound",
        "2",
        "--size-bound",
        "4",
    ]);
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["verdict"], "indivisible-certified");
    assert_eq!(v["result"]["chain_length"], 2);
}

#[test]
fn missing_file_exits_one() {
    let (_, stderr, code) = run(&["classify", "/nonexistent/boundary.json"]);
    assert_eq!(code, Some(1));
    assert!(stderr.contains("input error"));
}

#[test]
fn malformed_boundary_exits_one() {
    let dir = std::env::temp_dir().join("homog-cli-test-bad");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let (_, _, code) = run(&["classify", bad.to_str().unwrap()]);
    assert_eq!(code, Some(1));
}

#[test]
fn export_dot_prints_graph() {
    let path = fixture("triangle.json");
    let (stdout, _, code) = run(&["export-dot", path.to_str().unwrap()]);
    assert_eq!(code, Some(0));
    assert!(stdout.contains("graph gaifman"));
    assert!(stdout.contains("v0 -- v1"));
}

#[test]
fn out_dir_env_writes_report() {
    let dir = std::env::temp_dir().join("homog-cli-test-out");
    std::fs::create_dir_all(&dir).unwrap();
    let path = fixture("k3free.json");
    let out = Command::new(env!("CARGO_BIN_EXE_homog"))
        .args([
            "classify",
            path.to_str().unwrap(),
            "--sockel-bound",
            "1",
            "--size-bound",
            "3",
        ])
        .env("HOMOG_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = dir.join("report-classify.json");
    assert!(report.exists());
    let text = std::fs::read_to_string(report).unwrap();
    assert!(text.contains("indivisible-certified"));
}

#[test]
fn divide_two_colour_fixture() {
    let path = fixture("twtriangle.json");
    let (stdout, _, code) = run(&[
        "divide",
        path.to_str().unwrap(),
        "--prefix",
        "25",
        "--size-bound",
        "4",
    ]);
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["prefix_embeds_into_q"], false);
    assert_eq!(v["result"]["classifier"]["verdict"], "divisible");
}

#[test]
fn dichotomy_runs_verified() {
    let (stdout, _, code) = run(&["dichotomy", "--oracle", "parity", "--length", "12"]);
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["embedding_verified"], true);
    assert_eq!(v["result"]["colors_verified"], true);
}

#[test]
fn empty_age_sample_exits_two() {
    // A one-element boundary member empties the age: demand generation
    // stalls and the run reports an exhausted budget.
    let dir = std::env::temp_dir().join("homog-cli-test-empty-age");
    std::fs::create_dir_all(&dir).unwrap();
    let boundary = dir.join("vertex-boundary.json");
    std::fs::write(
        &boundary,
        r#"{"explicit":[{"signature":[{"name":"E","arity":2,"mode":"set"}],"elements":1,"relations":[]}]}"#,
    )
    .unwrap();
    let (_, stderr, code) = run(&["sample", boundary.to_str().unwrap(), "--steps", "1"]);
    assert_eq!(code, Some(2));
    assert!(stderr.contains("budget exhausted"));
}
