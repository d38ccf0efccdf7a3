//! End-to-end runs of the binary on the example problems.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqleq"))
}

fn repo_file(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn refuted_problem_exits_one_with_counterexample() {
    let out = bin()
        .args([
            "verify",
            "--problem",
            &repo_file("problems/page_recommendations.json"),
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "refuted");
    assert!(v["counterexample"].is_object());
}

#[test]
fn checked_problem_exits_zero() {
    let out = bin()
        .args([
            "verify",
            "--problem",
            &repo_file("problems/filter_commute.json"),
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "checked");
    assert_eq!(v["bound"], 2);
}

#[test]
fn corpus_mode_emits_one_line_per_problem() {
    let out = bin()
        .args([
            "verify",
            "--corpus",
            &repo_file("problems"),
            "--format",
            "json",
            "--timeout-ms",
            "120000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let lines: Vec<&str> = std::str::from_utf8(&out.stdout)
        .unwrap()
        .lines()
        .collect();
    assert_eq!(lines.len(), 4);
    for line in lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["status"].is_string(), "{line}");
    }
}

#[test]
fn malformed_problem_exits_two() {
    let dir = tempdir();
    let path = dir.join("bad.json");
    std::fs::write(&path, br#"{"schema": [], "q1": "SELECT", "q2": "x"}"#).unwrap();
    let out = bin()
        .args(["verify", "--problem", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    std::fs::remove_dir_all(dir).ok();
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("sqleq-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
