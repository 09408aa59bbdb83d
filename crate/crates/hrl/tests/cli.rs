//! End-to-end checks of the command-line driver: exit codes, output
//! formats, config-file precedence, and file output.

use std::process::Command;

fn hrl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hrl"))
}

#[test]
fn constants_json_contains_expected_value() {
    let out = hrl()
        .args(["constants", "--N", "5", "--mu", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["values"]["c1"], 4.875);
    assert_eq!(body["n"], 5);
    assert_eq!(body["passed"], true);
}

#[test]
fn invalid_domain_exits_with_code_two() {
    let out = hrl()
        .args(["report-all", "--N", "5", "--mu", "1.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("structured failure record");
    assert_eq!(err["failure"], "domain");
}

#[test]
fn unknown_format_is_a_usage_error() {
    let out = hrl()
        .args(["constants", "--format", "yaml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_output_has_header_and_lf_endings() {
    let out = hrl()
        .args(["constants", "--N", "6", "--mu", "1.0", "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,passed,value,expected,tolerance\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn flags_override_config_file() {
    let dir = std::env::temp_dir().join("hrl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("run.json");
    std::fs::write(&cfg_path, r#"{"n": 6, "mu": 1.0, "seed": 3}"#).unwrap();
    // flag --N beats the file; mu comes from the file
    let out = hrl()
        .args(["constants", "--N", "7", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["n"], 7);
    assert_eq!(body["mu"], 1.0);
}

#[test]
fn output_file_is_written() {
    let dir = std::env::temp_dir().join("hrl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let out_path = dir.join("constants.json");
    let out = hrl()
        .args(["constants", "--N", "5", "--mu", "0.25", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(body["mu"], 0.25);
}

#[test]
fn rejects_malformed_config_file() {
    let dir = std::env::temp_dir().join("hrl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("bad.json");
    std::fs::write(&cfg_path, r#"{"unknown_key": 1}"#).unwrap();
    let out = hrl()
        .args(["constants", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_is_respected() {
    let out = hrl()
        .env("HRL_THREADS", "1")
        .args(["constants", "--N", "5", "--mu", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
