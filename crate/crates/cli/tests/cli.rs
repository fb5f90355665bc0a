use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(file).display().to_string()
}

fn magpi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magpi")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    magpi(args).status.code().expect("exit code")
}

#[test]
fn verify_exit_codes_follow_the_verdict() {
    assert_eq!(code(&["verify", &corpus("ping.magpi")]), 0);
    assert_eq!(code(&["verify", &corpus("nf.magpi")]), 1);
    assert_eq!(code(&["verify", &corpus("ping.magpi"), "--budget", "3"]), 2);
}

#[test]
fn usage_and_io_errors_exit_with_three() {
    assert_eq!(code(&["verify"]), 3);
    assert_eq!(code(&["frobnicate"]), 3);
    assert_eq!(code(&["check", "/nonexistent.magpi"]), 3);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn parse_errors_point_at_file_line_and_column() {
    let dir = std::env::temp_dir().join(format!("magpi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.magpi");
    std::fs::write(&bad, "reliable none\nrole p : +{ q:m().end } = send q:m<>.\n").unwrap();
    let out = magpi(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with(&format!("{}:2:", bad.display())), "{err}");
}

#[test]
fn check_prints_the_derivation_on_request() {
    let out = magpi(&["check", &corpus("ping.magpi"), "--emit", "derivation"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("typecheck: pass"));
    assert!(text.lines().count() > 5);
}

#[test]
fn json_output_is_deterministic_and_versioned() {
    for cmd in ["check", "verify", "explore", "lts"] {
        let a = magpi(&[cmd, &corpus("load_balancer.magpi"), "--emit", "json"]).stdout;
        let b = magpi(&[cmd, &corpus("load_balancer.magpi"), "--emit", "json"]).stdout;
        assert_eq!(a, b, "{cmd}");
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(v["schema"], 1, "{cmd}");
    }
}

#[test]
fn simulate_replays_from_a_seed_and_writes_jsonl() {
    let args = ["simulate", &corpus("ping.magpi"), "--seed", "9", "--emit", "trace"];
    let a = magpi(&args);
    assert_eq!(a.stdout, magpi(&args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["rule"].is_string());
    }
    assert_eq!(code(&["simulate", &corpus("ping.magpi")]), 3);
    assert_eq!(code(&["simulate", &corpus("ping.magpi"), "--seed", "1", "--policy", "bogus"]), 3);
}

#[test]
fn lts_dot_and_out_file() {
    let out = std::env::temp_dir().join(format!("magpi-lts-{}.dot", std::process::id()));
    assert_eq!(code(&["lts", &corpus("nf.magpi"), "--out", out.to_str().unwrap()]), 0);
    let dot = std::fs::read_to_string(&out).unwrap();
    assert!(dot.starts_with("digraph"));
    let _ = std::fs::remove_file(out);
}
