use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sumprod"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn schema_leads_and_seed_is_echoed() {
    let out = run(&["--seed", "17", "witness", "sharp", "--r", "2", "--d", "3"], b"");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.trim_start().starts_with("{\n  \"schema\": \"sumprod.plane/1\""), "{text}");
    assert_eq!(json(&out)["seed"], 17);
}

#[test]
fn member_reads_stdin_dash_and_flags_non_members() {
    let plane = run(&["witness", "sharp", "--r", "4", "--d", "3"], b"").stdout;
    let out = run(&["member", "--plane", "-"], &plane);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["member"], true);

    // Breaking the pairing of two entries knocks the plane off X.
    let mut v: Value = serde_json::from_slice(&plane).unwrap();
    v["B"][0][0] = "2".into();
    let out = run(&["member"], v.to_string().as_bytes());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_json_reports_position() {
    let out = run(&["split"], b"{\n  \"r\": 4,\n  oops\n}");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("<stdin>:3:"), "{err}");
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_eq!(run(&["census", "--r", "3"], b"").status.code(), Some(2));
    assert_eq!(run(&["hunt", "c", "--d", "3", "--m", "1", "--pattern", "2,3", "--field", "4"], b"").status.code(), Some(2));
    assert_eq!(run(&["hunt", "c", "--d", "3", "--m", "1", "--pattern", "2,3", "--partition", "3/2"], b"").status.code(), Some(2));
}

#[test]
fn hunt_output_does_not_depend_on_jobs() {
    let args = |j: &'static str| ["--jobs", j, "--seed", "5", "hunt", "c", "--d", "4", "--m", "1", "--pattern", "2,4", "--field", "3", "--trials", "600"];
    let mut a = json(&run(&args("1"), b""));
    let mut b = json(&run(&args("3"), b""));
    for v in [&mut a, &mut b] {
        v["wall_clock_ms"] = Value::Null;
    }
    assert_eq!(a, b);
    assert_eq!(a["seed"], 5);
}

#[test]
fn certificate_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("sumprod-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pf6.json");
    let p = path.to_str().unwrap();
    assert!(run(&["rank", "cert", "--target", "pf6", "--out", p], b"").status.success());
    let out = run(&["cert", "--cert", p], b"");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["all_pass"], true);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn split_hunt_finds_nothing_on_a_proven_shape() {
    let out = run(&["--seed", "3", "hunt", "split", "--r", "4", "--d", "3", "--k", "5", "--trials", "64", "--inject-witness"], b"");
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    assert_eq!(v["seed"], 3);
}
