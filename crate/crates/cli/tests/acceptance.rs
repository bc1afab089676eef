//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Also drives the built binary for the checks that are about its output.

use std::io::Write;
use std::process::{Command, ExitCode, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_sumprod");

fn sumprod(args: &[&str], stdin: Option<&[u8]>) -> (i32, Vec<u8>) {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .expect("spawn sumprod");
    if let Some(bytes) = stdin {
        child.stdin.take().unwrap().write_all(bytes).unwrap();
    }
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn census_via_binary() -> Result<String, String> {
    let (code, out) = sumprod(&["census", "--r", "3", "--d", "3", "--k", "3", "--format", "csv"], None);
    let text = String::from_utf8_lossy(&out);
    let want = "type,count,dimension,status\nA,27,8,proven\nB,54,6,proven\nC,54,5,proven\n";
    if code == 0 && text == want {
        Ok("F_3(X_{3,3}) csv matches".into())
    } else {
        Err(format!("exit {code}, got {text:?}"))
    }
}

fn witness_pipe() -> Result<String, String> {
    let (code, plane) = sumprod(&["witness", "sharp", "--r", "4", "--d", "3"], None);
    if code != 0 {
        return Err(format!("witness exit {code}"));
    }
    let (code, out) = sumprod(&["split", "--lambda-max", "2"], Some(&plane));
    let v: Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    if code == 0 && v["min_splitting"] == 2 && v["one_split"] == false {
        Ok(format!("split of the piped witness: {}", v["subsets"]))
    } else {
        Err(format!("exit {code}, report {v}"))
    }
}

fn exit_codes() -> Result<String, String> {
    let (bad, _) = sumprod(&["member"], Some(b"{ not json"));
    let (range, _) = sumprod(&["census", "--r", "4", "--d", "3", "--k", "2"], None);
    let (cex, _) = sumprod(&["hunt", "c", "--d", "3", "--m", "1", "--pattern", "2,2", "--relaxed"], None);
    let (clean, _) = sumprod(&["hunt", "c", "--d", "3", "--m", "1", "--pattern", "2,3"], None);
    if (bad, range, cex, clean) == (2, 2, 1, 0) {
        Ok("malformed 2, out of range 2, counterexample 1, clean 0".into())
    } else {
        Err(format!("got {bad}, {range}, {cex}, {clean}"))
    }
}

fn main() -> ExitCode {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let seed = 0;
    let report = sumprod_cli::repro::run(jobs, seed);
    let mut ok = true;
    for c in &report.criteria {
        println!("{}", c.line());
        ok &= c.passed;
    }
    type Check = fn() -> Result<String, String>;
    let cli: [(&str, Check); 3] =
        [("census output", census_via_binary), ("witness | split", witness_pipe), ("exit codes", exit_codes)];
    for (name, check) in cli {
        match check() {
            Ok(detail) => println!("PASS cli {name}: {detail}"),
            Err(detail) => {
                println!("FAIL cli {name}: {detail}");
                ok = false;
            }
        }
    }
    println!("acceptance: {} (jobs {jobs}, seed {seed})", if ok { "all pass" } else { "FAILURES" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
