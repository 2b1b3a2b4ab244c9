use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secure-regen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    bin(args).status.code().unwrap()
}

#[test]
fn params_reports_bounds() {
    let v = json(&["params", "-n", "4", "-k", "3", "-l", "2", "--gamma", "3"]);
    assert_eq!(
        (v["thm1_bound"].as_u64(), v["thm2_capacity"].as_u64()),
        (Some(1), Some(1))
    );
    assert_eq!((v["M"].as_u64(), v["R"].as_u64()), (Some(6), Some(1)));
    let v = json(&["params", "-n", "4", "-k", "3", "-l", "0", "--gamma", "3"]);
    assert_eq!(v["thm2_capacity"], 6);
    let v = json(&[
        "params", "-n", "5", "-k", "3", "-l", "1", "-d", "4", "--beta", "1", "--gamma", "6",
    ]);
    assert_eq!(v["thm2_capacity"], "15/2");
    let out = bin(&["params", "-n", "4", "-k", "3", "-l", "3", "--gamma", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameter violation"));
}

#[test]
fn simulate_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&["simulate", "--trace", "4,4,1", "--out", p]), 0);
    let snap: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(snap["nodes"].as_array().unwrap().len(), 7);
    assert_eq!(json(&["simulate"])["nodes"].as_array().unwrap().len(), 4);
    assert_eq!(code(&["simulate", "--trace", "9"]), 2);
    assert_eq!(code(&["simulate", "--stripes", "2"]), 2);
    assert_eq!(code(&["simulate", "--out", "/nonexistent/dir/h.json"]), 4);
    assert_eq!(code(&["sweep", "--history", "/nonexistent/h.json"]), 4);

    let trace_file = dir.path().join("trace.json");
    fs::write(&trace_file, r#"{"trace": [4, 4, 1]}"#).unwrap();
    let from_file = json(&["simulate", "--trace", trace_file.to_str().unwrap()]);
    assert_eq!(from_file, snap);
}

#[test]
fn secrets_round_trip_through_collectors() {
    let dir = tempfile::tempdir().unwrap();
    let secret = dir.path().join("secret.hex");
    fs::write(&secret, "0x5\n").unwrap();
    let arg = format!("@{}", secret.display());
    let snap = json(&["simulate", "--secret", &arg, "--trace", "1,2"]);
    assert_eq!(snap, json(&["simulate", "--secret", "5", "--trace", "1,2"]));
    assert_eq!(code(&["simulate", "--secret", "7"]), 2);
    assert_eq!(code(&["simulate", "--secret", "1,2"]), 2);
}

#[test]
fn runs_are_byte_identical() {
    let args = [
        "sweep",
        "-n",
        "5",
        "-k",
        "3",
        "-l",
        "2",
        "--trace",
        "1,2,3,4,5,1",
        "--seed",
        "3",
    ];
    assert_eq!(bin(&args).stdout, bin(&args).stdout);
    assert_eq!(
        bin(&["rlnc", "--trials", "5"]).stdout,
        bin(&["rlnc", "--trials", "5"]).stdout
    );
}

#[test]
fn sweep_and_attack() {
    let v = json(&["sweep", "--trace", "4,1,2,3,4,1"]);
    assert_eq!(v["max_leakage"], 0);
    assert_eq!(v["subsets_checked"], 45);
    assert_eq!(v["mode"], "exhaustive");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&["simulate", "--trace", "4,1,2,3,4,1", "--out", p]), 0);
    assert_eq!(json(&["sweep", "--history", p]), v);

    let sampled = json(&[
        "sweep",
        "--history",
        p,
        "--sweep-limit",
        "10",
        "--samples",
        "30",
    ]);
    assert_eq!(sampled["mode"], "sampled");
    assert_eq!(sampled["subsets_checked"], 30);

    let a = json(&["attack", "--history", p, "--nodes", "5,6", "--bruteforce"]);
    assert_eq!(a["leakage_qary"], 0);
    assert_eq!(a["oracle"], "bruteforce");
    assert_eq!(a["perfect_secrecy"], true);
    assert_eq!(code(&["attack", "--history", p, "--nodes", "1,2,3"]), 2);
    let a = json(&[
        "attack",
        "--history",
        p,
        "--nodes",
        "1,2,3",
        "--override-budget",
        "3",
    ]);
    assert_eq!(a["perfect_secrecy"], false);
    assert_eq!(code(&["attack", "--history", p, "--nodes", "11"]), 2);
}

#[test]
fn negative_control_leaks() {
    let v = json(&[
        "sweep",
        "-l",
        "0",
        "--override-budget",
        "2",
        "--trace",
        "1,2",
    ]);
    assert!(v["max_leakage"].as_u64().unwrap() > 0);
}

#[test]
fn rlnc_baseline_recovers_the_file() {
    let v = json(&["rlnc", "--trials", "100", "--seed", "7"]);
    assert!(v["full_recovery_count"].as_u64().unwrap() >= 99);
    assert_eq!(v["q"], 65521);
    assert_eq!(code(&["rlnc", "-q", "65520"]), 2);
}

#[test]
fn verify_suites() {
    let v = json(&[
        "verify",
        "-n",
        "3",
        "-k",
        "2",
        "-l",
        "1",
        "-q",
        "7",
        "--bruteforce",
    ]);
    assert_eq!(v["passed"], true);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"oracle_equivalence"));
    assert_eq!(
        json(&["verify", "-n", "5", "-k", "3", "-l", "1", "--trials", "3"])["passed"],
        true
    );
    assert_eq!(
        code(&["verify", "-n", "6", "-k", "4", "-l", "1", "--bruteforce"]),
        2
    );
    assert_eq!(code(&["build", "--construction", "systematic-parity"]), 0);
    assert_eq!(
        code(&["build", "-n", "5", "--construction", "systematic-parity"]),
        2
    );
}
