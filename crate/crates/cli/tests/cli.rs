//! End-to-end tests of the `qc` binary.

use std::process::{Command, Output};

fn qc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qc"))
        .args(args)
        .env("QC_THREADS", "1")
        .output()
        .expect("qc runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sigma_euler_csv() {
    let o = qc(&["sigma", "--method", "euler", "--cutoff", "1000", "--d", "6"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("method,cutoff,value,tail_bound"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "euler");
    let v: f64 = row[2].parse().unwrap();
    let tail: f64 = row[3].parse().unwrap();
    assert!((v - 1.368419).abs() <= tail + 1e-6);
}

#[test]
fn count_is_deterministic() {
    let args = ["count", "--d1", "3", "--weight", "gaussian:a=1", "--L", "2", "--m", "0"];
    let a = qc(&args);
    let b = qc(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("L,m,value,tail_estimate,visited\n"));
}

#[test]
fn gauss_sum_exact_column() {
    let o = qc(&["gauss-sum", "--q", "5", "--c", "1,0,0,0,0,0", "--d1", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().nth(1).unwrap().split(',').last(), Some("500"));
}

#[test]
fn delta_identity_rows() {
    let o = qc(&["delta", "--Q", "4", "--n", "-2:2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(qc(&["check", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(qc(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qc(&["count", "--weight", "gaussian:a=1", "--L", "2"]).status.code(), Some(2));
    assert_eq!(qc(&["i-grid", "--d1", "3", "--weight", "gaussian:a=1", "--t", "1:0:3"]).status.code(), Some(2));
}

#[test]
fn budget_exceeded_exits_3() {
    let o = qc(&["count", "--d1", "3", "--weight", "gaussian:a=1", "--L", "200", "--m", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = std::env::temp_dir().join(format!("qc-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cfg.json");
    std::fs::write(&path, r#"{"d1": 3, "m": 0, "L": 2, "weight": "gaussian:a=1"}"#).unwrap();
    let p = path.to_str().unwrap();
    let from_file = qc(&["--config", p, "count"]);
    let explicit = qc(&["count", "--d1", "3", "--weight", "gaussian:a=1", "--L", "2", "--m", "0"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, explicit.stdout);
    let overridden = qc(&["--config", p, "count", "--L", "3"]);
    assert!(stdout(&overridden).lines().nth(1).unwrap().starts_with("3.000000000000e+00,"));
    std::fs::write(&path, r#"{"dimension": 3}"#).unwrap();
    assert_eq!(qc(&["--config", p, "count"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn kernel_suite_passes() {
    let o = qc(&["check", "--suite", "kernel"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(stdout(&o).starts_with("suite,check,status,measured,threshold\n"));
}
