use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CASE_STUDY: &str = r#"{"lambda": 3, "reward": 8.5, "wait_cost": 1,
  "policy": {"T": 23, "mu_low": 2, "mu_high": 5}}"#;

fn write_instance(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_queue-eq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn delay_command() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "case.json", CASE_STUDY);
    let inst = inst.to_str().unwrap();
    let out = run(&["delay", "--instance", inst, "--x", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "n,m,W\n0,1,5.0000000000000000e-1\n");

    let out = run(&["delay", "--instance", inst, "--x", "0"]);
    assert_eq!(stdout(&out), "n,m,W\n");

    let out_dir = dir.path().join("out");
    let out = run(&["delay", "--instance", inst, "--x", "26", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let arrival = std::fs::read_to_string(out_dir.join("arrival_delay.csv")).unwrap();
    assert_eq!(arrival.lines().count(), 28);
    assert!(arrival.lines().last().unwrap().starts_with("26,"));
    let table = std::fs::read_to_string(out_dir.join("delay_table.csv")).unwrap();
    assert_eq!(table, stdout(&out));
}

#[test]
fn malformed_instances_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let extra = write_instance(
        dir.path(),
        "extra.json",
        r#"{"lambda": 3, "reward": 8.5, "wait_cost": 1, "mu": 4,
           "policy": {"T": 23, "mu_low": 2, "mu_high": 5}}"#,
    );
    let out = run(&["equilibria", "--instance", extra.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let bad = write_instance(dir.path(), "bad.json", "{not json");
    let out = run(&["delay", "--instance", bad.to_str().unwrap(), "--x", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    let out = run(&["delay", "--instance", missing.to_str().unwrap(), "--x", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let inst = write_instance(dir.path(), "case.json", CASE_STUDY);
    let out = run(&["sweep", "--instance", inst.to_str().unwrap(), "--kind", "pure_n0", "--range", "5:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equilibria_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "case.json", CASE_STUDY);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "equilibria",
        "--instance",
        inst.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["pure"], serde_json::json!([16, 17, 25, 36, 37]));
    assert_eq!(v["mixed_intervals"], serde_json::json!([[16.0, 17.0]]));
    let diag = std::fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("n0,W_marginal,lower_bound,upper_bound,is_equilibrium\n"));
}

#[test]
fn constant_rate_gives_naor_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "mm1.json",
        r#"{"lambda": 0.9, "reward": 7.3, "wait_cost": 2, "policy": {"prefix": [], "tail": 1.5}}"#,
    );
    let out = run(&["equilibria", "--instance", inst.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // r_tilde * mu = 3.65 * 1.5 = 5.475
    assert_eq!(v["pure"], serde_json::json!([5]));
}

#[test]
fn sweeps_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "case.json", CASE_STUDY);
    let inst = inst.to_str().unwrap();
    let args = ["sweep", "--instance", inst, "--kind", "mixed_x", "--range", "24.05:26:0.05"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().next(), Some("x,w,hit"));
    assert_eq!(stdout(&a).lines().count(), 1 + 40);

    let out = run(&["sweep", "--instance", inst, "--kind", "pure_n0", "--range", "1:40"]);
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("n0,W,is_equilibrium,hit"));
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn simulate_and_coupling_commands() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "case.json", CASE_STUDY);
    let inst = inst.to_str().unwrap();
    let out = run(&["simulate", "--instance", inst, "--x", "30", "--n", "10", "--reps", "10000", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("analytic value inside CI"));

    let out = run(&["simulate", "--instance", inst, "--x", "30", "--n", "10", "--reps", "1"]);
    assert!(stdout(&out).contains("degenerate"));

    let out = run(&["verify-coupling", "--instance", inst, "--n", "5", "--n0", "30", "--reps", "10000", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("ordering violations: 0"));

    let out = run(&["verify-coupling", "--instance", inst, "--n", "30", "--n0", "30"]);
    assert_eq!(out.status.code(), Some(2));
}
