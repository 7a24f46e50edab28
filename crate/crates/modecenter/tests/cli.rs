//! Black-box tests of the command-line interface: exit codes, input
//! parsing diagnostics, and output formats.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modecenter"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn modecenter")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_file(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.display().to_string()
}

const SYNTH: &str = "-2\n-1\n0\n1\n2\n10\n11\n";

#[test]
fn help_and_version_succeed() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    let out = run(&["estimate", "--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("--estimator"));
}

#[test]
fn usage_errors_exit_1() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["estimate"]); // missing --input
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["estimate", "--input", "x", "--estimator", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_median_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "data.txt", SYNTH);
    let out = run(&["estimate", "--input", &input, "--estimator", "median"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["estimate"], 1.0);
    assert_eq!(v["estimator"], "median");
    assert!(v["beta"].is_null());

    let out = run(&["estimate", "--input", &input, "--estimator", "mean"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["estimate"], 3.0);
}

#[test]
fn estimate_kme_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "data.txt", SYNTH);
    let out = run(&["estimate", "--input", &input, "--trace"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["estimator"], "kme");
    assert!(v["estimate"].as_f64().unwrap().abs() <= 0.05);
    assert!(v["beta"].as_f64().unwrap() > 0.0);
    assert!(v["h"].as_f64().unwrap() > 0.0);
    assert_eq!(v["converged"], true);
    assert!(v["trace"]["iterates"].as_array().unwrap().len() >= 2);
    assert_eq!(v["trace"]["weights_final"].as_array().unwrap().len(), 7);
}

#[test]
fn estimate_reads_csv_column_and_comments() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(
        dir.path(),
        "data.csv",
        "# comment line\nid, value\n1, 4.0\n2, 5.0\n3, 6.0\n",
    );
    let out = run(&[
        "estimate", "--input", &input, "--column", "value", "--estimator", "mean",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["estimate"], 5.0);

    let out = run(&[
        "estimate", "--input", &input, "--column", "nope", "--estimator", "mean",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope"));
}

#[test]
fn data_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();

    let out = run(&["estimate", "--input", "/no/such/file", "--estimator", "mean"]);
    assert_eq!(out.status.code(), Some(2));

    let input = write_file(dir.path(), "bad.txt", "1.0\n2.0\noops\n4.0\n");
    let out = run(&["estimate", "--input", &input, "--estimator", "mean"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains(":3:"), "stderr missing line number: {err}");
    assert!(err.contains("oops"), "stderr missing offending token: {err}");

    let input = write_file(dir.path(), "empty.txt", "# only comments\n\n");
    let out = run(&["estimate", "--input", &input, "--estimator", "mean"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_and_domain_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "data.txt", SYNTH);

    // Config problem: nonpositive tuner start bandwidth.
    let out = run(&["estimate", "--input", &input, "--h0=-2.0"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    // Config problem: invalid trimming level.
    let out = run(&[
        "estimate", "--input", &input, "--estimator", "trimmed", "--alpha", "0.7",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Domain problem: negative bandwidth bound in the curve command.
    let out = run(&[
        "variance-curve", "--testbed", "normal", "--h-min=-1", "--points", "5",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    // Config problem: unknown testbed id.
    let out = run(&["variance-curve", "--testbed", "weird"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("student_t_3"));
}

#[test]
fn variance_curve_csv_output() {
    let out = run(&[
        "variance-curve",
        "--testbed",
        "normal",
        "--beta",
        "8",
        "--h-min",
        "1",
        "--h-max",
        "100",
        "--points",
        "10",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,V,sigma2_ref,median_ref");
    assert_eq!(lines.len(), 11);
    // Last grid point: V close to sigma^2 = 1.
    let last: Vec<&str> = lines[10].split(',').collect();
    let v: f64 = last[1].parse().unwrap();
    assert!((v - 1.0).abs() < 0.05, "V(100) = {v}");
    assert_eq!(last[2], "1");
}

#[test]
fn simulate_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let common = [
        "simulate",
        "--testbeds",
        "laplace",
        "--sizes",
        "100",
        "--reps",
        "20",
        "--estimators",
        "median,mean",
        "--seed",
        "7",
    ];
    let run_to = |path: &Path, threads: &str| {
        let out = bin()
            .args(common)
            .args(["--out", &path.display().to_string()])
            .env("MODECENTER_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    };
    run_to(&out_a, "1");
    run_to(&out_b, "4");
    let a = std::fs::read_to_string(&out_a).unwrap();
    let b = std::fs::read_to_string(&out_b).unwrap();
    assert_eq!(a, b, "simulation output depends on the thread count");
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "testbed,n,pair,mse_ratio,win_prop,p_value,mean_beta,mean_h");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("laplace,100,median_vs_mean,"));
}

#[test]
fn simulate_rejects_bad_estimator_token() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out = run(&[
        "simulate",
        "--testbeds",
        "normal",
        "--sizes",
        "100",
        "--reps",
        "5",
        "--estimators",
        "bogus",
        "--out",
        &out_path.display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn case_study_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = run(&["case-study", "--out", &out_path.display().to_string()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!((v["estimate"].as_f64().unwrap() - 27.75).abs() <= 0.1);
    assert_eq!(v["median"], 27.0);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 23);
    assert_eq!(rows[0]["value"], -44);
    assert_eq!(rows[0]["unit_weight"], 0.0);
    // Unit weights, each multiplied by its repetition count, sum to one.
    let total: f64 = rows.iter().map(|r| r["total_weight"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9, "total weight {total}");
}
