//! End-to-end tests of the binary: exit codes, report files, schemas, and
//! byte-level determinism of repeated runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_euler-spectra"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("euler-spectra-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

#[test]
fn scan_unstable_case_produces_one_root() {
    let dir = tmp_dir("scan");
    let out = run(&[
        "scan",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "3",
        "--trunc",
        "32",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.join("scan.json"));
    let roots = report["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    let lambda_star = roots[0]["lambda_star"].as_f64().unwrap();
    assert!((lambda_star - 0.723674982880).abs() <= 1e-8);
    assert!(roots[0]["residual"].as_f64().unwrap() <= 1e-6);
    let roots_only = json(&dir.join("roots.json"));
    assert_eq!(roots_only.as_array().unwrap().len(), 1);

    // csv schema: lambda,D_re,D_im
    let csv = std::fs::read_to_string(dir.join("scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,D_re,D_im"));
    assert_eq!(lines.count(), 256);
}

#[test]
fn lin_check_stable_case_exits_zero_without_firing() {
    let dir = tmp_dir("lin");
    let out = run(&[
        "lin-check",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "4",
        "--trunc",
        "16",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = json(&dir.join("lin_check.json"));
    assert_eq!(report["criterion_fires"], serde_json::Value::Bool(false));
    assert_eq!(report["negative_count"], serde_json::json!(0));
}

#[test]
fn verify_passes_on_reference_configuration() {
    let dir = tmp_dir("verify");
    let out = run(&[
        "verify",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "3",
        "--trunc",
        "16",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let checks = json(&dir.join("verify.json"));
    let checks = checks.as_array().unwrap();
    assert!(checks.len() >= 15);
    for check in checks {
        assert_eq!(
            check["pass"],
            serde_json::Value::Bool(true),
            "failed: {}",
            check["name"]
        );
    }
}

#[test]
fn count_rectangle_and_grid_modes() {
    let dir = tmp_dir("count");
    let out = run(&[
        "count",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "3",
        "--trunc",
        "8",
        "--lambda",
        "limit",
        "--rect",
        "-7,-5,-1,1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = json(&dir.join("count.json"));
    assert_eq!(report["winding"], serde_json::json!(1));
    let csv = std::fs::read_to_string(dir.join("count.csv")).unwrap();
    assert!(csv.starts_with("reMin,reMax,imMin,imMax,winding\n"));

    // grid mode through a config file
    let config = dir.join("counts.toml");
    std::fs::write(
        &config,
        "[truncation]\nmode = \"subspace\"\nj = 1\nk = 3\ntrunc = 8\n\n[count]\nlambda_grid = [0.01, 1.0, 160.0]\n",
    )
    .unwrap();
    let out = run(&[
        "count",
        "--config",
        config.to_str().unwrap(),
        "--m",
        "4",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let counts = json(&dir.join("counts.json"));
    let points = counts["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    assert_eq!(points[0]["eigensolve_count"], serde_json::json!(1));
    assert_eq!(points[2]["eigensolve_count"], serde_json::json!(0));
}

#[test]
fn bad_truncation_is_a_config_error() {
    let dir = tmp_dir("bad");
    let out = run(&[
        "scan",
        "--m",
        "4",
        "--j",
        "2",
        "--k",
        "1",
        "--trunc",
        "8",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(err["kind"], "config");
}

#[test]
fn unknown_operator_is_a_config_error() {
    let dir = tmp_dir("badop");
    let out = run(&[
        "spectrum",
        "--operator",
        "bogus",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "3",
        "--trunc",
        "4",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_writes_matrix_dump_on_request() {
    let dir = tmp_dir("spectrum");
    let out = run(&[
        "spectrum",
        "--operator",
        "a0",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "3",
        "--trunc",
        "1",
        "--dump-matrix",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,re,im"));
    // spectrum of the limit operator on the P=1 basis: -6, 2, 18
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("0,-6,"));

    let matrix = std::fs::read_to_string(dir.join("matrix.csv")).unwrap();
    assert!(matrix.starts_with("row,col,re,im\n"));
    assert_eq!(matrix.lines().count(), 1 + 9);
}

#[test]
fn validate_agrees_at_reference_configuration() {
    let dir = tmp_dir("validate");
    let out = run(&[
        "validate",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "3",
        "--trunc",
        "16",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = json(&dir.join("validate.json"));
    assert_eq!(report["ok"], serde_json::Value::Bool(true));
    assert_eq!(report["unstable_eigenvalues"].as_array().unwrap().len(), 1);
}

#[test]
fn identical_runs_produce_identical_report_bytes() {
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "det",
            "--m",
            "4",
            "--j",
            "1",
            "--k",
            "3",
            "--trunc",
            "8",
            "--lambda",
            "0.5",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(dir_a.join("det.json")).unwrap();
    let b = std::fs::read(dir_b.join("det.json")).unwrap();
    assert_eq!(a, b);
    let a = std::fs::read(dir_a.join("det.csv")).unwrap();
    let b = std::fs::read(dir_b.join("det.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn det_csv_schema_matches_contract() {
    let dir = tmp_dir("detcsv");
    let out = run(&[
        "det",
        "--m",
        "4",
        "--j",
        "1",
        "--k",
        "3",
        "--trunc",
        "4",
        "--lambda",
        "limit",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("det.csv")).unwrap();
    assert!(csv.starts_with("lambda_re,lambda_im,mu_re,mu_im,D_re,D_im,logModulus\n"));
}
