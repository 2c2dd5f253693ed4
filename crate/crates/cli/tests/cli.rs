use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn retrieve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrieve")).args(args).output().expect("binary runs")
}

fn error_object(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr holds one JSON object")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn example1_mqmv_reports_six_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let out = retrieve(&["--method", "mqmv", "--n", "64", "--example", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["zeros"], 6);
    let r = report(dir.path());
    assert_eq!(r["m"], 5);
    assert_eq!(r["zeros"].as_array().unwrap().len(), 1);
    assert!(r["final_error"].as_f64().unwrap() < 1.8965e-4);
    assert_eq!(r["config"]["method"], "mqmv");
    for f in
        ["reconstructed.csv", "modulus_measured.csv", "modulus_reconstructed.csv", "stage_errors.csv", "charts.json"]
    {
        assert!(dir.path().join(f).is_file());
    }
}

#[test]
fn example2_mqpc_from_seed_and_zero_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = retrieve(&["--method", "mqpc", "--n", "1024", "--example", "2", "--seed", "42", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    let truth = r["truth_zeros"].as_array().unwrap().len();
    assert_eq!(truth, 10);
    assert!(r["final_error"].as_f64().unwrap() < 1e-6);

    let zeros = dir.path().join("zeros_in.csv");
    fs::write(&zeros, "re,im\n0.5,0.1\n-0.3,-0.4\n").unwrap();
    let out2 = dir.path().join("b");
    let out = retrieve(&[
        "--method",
        "mqpc",
        "--n",
        "256",
        "--example",
        "2",
        "--zeros",
        zeros.to_str().unwrap(),
        "--r",
        "0.7",
        "--kmax",
        "6",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out2);
    assert_eq!(r["zeros"].as_array().unwrap().len(), 2);
    assert_eq!(r["config"]["r"], 0.7);
}

#[test]
fn input_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let out = retrieve(&["--method", "mqpc", "--n", "128", "--example", "1", "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let b = dir.path().join("b");
    let input = a.join("modulus_measured.csv");
    let out =
        retrieve(&["--method", "mqmv", "--n", "128", "--input", input.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&b)["m"], 5);

    let out =
        retrieve(&["--method", "mqmv", "--n", "64", "--input", input.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_mqpc_circle_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = retrieve(&[
        "--method",
        "mqpc",
        "--n",
        "64",
        "--example",
        "1",
        "--radii",
        "0.5,0.6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_object(&out);
    assert_eq!(e["error"], "missing_circle");
    let msg = e["message"].as_str().unwrap();
    assert!(msg.starts_with("interior circle at r") && msg.ends_with("missing"));
}

#[test]
fn knobs_are_checked_against_the_method() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for args in [
        vec!["--method", "mqmv", "--n", "64", "--example", "1", "--kmax", "4", "--out", d],
        vec!["--method", "mqpc", "--n", "64", "--example", "1", "--epsilon", "0.01", "--out", d],
        vec!["--method", "mqpc", "--n", "64", "--example", "1", "--seed", "3", "--out", d],
        vec!["--method", "mqmv", "--n", "63", "--example", "1", "--out", d],
        vec!["--method", "mqmv", "--n", "64", "--example", "3", "--out", d],
        vec!["--method", "mqmv", "--n", "64", "--out", d],
    ] {
        let out = retrieve(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(error_object(&out)["error"].is_string());
    }
}

#[test]
fn boundary_zero_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("rho,j,modulus\n");
    for rho in ["5.0e-1", "7.0e-1", "9.0e-1", "1.0"] {
        for j in 0..16 {
            let v = if rho == "1.0" && j == 3 { 0.0 } else { 1.0 };
            csv.push_str(&format!("{rho},{j},{v}\n"));
        }
    }
    let input = dir.path().join("field.csv");
    fs::write(&input, csv).unwrap();
    let out = retrieve(&[
        "--method",
        "mqmv",
        "--n",
        "16",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_object(&out)["error"], "boundary_zero");
}

#[test]
fn malformed_input_reports_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "rho,j,modulus\n1.0,0,1.0\n1.0,1,-2.0\n").unwrap();
    let out = retrieve(&["--method", "mqmv", "--n", "4", "--input", input.to_str().unwrap(), "--out", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_object(&out);
    assert_eq!(e["error"], "parse");
    assert!(e["message"].as_str().unwrap().contains("row 3"));
}
