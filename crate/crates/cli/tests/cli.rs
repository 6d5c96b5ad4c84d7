use std::path::PathBuf;
use std::process::Command;

use deltam_cli::{run_args, RunOutput};
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> RunOutput {
    run_args(std::iter::once("deltam").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
    serde_json::from_str(&out.stdout).unwrap()
}

fn bad_fan() -> String {
    let p = std::env::temp_dir().join(format!("deltam-bad-{}.json", std::process::id()));
    std::fs::write(&p, r#"{"dim":2,"rays":[[2,0],[0,1],[-1,-1]],"max_cones":[[0,1],[1,2],[2,0]]}"#).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn delta_on_p2() {
    let j = json(&["delta", &data("p2.json"), "--m", "1"]);
    assert_eq!(j["delta_m"], "1");
    assert_eq!(j["exact"], true);
    assert_eq!(j["provenance"]["delta_m"], "exact");
    assert_eq!(j["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn sweep_on_the_blowup() {
    let out = run(&["delta-sweep", &data("blp2.json"), "--m", "1..10", "--format", "tsv"]);
    assert_eq!(out.code, 0);
    let rows: Vec<Vec<&str>> = out.stdout.lines().filter(|l| !l.starts_with('#')).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][..2], ["1", "9/11"]);
    assert_eq!(rows[9][0], "10");
    let csv = run(&["delta-sweep", &data("blp2.json"), "--m", "1..3", "--format", "csv"]);
    assert!(csv.stdout.starts_with("m,delta_m,"));
    assert!(csv.stdout.contains("\n1,9/11,"));
}

#[test]
fn validate_reports_non_primitive_rays() {
    let out = run(&["validate", &bad_fan()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("non-primitive ray at index 0"), "{}", out.stderr);
    let j: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(j["passed"], false);
    assert_eq!(j["violations"][0]["kind"], "non_primitive_ray");
    let ok = json(&["validate", &data("blp2.json")]);
    assert_eq!(ok["passed"], true);
    // the P^2 triangle (area 9/2) minus a unit corner
    assert_eq!(ok["volume"], "4");
}

#[test]
fn rejected_parameters_exit_with_two() {
    assert_eq!(run(&["delta", &data("p2.json"), "--m", "1", "--weight", "xi=1"]).code, 2);
    assert_eq!(run(&["delta", &data("p2.json"), "--m", "1", "--weight", "bogus"]).code, 2);
    assert_eq!(run(&["delta-sweep", &data("p2.json"), "--m", "5..2"]).code, 2);
    assert_eq!(run(&["balanced", &data("p1.json"), "--m", "1", "--delta", "-1"]).code, 2);
    assert_eq!(run(&["balanced", &data("p1.json"), "--m", "1"]).code, 2);
    assert_eq!(run(&["delta", "/nonexistent.json", "--m", "1"]).code, 2);
    assert_eq!(run(&["coupled", &data("p2.json")]).code, 2);
}

#[test]
fn exact_output_is_byte_identical() {
    for args in [
        vec!["delta-sweep", "blp2.json", "--m", "1..12"],
        vec!["limit", "p1xp1.json"],
        vec!["coupled", "coupled_p1.json", "--m", "2,3"],
        vec!["validate", "p3.json"],
    ] {
        let mut a: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        a[1] = data(args[1]);
        let a: Vec<&str> = a.iter().map(|s| s.as_str()).collect();
        let (x, y) = (run(&a), run(&a));
        assert_eq!(x, y);
        assert!(x.stdout.contains("\"provenance\""));
    }
}

#[test]
fn limit_and_weighted_delta() {
    let j = json(&["limit", &data("blp2.json")]);
    assert_eq!(j["delta_limit"], "6/7");
    let j = json(&["delta", &data("blp2.json"), "--m", "2", "--weight", "soliton"]);
    assert!((j["delta_g_m"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(j["provenance"]["delta_g_m"], "mpfr(128)");
    let j = json(&["delta", &data("p1.json"), "--m", "1", "--weight", "xi=0"]);
    assert!((j["delta_g_m"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn soliton_table() {
    let out = run(&["soliton", &data("blp2.json"), "--m", "1..3", "--format", "tsv"]);
    assert_eq!(out.code, 0);
    let rows: Vec<&str> = out.stdout.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[3].starts_with("inf\t"));
    let j = json(&["soliton", &data("p2.json"), "--m", "2"]);
    assert_eq!(j["xi"], serde_json::json!([0.0, 0.0]));
    assert!(j["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn balanced_runs_and_partial_traces() {
    let j = json(&["balanced", &data("p1.json"), "--m", "1", "--delta", "0.9", "--start", "ray:0:20"]);
    assert_eq!(j["outcome"], "converged");
    assert!(j["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(j["provenance"]["residual"], "quadrature(1e-11)");

    let out = run(&["balanced", &data("p1.json"), "--m", "1", "--delta", "0.9", "--start", "ray:0:20", "--max-iter", "4", "--format", "tsv"]);
    assert_eq!(out.code, 3);
    let rows: Vec<&str> = out.stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(out.stdout.lines().next(), Some("#j\td1m\tF_m"));

    let out = run(&["balanced", &data("p1.json"), "--m", "1", "--delta", "1.5", "--start", "ray:0:20", "--escape", "50", "--json", "compact"]);
    assert_eq!(out.code, 0);
    let j: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(j["outcome"], "diverged");
    assert_eq!(out.stdout.lines().count(), 1);
}

#[test]
fn mt_threshold_on_p1() {
    let j = json(&["mt-threshold", &data("p1.json"), "--m", "1", "--ray", "0", "--delta", "2", "--points", "5"]);
    assert!((j["delta_a_m"].as_f64().unwrap() - 1.0).abs() < 5e-3);
    assert_eq!(j["delta_m_t"], "1");
    let curve = j["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 5);
    // slope δ S - A = 1 for δ = 2
    let (a, b) = (&curve[3], &curve[4]);
    let slope = (b[1].as_f64().unwrap() - a[1].as_f64().unwrap()) / (b[0].as_f64().unwrap() - a[0].as_f64().unwrap());
    assert!((slope - 1.0).abs() < 1e-3, "{slope}");
    assert_eq!(j["provenance"]["delta_a_m"], "bisection(5e-4)");
}

#[test]
fn selftest_is_reproducible() {
    let a = run(&["selftest", "--seed", "9", "--cases", "15", "--json", "compact"]);
    assert_eq!(a.code, 0, "{}", a.stdout);
    assert_eq!(a, run(&["selftest", "--seed", "9", "--cases", "15", "--json", "compact"]));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_deltam");
    let ok = Command::new(bin).args(["delta", &data("p2.json"), "--m", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["validate", &bad_fan()]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("non-primitive ray at index 0"));
    let usage = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
