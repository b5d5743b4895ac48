use std::process::{Command, Output};

use serde_json::Value;

fn tentlimit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tentlimit"))
        .args(args)
        .env_remove("TENTLIMIT_PRECISION")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ulam_at_slope_two_is_constant() {
    let out = tentlimit(&["density", "--slope", "2", "--method", "ulam", "--bins", "1024", "--format", "csv"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1024);
    for r in rows {
        assert!((r[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn golden_markov_density_has_two_cells() {
    let out = tentlimit(&["density", "--slope", "1.6180339887", "--method", "markov", "--format", "csv"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    assert!((rows[0][2].parse::<f64>().unwrap() - 0.7236068).abs() < 1e-7);
    assert!((rows[1][2].parse::<f64>().unwrap() - 1.1708204).abs() < 1e-7);
}

#[test]
fn markov_method_at_generic_slope_is_a_config_error() {
    let out = tentlimit(&["density", "--slope", "1.7", "--method", "markov"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], 2);
}

#[test]
fn histogram_is_reproducible() {
    let args = ["density", "--slope", "1.7", "--method", "histogram", "--orbit-length", "2e5", "--seed", "7", "--bins", "64"];
    let a = tentlimit(&args);
    let b = tentlimit(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn full_tent_box() {
    let out = tentlimit(&["box", "--slope", "2", "--component-index", "0", "--depth", "30"]);
    assert!(out.status.success());
    let v = json(&out);
    let b = &v["payload"]["box"];
    assert_eq!(b["base"]["lo"], 0.0);
    assert_eq!(b["base"]["hi"], 0.5);
    assert_eq!(b["excluded"].as_array().unwrap().len(), 0);
    let upper = v["payload"]["alpha"]["upper"].as_f64().unwrap();
    assert!((upper - 1.0).abs() < 1e-12);
}

#[test]
fn holonomy_at_generic_slope_passes() {
    let out = tentlimit(&["holonomy", "--slope", "1.7", "--prefix", "4", "--depth", "30", "--probes", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["payload"]["report"]["pass"], true);
    assert_eq!(v["payload"]["report"]["alphas"].as_array().unwrap().len(), 5);
}

#[test]
fn typicality_report_is_deterministic() {
    let args = ["typicality", "--slope", "1.6180339887", "--visit-depth", "100", "--samples", "2000", "--seed", "1"];
    let a = tentlimit(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, tentlimit(&args).stdout);
    let v = json(&a);
    assert!(v["payload"]["disclaimer"].as_str().unwrap().contains("untested"));
    assert!(v.get("timing_seconds").is_none());
}

#[test]
fn shallow_box_is_inconclusive() {
    let out = tentlimit(&[
        "typicality", "--slope", "1.7", "--prefix", "2", "--depth", "2", "--samples", "500", "--visit-depth", "10",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_eq!(v["status"], "inconclusive");
    assert!(v["payload"]["gap_statistics"].as_array().is_some());
}

#[test]
fn decompose_emits_pieces_and_nodes() {
    let out = tentlimit(&["decompose", "--slope", "2", "-m", "2", "--lo", "0.1", "--hi", "0.9", "--format", "csv"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.iter().filter(|r| r[0] == "piece").count(), 4);
    assert_eq!(rows.iter().filter(|r| r[0] == "node").count(), 3);
}

#[test]
fn sweep_rows_are_slope_ordered() {
    let out = tentlimit(&["sweep", "--from", "1.42", "--to", "1.99", "--step", "0.01", "--cmd", "gap", "--N", "2000", "--format", "csv"]);
    assert!(out.status.success());
    let slopes: Vec<f64> = csv_rows(&out).iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(slopes.len(), 58);
    assert!(slopes.windows(2).all(|w| w[0] < w[1]));
    let again = tentlimit(&["--jobs", "2", "sweep", "--from", "1.42", "--to", "1.99", "--step", "0.01", "--cmd", "gap", "--N", "2000", "--format", "csv"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn empty_sweep_is_a_config_error() {
    let out = tentlimit(&["sweep", "--from", "1.9", "--to", "1.5", "--step", "0.01", "--cmd", "gap"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(tentlimit(&["density", "--slope", "3"]).status.code(), Some(2));
    assert_eq!(tentlimit(&["density", "--slope", "sqrt2"]).status.code(), Some(2));
    assert_eq!(tentlimit(&["density"]).status.code(), Some(2));
    assert!(tentlimit(&["--allow-endpoint", "density", "--slope", "sqrt2"]).status.success());
}

#[test]
fn precision_default_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_tentlimit"))
        .args(["box", "--slope", "2", "--component-index", "0"])
        .env("TENTLIMIT_PRECISION", "enclosure")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&out)["precision"], "enclosure");
    assert_eq!(json(&tentlimit(&["box", "--slope", "2", "--component-index", "0"]))["precision"], "scalar");
}

#[test]
fn output_file_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let out = tentlimit(&["density", "--slope", "golden", "--timing", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["timing_seconds"].as_f64().is_some());
    assert_eq!(v["payload"]["density"]["source"], "markov-exact");
}
