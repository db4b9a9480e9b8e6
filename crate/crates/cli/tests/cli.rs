use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geomreach"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["-o", out.to_str().unwrap()]);
    let o = run(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let args = ["--shape", "torus", "--R", "2", "--r", "0.5", "--n", "8192", "--seed", "7"];
    let a = gen(dir.path(), "a.csv", &args);
    let b = gen(dir.path(), "b.csv", &args);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 8193);
}

#[test]
fn circle_manifest_and_report() {
    let dir = TempDir::new().unwrap();
    let csv = gen(dir.path(), "circle.csv", &["--shape", "circle", "--R", "1", "--n", "256"]);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 257);
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("circle.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["d"], 2);
    assert_eq!(m["n"], 1);
    assert!(dir.path().join("circle.ground_truth.json").exists());

    let plots = dir.path().join("plots");
    let o = run(&["analyze", csv.to_str().unwrap(), "--plots-dir", plots.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_stdout(&o);
    assert!((r["rch_federer"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r["params"]["metric"], "exact");
    for f in ["local_reach_curves.csv", "bottlenecks.csv", "distortion_curve.csv"] {
        assert!(plots.join(f).exists(), "{f}");
    }

    let o = run(&["analyze", csv.to_str().unwrap(), "--metric", "graph"]);
    let r = json_stdout(&o);
    assert_eq!(r["params"]["metric"], "graph");
    assert!((r["rch_distortion"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn segment_reports_infinite_reach() {
    let dir = TempDir::new().unwrap();
    let csv = gen(dir.path(), "seg.csv", &["--shape", "segment", "--n", "64"]);
    let r = json_stdout(&run(&["analyze", csv.to_str().unwrap()]));
    assert_eq!(r["rch_federer"], "inf");
    assert_eq!(r["rch_global"], "inf");
}

#[test]
fn fillet_manifest_records_local_reach() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "f.csv", &["--shape", "fillet", "--rho", "0.4", "--n", "1024"]);
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("f.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["ground_truth"]["rch_loc"].as_f64(), Some(0.4));
    assert_eq!(m["ground_truth"]["rch_glob"], "inf");
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let csv = gen(dir.path(), "circle.csv", &["--shape", "circle", "--n", "256"]);
    let c = csv.to_str().unwrap();

    let o = run(&["verify", c]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_stdout(&o)["pass"], true);

    let o = run(&["verify", c, "--rch-value", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json_stdout(&o);
    assert_eq!(r["checks"]["lemma_2_2"]["pass"], false);
    assert!(r["checks"]["lemma_2_2"]["witness"].is_array());
    assert!(String::from_utf8_lossy(&o.stderr).contains("lemma_2_2 failed"));

    let o = run(&["verify", "--sweep"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_stdout(&o)["checks"]["lemma_6_8"]["failures"], 0);

    assert_eq!(run(&["verify", dir.path().join("missing.csv").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--shape", "hexagon"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", c, "--rho-grid", "0.1,0.2"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", c, "--bogus"]).status.code(), Some(2));
}

#[test]
fn exact_metric_requires_a_matching_shape() {
    let dir = TempDir::new().unwrap();
    let csv = gen(dir.path(), "t.csv", &["--shape", "torus", "--n", "64"]);
    let o = run(&["analyze", csv.to_str().unwrap(), "--metric", "exact"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let csv = gen(dir.path(), "s.csv", &["--shape", "sphere", "--n", "400", "--seed", "3"]);
    let report = |threads: &str, metric: &str| {
        let o = bin()
            .args(["analyze", csv.to_str().unwrap(), "--metric", metric])
            .env("GEOMREACH_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    for metric in ["exact", "graph"] {
        assert_eq!(report("1", metric), report("4", metric), "{metric}");
    }
    let o = bin().args(["verify", "--sweep"]).env("GEOMREACH_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
