use std::path::Path;
use std::process::{Command, Output};

use superchan::{CountDataset, Superchannel64};
use tempfile::TempDir;

fn superchan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superchan")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = superchan(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(&["simulate", "--tau", "0.908", "--target", "H", "--seed", "42", "--out", out], d);
    }
    ok(&["simulate", "--tau", "0.908", "--target", "H", "--seed", "43", "--out", "c"], d);
    let a = std::fs::read(d.join("a/counts.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b/counts.csv")).unwrap());
    assert_eq!(std::fs::read(d.join("a/counts.json")).unwrap(), std::fs::read(d.join("b/counts.json")).unwrap());
    assert_ne!(a, std::fs::read(d.join("c/counts.csv")).unwrap());

    let from_csv = CountDataset::read_csv(a.as_slice()).unwrap();
    assert_eq!(from_csv.records.len(), 216);
    let from_json = CountDataset::from_json(&std::fs::read_to_string(d.join("a/counts.json")).unwrap()).unwrap();
    assert_eq!(from_json.records, from_csv.records);
}

#[test]
fn exact_data_round_trips_through_linear_inversion() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["simulate", "--exact", "--trials", "100000000", "--tau", "0.423", "--target", "RYZ", "--out", "sim"], d);
    let probs = std::fs::read_to_string(d.join("sim/probabilities.csv")).unwrap();
    assert_eq!(probs.lines().next(), Some("i,j,k,p"));
    assert_eq!(probs.lines().count(), 217);

    ok(&["reconstruct", "sim/counts.csv", "--method", "linear", "--truth", "sim/truth.json", "--out", "rec"], d);
    let report = json(&d.join("rec/reconstruction.json"));
    assert_eq!(report["method"], "linear");
    // counts are rounded to integers, so the error reflects 1/N quantization
    assert!(report["truth_error"].as_f64().unwrap() < 1e-5);
}

#[test]
fn noisy_reconstruction_is_physical_and_linear_warns() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["simulate", "--seed", "5", "--tau", "0.757", "--out", "sim"], d);

    let mle = ok(&["reconstruct", "sim/counts.json", "--method", "mle", "--out", "mle"], d);
    assert!(String::from_utf8_lossy(&mle.stdout).contains("mle reconstruction"));
    let report = json(&d.join("mle/reconstruction.json"));
    let diag = &report["diagnostics"];
    assert_eq!(diag["converged"], true);
    assert_eq!(diag["frame_rank"], 64);
    assert!(diag["iterations"].as_u64().unwrap() > 0);
    let m: Superchannel64 = serde_json::from_value(report["superchannel"].clone()).unwrap();
    assert!(m.min_eigenvalue() > -1e-9);
    assert!((m.trace() - 2.0).abs() < 1e-6);

    let lin = ok(&["reconstruct", "sim/counts.csv", "--method", "linear", "--out", "lin"], d);
    assert!(String::from_utf8_lossy(&lin.stderr).contains("warning"));
}

#[test]
fn analyze_reports_ic_norm_and_surface() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["simulate", "--tau", "1", "--out", "sim"], d);
    let out = ok(&["analyze", "sim/truth.json", "--target", "Z", "--pauli", "--out", "an"], d);
    assert!(String::from_utf8_lossy(&out.stdout).contains("{I, X, Y, Z}"));
    let report = json(&d.join("an/report.json"));
    assert!((report["ic_norm"].as_f64().unwrap() - 0.5).abs() < 0.01);
    assert!(report["argmax"]["f"].as_f64().unwrap() > 1.0 - 1e-6);
    let surface = std::fs::read_to_string(d.join("an/fprep_surface.csv")).unwrap();
    assert_eq!(surface.lines().next(), Some("theta,phi,f"));
    assert_eq!(surface.lines().count(), 1 + 64 * 128);

    ok(&["simulate", "--tau", "0", "--out", "sep"], d);
    ok(&["analyze", "sep/truth.json", "--out", "an0"], d);
    assert!(json(&d.join("an0/report.json"))["ic_norm"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn sweep_writes_monotone_curves() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["sweep", "--out", "sw"], d);
    let text = std::fs::read_to_string(d.join("sw/ic_sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,target,ic_norm"));
    let rows: Vec<(f64, String, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 60);
    for tau in superchan::simulator::MEASURED_TAUS {
        assert!(rows.iter().any(|r| r.0 == tau));
    }
    for target in ["Z", "H", "RYZ"] {
        let curve: Vec<f64> = rows.iter().filter(|r| r.1 == target).map(|r| r.2).collect();
        assert_eq!(curve.len(), 20);
        assert!(curve.windows(2).all(|w| w[1] >= w[0] - 1e-6));
    }

    ok(&["sweep", "--target", "Z", "--tau", "1", "--v", "0.8", "--out", "mixed"], d);
    let mixed = std::fs::read_to_string(d.join("mixed/ic_sweep.csv")).unwrap();
    let last: f64 = mixed.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(last < 0.49);
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let bad_target = superchan(&["simulate", "--target", "Q"], d);
    assert_eq!(bad_target.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_target.stderr).contains("--target"));

    std::fs::write(d.join("cfg.json"), r#"{"beta": 0}"#).unwrap();
    assert_eq!(superchan(&["sweep", "--config", "cfg.json"], d).status.code(), Some(2));

    assert_eq!(superchan(&["reconstruct", "missing.csv"], d).status.code(), Some(3));
    std::fs::write(d.join("junk.csv"), "i,j,k,n,N\nH,V,Q,1,2\n").unwrap();
    assert_eq!(superchan(&["reconstruct", "junk.csv"], d).status.code(), Some(3));

    ok(&["simulate", "--out", "sim"], d);
    std::fs::write(d.join("tight.json"), r#"{"mle_max_iter": 2}"#).unwrap();
    let solver = superchan(&["reconstruct", "sim/counts.csv", "--config", "tight.json", "--out", "r"], d);
    assert_eq!(solver.status.code(), Some(4));

    let threads = Command::new(env!("CARGO_BIN_EXE_superchan"))
        .args(["sweep", "--target", "Z", "--out", "t"])
        .env("SUPERCHAN_THREADS", "0")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}
