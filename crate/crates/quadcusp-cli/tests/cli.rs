use std::path::Path;
use std::process::{Command, Output};

fn quadcusp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadcusp")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn enumerate_writes_circle_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = quadcusp(&["--out", &out_arg(dir.path()), "enumerate", "--form", "circle", "--qmax", "10"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(dir.path().join("points.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["x0", "x1", "x2"]);
    let rows: Vec<Vec<i64>> = reader.records().map(|r| r.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(r[0] * r[0] + r[1] * r[1], r[2] * r[2]);
        assert!(r[2] > 0 && r[2] <= 10);
    }
}

#[test]
fn sl_identity_paths_agree() {
    let out = quadcusp(&["excursion", "sl-identity", "--x", "0.3", "--p", "2", "--q", "5", "--t", "1.5", "--slope", "n"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (a, b) = (v["closed_form"].as_f64().unwrap(), v["matrix_form"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
}

#[test]
fn exit_code_tracks_checks() {
    let dir = tempfile::tempdir().unwrap();
    let ok = quadcusp(&["--out", &out_arg(dir.path()), "run", "excursion", "--beta", "1/2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(dir.path().join("excursion/manifest.json").exists());

    let failing = quadcusp(&["--out", &out_arg(dir.path()), "run", "aprox"]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failing.stdout).contains("FAIL aprox"));

    let error = quadcusp(&["--out", &out_arg(dir.path()), "run", "no-such-experiment"]);
    assert_eq!(error.status.code(), Some(2));
}

#[test]
fn manifest_rerun_reproduces_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(quadcusp(&["--out", &out_arg(a.path()), "--seed", "7", "run", "excursion", "--beta", "1/4"]).status.success());
    let manifest = a.path().join("excursion/manifest.json");
    let rerun = quadcusp(&["--out", &out_arg(b.path()), "run", "excursion", "--config", manifest.to_str().unwrap()]);
    assert!(rerun.status.success());
    for file in ["report.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join("excursion").join(file)).unwrap(), std::fs::read(b.path().join("excursion").join(file)).unwrap());
    }
}

#[test]
fn classify_reports_threshold_verdict() {
    let out = quadcusp(&["ubiquity", "classify", "--alpha", "2", "--s", "1/3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("measure-infinite"));
}
