use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbf::flow_core::{EventFlow, Interval};
use cbf::map_algebra::rmap;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cbf-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn cbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbf")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn experiment_writes_reproducible_reports() {
    let dir = scratch("run");
    let cfg = write(
        &dir,
        "c.json",
        r#"{"experiment": "coalescence-time", "n_runs": 60, "dt": 0.001,
            "params": {"n_points": 8, "rerun": false}}"#,
    );
    // the output dir is part of the recorded config, so both runs share it
    let out = dir.join("out");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let o = cbf(&["coalescence-time", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("timing.json").exists());
        assert!(out.join("coalescence_samples.csv").exists());
        reports.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let json: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(json["config"]["seeds"][0], 5);
    assert_eq!(json["config"]["n_runs"], 60);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn runs_flag_and_exit_codes() {
    let dir = scratch("codes");
    let cfg = write(&dir, "m.json", r#"{"experiment": "metric-selftest", "params": {"pairs": 2, "level": 1}}"#);
    let out = dir.join("out");
    let o = cbf(&["metric-selftest", "--config", &cfg, "--out", out.to_str().unwrap(), "--runs", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["n_runs"], 3);
    assert_eq!(json["passed"], true);

    // a config for another experiment, and a missing file
    assert_eq!(cbf(&["web-distance", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(cbf(&["web-distance", "--config", "/nonexistent.json"]).status.code(), Some(2));
    let bad = write(&dir, "bad.json", r#"{"experiment": "pair-covariance", "n_runs": 0}"#);
    assert_eq!(cbf(&["pair-covariance", "--config", &bad]).status.code(), Some(2));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn flow_distance_and_web_extract() {
    let dir = scratch("tools");
    let h = Interval::open_closed(-4.0, 4.0);
    let g = rmap(0.5).unwrap();
    let phi = EventFlow::new(1.0, h, vec![(0.3, g.clone())]).unwrap();
    let psi = EventFlow::new(1.0, h, vec![(0.35, g)]).unwrap();
    let a = write(&dir, "phi.json", &serde_json::to_string(&phi).unwrap());
    let b = write(&dir, "psi.json", &serde_json::to_string(&psi).unwrap());

    let o = cbf(&["flow-distance", &a, &b, "--n", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n"], 1);
    assert!((v["d_c"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!(v["d_d_upper"].as_f64().unwrap() <= 0.05 + 1e-12);
    assert!(v["warp_anchors"].as_array().unwrap().len() >= 3);

    let csv_path = dir.join("paths.csv");
    let o = cbf(&["web-extract", &a, "--n", "1", "--times", "2", "--positions", "3", "--grid", "10", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "path,start_s,start_x,t,x,compact,extended");
    let ids: std::collections::BTreeSet<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids.len(), 6);

    // the window must sit inside the horizon
    assert_eq!(cbf(&["web-extract", &a, "--n", "5"]).status.code(), Some(2));
    fs::remove_dir_all(&dir).unwrap();
}
