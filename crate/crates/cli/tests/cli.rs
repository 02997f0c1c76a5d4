use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn certify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_certify"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn table1_path() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../core/scenarios/table1.json").to_string()
}

#[test]
fn equilibria_json_and_csv() {
    let cfg = table1_path();
    let out = certify(&["equilibria", "--config", &cfg]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let deg = |p: &str| v.pointer(p).unwrap().as_f64().unwrap();
    assert!((deg("/prefault/delta_deg") - 20.66).abs() < 0.01);
    assert!((deg("/no_load/delta_deg") - 37.56).abs() < 0.01);
    assert!((deg("/load_connected/delta_deg") - 21.78).abs() < 0.01);

    let out = certify(&["equilibria", "--config", &cfg, "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["condition", "delta_deg", "phi_deg", "v_pu"]);
    let csv_delta = |r: usize| rows[r][1].parse::<f64>().unwrap();
    assert_eq!(csv_delta(1), deg("/prefault/delta_deg"));
    assert_eq!(csv_delta(2), deg("/no_load/delta_deg"));
    assert_eq!(csv_delta(3), deg("/load_connected/delta_deg"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = certify(&["equilibria", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("/definitely/not/here.json"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"inertia": 0.0146}"#).unwrap();
    let out = certify(&["equilibria", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = certify(&["certify", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = certify(&["certify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let cert = read_json(&dir.path().join("certificate.json"));
    assert!((cert["e_crit_pre"].as_f64().unwrap() - 0.0299).abs() < 0.0299 * 0.02);
    assert!((cert["e_crit_post"].as_f64().unwrap() - 0.0331).abs() < 0.0331 * 0.10);
    assert_eq!(cert["binding_faces"], serde_json::json!(["delta_plus"]));
    let fraction = cert["grid"]["safe_fraction"].as_f64().unwrap();
    assert!((fraction - 0.105).abs() < 0.015);

    let grid = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(
        grid.lines().next().unwrap(),
        "delta_deg,omega,in_pre,in_post,in_adm,in_safe"
    );
    assert_eq!(grid.lines().count(), 1 + 140 * 140);

    let decision = read_json(&dir.path().join("decision.json"));
    assert_eq!(decision["entered_safe"], Value::Bool(true));
    assert!(decision["t_star"].as_f64().is_some());

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "certify");
    assert_eq!(manifest["scenario"], cert["scenario"]);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 4);
    for o in outputs {
        let meta = fs::metadata(o.as_str().unwrap()).unwrap();
        assert!(meta.len() > 0);
    }
    let stages: Vec<&str> = manifest["timings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["certificate", "grid", "reconnection"]);
}

#[test]
fn coarser_grid_keeps_critical_energies() {
    let fine = tempfile::tempdir().unwrap();
    let coarse = tempfile::tempdir().unwrap();
    assert!(certify(&["certify", "--out", fine.path().to_str().unwrap()])
        .status
        .success());
    assert!(
        certify(&["certify", "--grid", "70", "--out", coarse.path().to_str().unwrap()])
            .status
            .success()
    );
    let a = read_json(&fine.path().join("certificate.json"));
    let b = read_json(&coarse.path().join("certificate.json"));
    assert_eq!(a["e_crit_pre"], b["e_crit_pre"]);
    assert_eq!(a["e_crit_post"], b["e_crit_post"]);
    assert_eq!(b["grid"]["resolution"], serde_json::json!([70, 70]));
    assert_ne!(a["grid"]["safe_cells"], b["grid"]["safe_cells"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(
            certify(&["certify", "--grid", "40", "--out", d.path().to_str().unwrap()])
                .status
                .success()
        );
    }
    for name in ["certificate.json", "grid.csv", "decision.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn unwritable_output_is_an_environment_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out");
    let out = certify(&["certify", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn short_horizon_is_certification_negative() {
    let dir = tempfile::tempdir().unwrap();
    let out = certify(&[
        "certify",
        "--horizon",
        "0.1",
        "--grid",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let decision = read_json(&dir.path().join("decision.json"));
    assert_eq!(decision["t_star"], Value::Null);
}

#[test]
fn simulate_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = certify(&[
        "simulate",
        "--reconnect-at",
        "0.3",
        "--t-end",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "flapped");
    assert!(v["min_omega"].as_f64().unwrap() < -2.0);

    let waiting = fs::read_to_string(dir.path().join("waiting.csv")).unwrap();
    let post = fs::read_to_string(dir.path().join("post.csv")).unwrap();
    assert_eq!(waiting.lines().count(), 1 + 301);
    assert_eq!(post.lines().count(), 1 + 1701);
    let last_wait = waiting.lines().last().unwrap();
    let first_post = post.lines().nth(1).unwrap();
    // the state carries over unchanged across the switch
    assert_eq!(
        last_wait.split(',').take(3).collect::<Vec<_>>(),
        first_post.split(',').take(3).collect::<Vec<_>>()
    );
    let sim = read_json(&dir.path().join("simulation.json"));
    assert!(!sim["violations"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_degenerate_span() {
    let dir = tempfile::tempdir().unwrap();
    let out = certify(&[
        "simulate",
        "--reconnect-at",
        "0",
        "--t-end",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let post = fs::read_to_string(dir.path().join("post.csv")).unwrap();
    assert_eq!(post.lines().count(), 2);
}

#[test]
fn simulate_rejects_end_before_reconnection() {
    let dir = tempfile::tempdir().unwrap();
    let out = certify(&[
        "simulate",
        "--reconnect-at",
        "1",
        "--t-end",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = certify(&["sweep", "--from", "0.5", "--to", "0.4", "--out", d]);
    assert_eq!(out.status.code(), Some(2));

    let out = certify(&[
        "sweep", "--from", "0.2", "--to", "0.25", "--step", "1", "--out", d, "--format", "csv",
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0.2,"));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.lines().any(|l| l == "rows,1"));
}

#[test]
fn sweep_rows_are_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let out = certify(&[
        "sweep",
        "--from",
        "0.6",
        "--to",
        "0.7",
        "--step",
        "0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let times: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(times.len(), 11);
    assert!(times.windows(2).all(|w| w[0] < w[1]));
}
