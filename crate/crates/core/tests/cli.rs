use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const REFERENCE_CHANNEL: [&str; 6] = ["--zeta", "0.2", "--slope", "2", "--intercept", "0.5"];

fn qtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtrack"))
        .args(args)
        .env_remove("QTRACK_THREADS")
        .output()
        .expect("spawn qtrack")
}

fn with_channel<'a>(cmd: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&REFERENCE_CHANNEL);
    v.extend_from_slice(rest);
    v
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn limits_reports_stats_and_resolution() {
    let out = qtrack(&with_channel("limits", &["--n", "1000", "--d", "1", "--eps", "0.1"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let c = v["stats"]["capacity"].as_f64().unwrap();
    assert!((c - 0.147_644).abs() < 1e-5);
    assert_eq!(v["stats"]["units"]["capacity"], "nats/query");
    let delta = v["limits"]["delta_approx"].as_f64().unwrap();
    assert!(delta > 0.0 && delta < 1e-20);
    assert_eq!(v["limits"]["regime"], "strong");
}

#[test]
fn missing_required_value_is_a_usage_error() {
    let out = qtrack(&with_channel("simulate", &["--deltas", "0.1"]));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`n`"), "{err}");

    let out = qtrack(&["limits", "--n", "10", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`zeta`"));
}

#[test]
fn malformed_flags_exit_with_usage_code() {
    assert_eq!(qtrack(&["limits", "--n", "ten"]).status.code(), Some(2));
    assert_eq!(qtrack(&["frobnicate"]).status.code(), Some(2));
    let out = qtrack(&with_channel("limits", &["--n", "10", "--eps", "1.5"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`eps`"));
    let out = qtrack(&["limits", "--zeta", "0.9", "--slope", "2", "--intercept", "0.5", "--n", "10", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(qtrack(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"zeta": 0.2, "slope": 2, "intercept": 0.5, "n": 10, "eps": 0.1, "epsilon": 0.2}"#).unwrap();
    let out = qtrack(&["limits", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn flags_override_config_and_manifest_records_both() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"zeta": 0.2, "slope": 2, "intercept": 0.5, "n": 20, "deltas": [0.1], "trials": 40, "seed": 3}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = qtrack(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "25",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&dir.path().join("out.csv.manifest.json"));
    assert_eq!(m["plan"]["n"], 25);
    assert_eq!(m["plan"]["trials"], 40);
    assert_eq!(m["inputs"]["flags"]["n"], 25);
    assert_eq!(m["inputs"]["config_file"]["values"]["n"], 20);
    assert_eq!(m["seeds"]["master"], 3);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["inputs"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn curve_hits_one_half_at_critical_rate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let out = qtrack(&with_channel("curve", &["--n", "500", "--d", "1", "--out", csv.to_str().unwrap()]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = read_json(&dir.path().join("curve.csv.json"));
    let critical = meta["critical_rate"].as_f64().unwrap();
    let c = meta["C"].as_f64().unwrap();
    assert!((critical - c / 2.0).abs() < 1e-12);
    assert!(meta["V"][0].as_f64().unwrap() > 0.0);

    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["rate", "eps_hat"]);
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    let at = rows.iter().find(|r| r.0 == critical).expect("critical row");
    assert!((at.1 - 0.5).abs() < 1e-9);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
}

fn simulate_bytes(dir: &Path, name: &str, threads: &str, via_env: bool) -> Vec<u8> {
    let csv = dir.join(name);
    let mut args = with_channel(
        "simulate",
        &["--n", "30", "--deltas", "0.1,0.05,0.02", "--trials", "200", "--seed", "11"],
    );
    args.extend_from_slice(&["--out", csv.to_str().unwrap()]);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qtrack"));
    cmd.args(&args);
    if via_env {
        cmd.env("QTRACK_THREADS", threads);
    } else {
        cmd.env_remove("QTRACK_THREADS").args(["--threads", threads]);
    }
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    fs::read(csv).unwrap()
}

#[test]
fn simulate_output_is_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let one = simulate_bytes(dir.path(), "a.csv", "1", false);
    let four = simulate_bytes(dir.path(), "b.csv", "4", false);
    let env = simulate_bytes(dir.path(), "c.csv", "2", true);
    assert_eq!(one, four);
    assert_eq!(one, env);
    let text = String::from_utf8(one).unwrap();
    assert!(text.starts_with("delta,rate,trials,excess,p_hat,ci_low,ci_high,eps_hat"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn track_emits_trace_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let out = qtrack(&with_channel(
        "track",
        &["--n", "40", "--delta", "0.1", "--seed", "7", "--trajectory", traj.to_str().unwrap()],
    ));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["measures"].as_array().unwrap().len(), 40);
    assert_eq!(v["x"].as_array().unwrap().len(), 40);
    assert_eq!(v["y"].as_array().unwrap().len(), 40);
    assert!(v["decoded"]["s_hat"][0].as_f64().is_some());
    assert_eq!(v["decoded"]["score_units"], "nats");

    let text = fs::read_to_string(&traj).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,loc_0,unwrapped_0,est_loc_0,est_unwrapped_0");
    assert_eq!(lines.count(), 41);

    let again = qtrack(&with_channel("track", &["--n", "40", "--delta", "0.1", "--seed", "7"]));
    assert_eq!(json_of(&again)["y"], v["y"]);
}

#[test]
fn budget_overflow_is_a_runtime_error() {
    let out = qtrack(&with_channel(
        "simulate",
        &["--n", "200", "--deltas", "0.001", "--trials", "1", "--budget", "1000"],
    ));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn validate_channel_passes_for_affine_map() {
    let out = qtrack(&with_channel("validate-channel", &[]));
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["ok"], true);
    assert!(!v["continuity"].as_array().unwrap().is_empty());
    for m in v["transition_matrices"].as_array().unwrap() {
        assert!(m["stochasticity_defect"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn fixed_state_prior_needs_location() {
    let out = qtrack(&with_channel(
        "simulate",
        &["--n", "10", "--deltas", "0.1", "--prior", "fixed-state"],
    ));
    assert_eq!(out.status.code(), Some(2));
    let ok = qtrack(&with_channel(
        "simulate",
        &["--n", "10", "--deltas", "0.1", "--trials", "10", "--prior", "fixed-state", "--s", "0.3", "--v", "-0.05"],
    ));
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
}
