use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::{json, Value};
use tempfile::TempDir;

fn tvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvm"))
        .args(args)
        .env_remove("TVM_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn experiment_config(horizon: f64, n: usize) -> Value {
    json!({
        "tfbm": {"hurst": 0.7, "lambda": 1.0},
        "vasicek": {"a": 1.0, "b": 0.5, "sigma": 0.5, "y0": 0.1},
        "horizons": [horizon],
        "step": 0.01,
        "n_replications": n,
        "master_seed": 2024,
        "tests": ["a_normal", "b_ratio", "zuv_covariance", "joint"]
    })
}

#[test]
fn constants_at_half_order() {
    let o = tvm(&["constants", "--H", "0.5", "--lambda", "1", "--b", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["alpha_sq"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["beta_sq_quadrature"].as_f64().unwrap() - 0.25).abs() < 1e-9);
    assert!((v["beta_sq_hypergeometric"].as_f64().unwrap() - 0.25).abs() < 1e-9);
    assert!(v["rel_gap"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["sigma_matrix"].as_array().unwrap().len(), 3);
    assert!(v["limit_law_params"]["a_limit_var"].is_number());
}

#[test]
fn constants_reports_euler_route_for_extreme_rates() {
    let o = tvm(&["constants", "--H", "0.7", "--lambda", "1", "--b", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["hypergeometric_route"], "euler");
    assert!(v["rel_gap"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn missing_flag_is_usage_error() {
    let o = tvm(&["constants", "--lambda", "1", "--b", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn zero_hurst_is_rejected() {
    let o = tvm(&["constants", "--H", "0", "--lambda", "1", "--b", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("H must be positive"), "{}", stderr(&o));
}

#[test]
fn every_subcommand_help_lists_units() {
    for sub in ["constants", "sample", "estimate", "experiment", "verify-lemmas"] {
        let o = tvm(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8_lossy(&o.stdout);
        assert!(text.contains("--threads"), "{sub}");
        assert!(text.contains("time unit") || text.contains("64-bit"), "{sub}: {text}");
    }
}

#[test]
fn small_experiment_writes_report_and_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &experiment_config(5.0, 10));
    let out = dir.path().join("out");
    let start = Instant::now();
    let o = tvm(&["experiment", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(start.elapsed().as_secs_f64() < 30.0);

    let report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["row_count"], 10);
    assert_eq!(report["verdicts"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(out.join("replications.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), tvm_header());
    assert_eq!(lines.count(), 10);
}

fn tvm_header() -> &'static str {
    "replication,seed,T,a_hat,b_hat,a_scaled,b_scaled,z_T,u_T,v_T,denominator"
}

fn replications_bytes(dir: &Path, cfg: &str, tag: &str, threads: Option<&str>) -> Vec<u8> {
    let out = dir.join(tag);
    let mut args = vec!["experiment", "--config", cfg, "--out-dir", out.to_str().unwrap()];
    if let Some(t) = threads {
        args.extend(["--threads", t]);
    }
    let o = tvm(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    fs::read(out.join("replications.csv")).unwrap()
}

#[test]
fn rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &experiment_config(5.0, 40));
    let first = replications_bytes(dir.path(), &cfg, "a", None);
    let second = replications_bytes(dir.path(), &cfg, "b", None);
    assert_eq!(first, second);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &experiment_config(5.0, 40));
    let one = replications_bytes(dir.path(), &cfg, "t1", Some("1"));
    let four = replications_bytes(dir.path(), &cfg, "t4", Some("4"));
    assert_eq!(one, four);

    let out = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_tvm"))
        .args(["experiment", "--config", &cfg, "--out-dir", out.to_str().unwrap()])
        .env("TVM_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(out.join("replications.csv")).unwrap(), one);
}

#[test]
fn seed_override_changes_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &experiment_config(5.0, 20));
    let base = replications_bytes(dir.path(), &cfg, "base", None);
    let out = dir.path().join("seeded");
    let o = tvm(&[
        "experiment",
        "--config",
        &cfg,
        "--seed",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_ne!(fs::read(out.join("replications.csv")).unwrap(), base);
}

#[test]
fn overflow_guard_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut value = experiment_config(60.0, 10);
    value["vasicek"]["b"] = json!(1.0);
    value["step"] = json!(0.02);
    let cfg = write_config(dir.path(), "cfg.json", &value);
    let out = dir.path().join("out");
    let o = tvm(&["experiment", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("overflow guard"), "{}", stderr(&o));
    assert!(!out.join("report.json").exists());
    assert!(!out.join("replications.csv").exists());
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut value = experiment_config(5.0, 10);
    value["replications"] = json!(3);
    let cfg = write_config(dir.path(), "cfg.json", &value);
    let out = dir.path().join("out");
    let o = tvm(&["experiment", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("absent.json");
    let out = dir.path().join("paths.csv");
    let o = tvm(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());
}

#[test]
fn unwritable_destination_leaves_no_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sample.json",
        &json!({"tfbm": {"hurst": 0.7, "lambda": 1.0}, "horizon": 1.0, "step": 0.1, "n_paths": 2, "seed": 3}),
    );
    let out = dir.path().join("missing_dir").join("paths.csv");
    let o = tvm(&["sample", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());
}

#[test]
fn sample_writes_paths_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sample.json",
        &json!({"tfbm": {"hurst": 0.7, "lambda": 1.0}, "horizon": 1.0, "step": 0.25, "n_paths": 3, "seed": 11}),
    );
    let out = dir.path().join("paths.csv");
    let o = tvm(&[
        "sample",
        "--config",
        &cfg,
        "--seed",
        "12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,path_0,path_1,path_2");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,0,0,0"));
    let meta: Value = serde_json::from_slice(&fs::read(dir.path().join("paths.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 12);
    assert_eq!(meta["n_paths"], 3);
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["grid"]["n_steps"], 4);
}

#[test]
fn estimate_writes_one_row_per_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "estimate.json",
        &json!({
            "tfbm": {"hurst": 0.7, "lambda": 1.0},
            "vasicek": {"a": 1.0, "b": 0.5, "sigma": 0.5, "y0": 0.1},
            "horizon": 5.0, "step": 0.01, "n_paths": 7, "seed": 5
        }),
    );
    let out = dir.path().join("est.csv");
    let o = tvm(&["estimate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "replication,seed,T,a_hat,b_hat,z_T,u_T,v_T,denominator"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    for r in rows {
        let b_hat: f64 = r.split(',').nth(4).unwrap().parse().unwrap();
        assert!((b_hat - 0.5).abs() < 0.5, "{r}");
    }
}

#[test]
fn verify_lemmas_passes_at_reference_point() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("lemmas.json");
    let o = tvm(&[
        "verify-lemmas",
        "--H",
        "0.7",
        "--lambda",
        "1",
        "--b",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["moments"].as_array().unwrap().len(), 4);
}

#[test]
fn zero_threads_is_rejected() {
    let o = tvm(&["--threads", "0", "constants", "--H", "0.5", "--lambda", "1", "--b", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
