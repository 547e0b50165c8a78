use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn smc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smc")).args(args).output().expect("spawn smc")
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn design_sigma_prints_coefficients() {
    let out = smc(&["design-sigma", "--r", "2", "--ts", "1"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["c"][0].as_f64().unwrap(), 14.0);
    assert_eq!(v["c_int"].as_f64().unwrap(), 100.0);

    let out = smc(&["design-sigma", "--r", "2", "--ts", "1", "--no-integral"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["c"][0].as_f64().unwrap(), 10.0);
    assert!(v.get("c_int").is_none());
}

#[test]
fn lv_pd_run_writes_trace_metrics_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lv.csv");
    let metrics = dir.path().join("lv.json");
    let out = smc(&[
        "run",
        "lv",
        "--controller",
        "pd",
        "--unperturbed",
        "--tend",
        "5",
        "--out",
        csv.to_str().unwrap(),
        "--metrics",
        metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&metrics);
    assert_eq!(m["case"], "lv");
    assert_eq!(m["controller"], "pd");
    assert_eq!(m["perturbed"], false);
    assert!(m["metrics"]["j_e_deg"].as_f64().unwrap().is_finite());
    let header = std::fs::read_to_string(&csv).unwrap();
    let header = header.lines().next().unwrap();
    assert!(header.starts_with("time,"));
    assert!(header.contains(",theta,") && header.contains(",beta,"));
    assert!(dir.path().join("lv.config.json").exists());
}

#[test]
fn rerun_from_echoed_config_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = smc(&["run", "--scenario", "rpl-stw", "--tend", "20", "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = dir.path().join("a.config.json");
    let out = smc(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"case": "lv", "lv": {"kp": 1.0, "kpp": 2.0}}"#).unwrap();
    let out = smc(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let e = stderr_error(&out);
    assert_eq!(e["error"]["kind"], "config");
    assert!(e["error"]["message"].as_str().unwrap().contains("kpp"));
}

#[test]
fn alpha_out_of_range_is_rejected() {
    let out = smc(&["prd-id", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_error(&out)["error"]["message"].as_str().unwrap().contains("alpha"));
}

#[test]
fn prd_on_the_launch_vehicle_bench_is_five() {
    let out = smc(&["prd-id", "--model", "lv_prd_bench", "--check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["prd"], 5);
    assert_eq!(v["algebraic_relative_degree"], 5);
}

#[test]
fn prd_from_a_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let traces = dir.path().join("t.csv");
    std::fs::write(&model, r#"{"num": [2.0], "den": [1.0, 3.0, 2.0]}"#).unwrap();
    let out = smc(&["prd-id", "--model", model.to_str().unwrap(), "--traces", traces.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["prd"], 2);
    let text = std::fs::read_to_string(&traces).unwrap();
    assert!(text.starts_with("time,y,d1,d2"));
}

#[test]
fn failed_check_exits_three() {
    // the default launch-vehicle loop misses the tracking target
    let out = smc(&["run", "lv", "--tend", "12", "--check"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_error(&out)["error"]["kind"], "check");
}

#[test]
fn diverging_run_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("unstable.json");
    std::fs::write(
        &p,
        r#"{"case": "custom", "controller": "smc1", "custom": {"num": [1.0], "den": [1.0, -50.0], "rho": 0.1}}"#,
    )
    .unwrap();
    let out = smc(&["run", "--config", p.to_str().unwrap(), "--tend", "100"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_error(&out)["error"]["kind"], "divergence");
}

#[test]
fn diff_of_a_sine() {
    let out = smc(&["diff", "--order", "2", "--L", "1.1", "--dt", "1e-3", "--sine", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "z0,z1,z2,residual");
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((last[1] - 20f64.cos()).abs() < 1e-2, "{last:?}");
}

#[test]
fn scenarios_resolve_and_list() {
    let out = smc(&["scenarios"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "lv-smc1"));
    assert!(text.lines().any(|l| l == "rpl-pid-relaxed"));
}
