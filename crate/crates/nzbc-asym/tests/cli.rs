use nzbc_asym::classify::{classify_with, ClassifyOptions, RegimeReport};
use nzbc_asym::config::ScatteringBlock;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nzbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nzbc")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str, body: &str) -> String {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn field_output_is_deterministic_across_thread_counts() {
    let cfg = config("d1_gaussian.json");
    let a = nzbc(&["field", "--config", &cfg, "--threads", "1"]);
    let b = nzbc(&["field", "--config", &cfg, "--threads", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,xi,window,re_q,im_q,abs_q"));
    for row in lines {
        let cols: Vec<&str> = row.split(',').collect();
        if cols[3].ends_with("plane_wave") {
            assert!((cols[6].parse::<f64>().unwrap() - 1.0).abs() < 1e-14, "{row}");
        }
    }
}

#[test]
fn malformed_configs_exit_nonzero() {
    let bad = scratch("bad.json", r#"{"scattering": {"q_o": 1.0, "p": [-2.0]}}"#);
    let out = nzbc(&["classify", "--config", &bad]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
    let upper = scratch("upper.json", r#"{"scattering": {"q_o": 1.0, "p": [-2.0, 0.5]}}"#);
    assert!(!nzbc(&["classify", "--config", &upper]).status.success());
    assert!(!nzbc(&["classify"]).status.success());
    let cfg = config("d1_gaussian.json");
    assert!(!nzbc(&["classify", "--config", &cfg, "--tol-override", "edge_threshold=-1"]).status.success());
}

#[test]
fn classify_report_round_trips() {
    let out = nzbc(&["classify", "--config", &config("trap_wake.json"), "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let block: ScatteringBlock = serde_json::from_value(doc["scattering"].clone()).unwrap();
    let report: RegimeReport = serde_json::from_value(doc["report"].clone()).unwrap();
    let again = classify_with(&block.to_data().unwrap(), &ClassifyOptions::default()).unwrap();
    assert_eq!(report, again);
}

#[test]
fn wake_ray_needs_a_wake() {
    let out = nzbc(&["wake-ray", "--config", &config("d1_gaussian.json")]);
    assert!(!out.status.success());
    let out = nzbc(&["wake-ray", "--config", &config("trap_wake.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}

#[test]
fn simulate_writes_rows_and_manifest() {
    let cfg = scratch(
        "background.json",
        r#"{"scattering": {"q_o": 1.0, "q_minus_phase": 0.3, "p": [0.0, -1.2]},
            "oracle": {"l": 20.0, "n": 256, "dt": 0.01, "t_max": 10.0, "snapshot_dt": 5.0, "initial": {"kind": "background"}}}"#,
    );
    let out_path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("background.csv");
    let out = nzbc(&["simulate", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 256);
    for row in text.lines().skip(1) {
        let c: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((c[2] - 0.3f64.cos()).abs() < 1e-9 && (c[3] - 0.3f64.sin()).abs() < 1e-9, "{row}");
    }
    let manifest_path = PathBuf::from(format!("{}.manifest.json", out_path.display()));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["times"].as_array().unwrap().len(), 3);
}

#[test]
fn oracle_guards_surface_as_errors() {
    // ray leaving the box
    let cfg = scratch(
        "far_ray.json",
        r#"{"scattering": {"q_o": 1.0, "p": [0.0, -1.2]},
            "oracle": {"l": 20.0, "n": 1024, "dt": 0.002, "t_max": 4.0, "snapshot_dt": 1.0, "initial": {"kind": "soliton"}},
            "compare": {"rays": [-7.0], "times": [4.0]}}"#,
    );
    let out = nzbc(&["compare", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("leaves the box"));
    // past the roundoff horizon
    let cfg = scratch(
        "long.json",
        r#"{"scattering": {"q_o": 1.0, "p": [0.0, -1.2]},
            "oracle": {"l": 20.0, "n": 512, "dt": 0.01, "t_max": 30.0, "snapshot_dt": 1.0, "initial": {"kind": "soliton"}}}"#,
    );
    let out = nzbc(&["simulate", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn soliton_compare_on_its_ray() {
    let out = nzbc(&["compare", "--config", &config("soliton_compare.json"), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["max_abs_err"].as_f64().unwrap() < 1e-4);
}

#[test]
fn selftest_passes() {
    let out = nzbc(&["selftest", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let checks: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(checks.as_array().unwrap().iter().all(|c| c["pass"] == true));
}
