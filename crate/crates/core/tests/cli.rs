//! The `fedexprox` binary: presets, config files, comparison, exit codes.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedexprox"))
}

#[test]
fn preset_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let status = bin()
            .args([
                "run",
                "--preset",
                "example1",
                "--n",
                "4",
                "--theta",
                "1",
                "--gamma",
                "1",
                "--output-dir",
            ])
            .arg(&out_dir)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        outputs.push(out_dir);
    }
    for name in ["00_fedprox_g1.csv", "01_fedexprox_g1.csv"] {
        let a = fs::read(outputs[0].join(name)).unwrap();
        let b = fs::read(outputs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outputs[0].join("meta.json")).unwrap()).unwrap();
    let gain = meta["runs"][1]["rate_report"]["fedexp_gain"]
        .as_f64()
        .unwrap();
    assert!((gain - 4.0).abs() < 1e-8);
}

#[test]
fn compare_prints_speedup_and_incomparable() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ex");
    assert!(bin()
        .args(["run", "--preset", "example1", "--output-dir"])
        .arg(&out_dir)
        .output()
        .unwrap()
        .status
        .success());
    let a = out_dir.join("00_fedprox_g1.csv");
    let b = out_dir.join("01_fedexprox_g1.csv");
    let out = bin()
        .arg("compare")
        .arg(&a)
        .arg(&b)
        .args(["--threshold", "1e-6"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "speedup");
    assert!(v["factor"].as_f64().unwrap() > 1.0);
    let out = bin()
        .arg("compare")
        .arg(&a)
        .arg(&a)
        .arg("--threshold=-1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "incomparable");
}

#[test]
fn config_file_run_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "schema": "fedexprox-config/v1",
        "name": "cli",
        "problem": {"generator": "regression", "n": 3, "rows_per_client": 2, "d": 8, "seed": 1},
        "algorithms": [
            {"label": "fedprox", "gamma": 1.0, "alpha": {"policy": "constant", "value": 1.0}},
            {"label": "stops", "gamma": 1.0, "alpha": {"policy": "stops"}, "tau": 2, "seed": 4}
        ],
        "iterations": 50,
        "output_dir": dir.path().join("out"),
    });
    let path = dir.path().join("cfg.json");
    fs::write(&path, cfg.to_string()).unwrap();
    assert!(bin()
        .args(["run", "--config"])
        .arg(&path)
        .output()
        .unwrap()
        .status
        .success());
    assert!(dir.path().join("out/01_stops.csv").exists());
    let out = bin()
        .args(["rates", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["stops"]["tau"], 2);
}

#[test]
fn validation_errors_exit_with_code_two_and_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(
        &path,
        r#"{"name":"x","problem":{"generator":"example1","n":2,"theta":1.0},"algorithms":[],"iterations":5,"output_dir":"x"}"#,
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(v["error"], "config");

    let out = bin().args(["run", "--preset", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
