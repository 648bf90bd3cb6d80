use std::fs;
use std::process::Command;

use linescan_core::cloudio::write_stl;
use linescan_core::synthetic;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_linescan"));
    c.env_remove("LINESCAN_SPEED").env("RUST_LOG", "error");
    c
}

fn box_stl(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("box.stl");
    fs::write(
        &path,
        write_stl(&synthetic::open_box_mesh(150.0, 60.0, 40.0)),
    )
    .unwrap();
    path
}

#[test]
fn plan_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let input = box_stl(dir.path());
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "plan_format = \"csv\"\nspeed = 100\n").unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "plan",
            input.to_str().unwrap(),
            "--seed",
            "4",
            "--out",
            out.to_str().unwrap(),
        ])
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "pso_iterations=50",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let plan = fs::read_to_string(out.join("plan.csv")).unwrap();
    assert!(plan.contains("# seed: 4"));
    assert!(plan.contains("\"speed\":100.0"));
    assert!(plan.contains("\"pso_iterations\":50"));

    let output = bin()
        .args([
            "verify",
            out.join("plan.csv").to_str().unwrap(),
            input.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("coverage 1.000000"));
}

#[test]
fn low_coverage_is_a_warning_exit() {
    let dir = tempfile::tempdir().unwrap();
    let input = box_stl(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "plan",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--report-only",
        ])
        .env("LINESCAN_FOV_WIDTH", "10")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"status\": \"warning\""));
}

#[test]
fn missing_input_is_a_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = bin()
        .args([
            "plan",
            dir.path().join("missing.ply").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("load stage failed"));
    assert!(!out.exists());
}

#[test]
fn bad_override_is_a_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = box_stl(dir.path());
    let status = bin()
        .args([
            "plan",
            input.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .args(["--set", "no_such_key=1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
