use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
[grid]
nx = 12
ny = 12

[params]
eps = 0.1
b0 = 0.01
b1 = 0.01

[time]
t_end = 1.0
dt0 = 1e-3
dt_min = 1e-3
dt_max = 1e-3

[initial]
phi = disk
radius = 0.3
width = 0.1
";

fn chve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chve")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("case.ini");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = chve(&["run", &cfg, "--output-dir", out.to_str().unwrap(), "--max-steps", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(out.join("snap_00000000.vtk").exists());
    assert!(out.join("snap_00000003.vtk").exists());
    assert!(out.join("restart_00000003.bin").exists());

    let o = chve(&["energy-report", out.join("diagnostics.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!o.stdout.is_empty());
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[output]\ncolour = red\n"));
    let o = chve(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn bad_values_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [SMALL.replace("nx = 12", "nx = twelve"), SMALL.replace("eps = 0.1", "eps = -0.1")] {
        let cfg = write_config(dir.path(), &bad);
        assert_eq!(chve(&["run", &cfg]).status.code(), Some(2));
    }
}

#[test]
fn missing_config_is_a_runtime_error() {
    assert_eq!(chve(&["run", "/nonexistent/case.ini"]).status.code(), Some(3));
}

#[test]
fn unreadable_csv_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "not,a,diagnostics,file\n").unwrap();
    assert_ne!(chve(&["energy-report", path.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn verify_constitutive_passes() {
    let o = chve(&["verify", "constitutive"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 4, "{text}");
}

#[test]
fn verify_rejects_unknown_suite() {
    assert_eq!(chve(&["verify", "nonsense"]).status.code(), Some(2));
}
