use std::fs;
use std::path::Path;
use std::process::Command;

fn niche(config: &str, task: &str, out: &Path) -> i32 {
    let cfg = out.join("run.cfg");
    fs::create_dir_all(out).unwrap();
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_niche"))
        .args([task, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap()
        .code()
        .unwrap()
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(niche("kernel.radus = 1\n", "eig", dir.path()), 2);
}

#[test]
fn nonmonotone_schedule_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(niche("numerics.R_schedule = 8, 4\n", "eig", dir.path()), 2);
}

#[test]
fn hostile_speeds_run_is_numerical_and_still_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let code = niche("growth.a.value = -0.3\nspeeds.levels = 2\n", "speeds", dir.path());
    assert_eq!(code, 3);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(
        manifest.contains("status = failed") && manifest.contains("exit_code = 3"),
        "{manifest}"
    );
}

#[test]
fn eig_run_writes_outputs_and_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "c = -0.5, 0, 0.5\nnumerics.R = 6\nnumerics.h = 0.1\n";
    assert_eq!(niche(cfg, "eig", dir.path()), 0);
    let curve = fs::read_to_string(dir.path().join("lambda_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4, "{curve}");
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    for key in [
        "numerics.eigen_tol = 0.0000000001",
        "kernel.preset = uniform",
        "numerics.R_schedule = none",
        "seed = 0",
    ] {
        assert!(manifest.contains(key), "missing `{key}` in\n{manifest}");
    }
}

#[test]
fn bounds_run_succeeds_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(niche("", "bounds", dir.path()), 0);
    assert!(dir.path().join("report.txt").exists());
    assert!(dir.path().join("lambda_bounds.csv").exists());
}
