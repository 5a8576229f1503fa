//! Command-line behaviour of the binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_condsqueeze"))
}

#[test]
fn sweep_writes_files_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "preset = \"adiabatic\"\nnbar_points = 3\nkappa_tau = 100.0\n",
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args([
            "--kappa-tau",
            "150",
            "--mode",
            "optimal",
            "--mode",
            "adiabatic",
            "--svg",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.contains("g_over_kappa=5e-2"));
    assert!(csv.contains("kappa_tau=1.5e2"));
    assert_eq!(csv.lines().count(), 3 + 6);
    assert!(dir.path().join("sweep.svg").exists());
}

#[test]
fn point_prints_json() {
    let out = bin()
        .args(["point", "--preset", "delic2018", "--nbar", "100"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["row"]["s_cond_db"].as_f64().unwrap() > 9.0);
    assert_eq!(v["cm"]["v_out"].as_array().unwrap().len(), 4);
}

#[test]
fn failures_are_machine_readable() {
    let out = bin()
        .args(["point", "--g-over-kappa", "0", "--nbar", "3"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "no_coupling");
    assert_eq!(v["error"]["nbar"], 3.0);

    let out = bin()
        .args(["point", "--eta", "2", "--nbar", "1"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "invalid_parameter");

    let out = bin()
        .args(["sweep", "--nbar-points", "1"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "config");
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).matches("PASS").count(),
        5
    );
}

#[test]
fn modes_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["modes", "--preset", "delic2018", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["overlap"].as_f64().unwrap() < 1.0);
    assert!(dir.path().join("modes.csv").exists());
}
