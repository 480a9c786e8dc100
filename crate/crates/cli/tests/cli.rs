//! Exit codes, error JSON and output files of the `sks` binary.

use std::fs;
use std::process::Command;

fn sks() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sks"))
}

#[test]
fn simulate_twice_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let status = sks()
            .args(["simulate", "--N", "16", "--M", "32", "--seed", "3", "--out"])
            .arg(dir.path().join(name))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(a, b);
    assert!(dir.path().join("a/manifest.json").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "[space]\nN = 12\n[scheme]\nM = 16\n").unwrap();
    let out = sks()
        .args(["simulate", "--N", "10", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["meta"]["space"]["elements"], 10);
    assert_eq!(summary["meta"]["params"]["steps"], 16);
}

#[test]
fn config_errors_exit_with_two_and_json() {
    let out = sks().args(["simulate", "--r", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("r >= 4"));

    let out = sks().args(["simulate", "--M", "100"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = sks()
        .args(["simulate", "--set", "nonsense=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // one Newton iteration cannot reach the tolerance from a large state
    let out = sks()
        .args([
            "simulate",
            "--N",
            "16",
            "--M",
            "4",
            "--set",
            "newton_max_iter=1",
            "--set",
            "u0_scale=20",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(err["error"], "newton_divergence");
    assert!(err["path"]["seed"].is_u64());
    assert_eq!(err["newton"]["step"], 0);
}

#[test]
fn gronwall_check_summary() {
    let out = sks()
        .args(["gronwall-check", "--set", "instances=50"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let s: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["violations"], 0);
}

#[test]
fn matrix_dump_prints_triplets() {
    let out = sks()
        .args(["dump-matrix", "mass", "--N", "8"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // 8 rows with 7 nonzeros each
    assert_eq!(text.lines().count(), 56);
    assert!(text.lines().all(|l| l.split(' ').count() == 3));
}
