use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn pampere(command: &str, config: &Value, dir: &Path, extra: &[&str]) -> i32 {
    let cfg = dir.join(format!("{command}.json"));
    std::fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_pampere"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
        .status;
    status.code().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

#[test]
fn trivial_ancient_is_paraboloid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"dimension": 2, "resolution": 16, "time_samples": 16, "f1": "1"});
    assert_eq!(pampere("build-ancient", &cfg, dir.path(), &[]), 0);
    let s = summary(dir.path());
    assert_eq!(s["tau"], json!(1.0));
    assert!(s["pde_residual"].as_f64().unwrap() <= 1e-12);
    assert!(dir.path().join("out/ancient.json").exists());
    assert!(dir.path().join("out/build-ancient.csv").exists());
}


#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = json!({"dimension": 2, "u": "-t + 0.5*(x1^2 + x2^2)", "quotient_samples": 50});
    cfg["radii"] = json!([10, 20]);
    let read = |d: &Path| {
        (
            std::fs::read(d.join("out/summary.json")).unwrap(),
            std::fs::read(d.join("out/fit-decomposition.csv")).unwrap(),
        )
    };
    assert_eq!(pampere("fit-decomposition", &cfg, dir.path(), &["--seed", "9"]), 0);
    let first = read(dir.path());
    assert_eq!(pampere("fit-decomposition", &cfg, dir.path(), &["--seed", "9"]), 0);
    assert_eq!(first, read(dir.path()));
    assert_eq!(summary(dir.path())["wall_ms"], json!(0.0));
}

#[test]
fn invalid_config_exits_2_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"dimension": 2, "f1": "1 + sin(", "resolution": 16});
    assert_eq!(pampere("cell-solve", &cfg, dir.path(), &[]), 2);
    let err: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/error.json")).unwrap()).unwrap();
    assert_eq!(err["exit_code"], json!(2));
    assert_eq!(err["error"], json!("config"));

    let cfg = json!({"dimension": 2, "bogus": true});
    assert_eq!(pampere("cell-solve", &cfg, dir.path(), &[]), 2);
    let cfg = json!({"command": "level-set", "dimension": 2, "f1": "1"});
    assert_eq!(pampere("cell-solve", &cfg, dir.path(), &[]), 2);
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"dimension": 2, "resolution": 16, "tol": 1e-18, "f1": "1 + 0.3*cos(2*pi*x1)"});
    assert_eq!(pampere("cell-solve", &cfg, dir.path(), &[]), 3);
    let err: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/error.json")).unwrap()).unwrap();
    assert_eq!(err["error"], json!("non_convergence"));
}

#[test]
fn bad_arguments_exit_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_pampere")).arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_pampere")).arg("cell-solve").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
