//! End-to-end runs through the same entry point the binary uses, minus argv.

use std::path::Path;

use serde_json::{json, Value};

use super::{run_from_path, RunOptions};
use crate::config::Command;

fn pampere(command: &str, config: &Value, dir: &Path, seed: Option<u64>, dump: bool) -> i32 {
    let cfg = dir.join(format!("{command}.json"));
    std::fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let opts = RunOptions { out_dir: Some(dir.join("out")), seed, timings: false, dump };
    run_from_path(command.parse::<Command>().unwrap(), &cfg, &opts)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

fn nontrivial() -> Value {
    json!({
        "dimension": 2,
        "resolution": 32,
        "time_samples": 64,
        "tol": 1e-7,
        "a": [[1.2, 0.3], [0.3, 0.9]],
        "b": [0.4, -0.2],
        "gamma": 1.5,
        "f1": "1 + 0.2*cos(2*pi*x1)*cos(2*pi*x2)",
        "f2": "1 + 0.5*sin(2*pi*t)"
    })
}

#[test]
fn fit_recovers_built_parameters() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pampere("build-ancient", &nontrivial(), dir.path(), None, false), 0);
    let built = summary(dir.path());
    std::fs::rename(dir.path().join("out/ancient.json"), dir.path().join("ancient.json")).unwrap();

    let mut cfg = nontrivial();
    cfg["ancient"] = json!("ancient.json");
    assert_eq!(pampere("fit-decomposition", &cfg, dir.path(), None, false), 0);
    let s = summary(dir.path());
    assert!(s["max_parameter_error"].as_f64().unwrap() <= 1e-8, "{s}");
    assert!((s["tau"].as_f64().unwrap() - built["tau"].as_f64().unwrap()).abs() <= 1e-8);
    assert!(s["residuals"]["mean_identity"].as_f64().unwrap() <= 1e-10);
    assert!(s["lattice_quotient_defect"].as_f64().unwrap() <= 1e-10);
    assert!(s["min_quotient"].as_f64().unwrap() > 0.0);
}

#[test]
fn homogenize_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "dimension": 1,
        "box": {"lower": [0.0], "upper": [1.0], "resolution": [64]},
        "t0": -0.5,
        "steps": 32,
        "eps": [0.5, 0.25, 0.125],
        "oscillation": "(1 + 0.3*cos(2*pi*x1))*(1 + 0.3*sin(2*pi*t))"
    });
    assert_eq!(pampere("homogenize-sweep", &cfg, dir.path(), None, false), 0);
    let csv = std::fs::read_to_string(dir.path().join("out/homogenize-sweep.csv")).unwrap();
    let gaps: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(gaps.len(), 3);
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    assert_eq!(summary(dir.path())["gap_nonincreasing"], json!(true));
}

#[test]
fn ibvp_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "dimension": 2,
        "box": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0], "resolution": [8, 8]},
        "t0": -0.25,
        "steps": 4,
        "f": "1",
        "g": "-t + 0.5*(x1^2 + x2^2)",
        "exact": "-t + 0.5*(x1^2 + x2^2)"
    });
    assert_eq!(pampere("ibvp-solve", &cfg, dir.path(), None, true), 0);
    let s = summary(dir.path());
    assert!(s["max_error"].as_f64().unwrap() < 1e-8, "{s}");
    let (h, v) = crate::dump::read_dump(&dir.path().join("out/u.bin")).unwrap();
    assert_eq!(h.shape, vec![5, 9, 9]);
    assert_eq!(v.len(), 5 * 81);
}

#[test]
fn level_set_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "dimension": 2,
        "u": "-t + 0.5*(x1^2 + x2^2)",
        "levels": [1, 2],
        "window": {"lower": [-3.0, -3.0], "upper": [3.0, 3.0], "resolution": [120, 120]},
        "m1": 1, "m2": 1
    });
    assert_eq!(pampere("level-set", &cfg, dir.path(), None, false), 0);
    let s = summary(dir.path());
    let rows = s["levels"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[1]["ratio"].as_f64().unwrap() - 0.5).abs() < 0.025);
    assert_eq!(rows[0]["normalization_holds"], json!(true));
}

#[test]
fn seeded_runs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"dimension": 2, "u": "-t + 0.5*(x1^2 + x2^2)", "quotient_samples": 50, "radii": [10, 20]});
    let read = |d: &Path| {
        (
            std::fs::read(d.join("out/summary.json")).unwrap(),
            std::fs::read(d.join("out/fit-decomposition.csv")).unwrap(),
        )
    };
    assert_eq!(pampere("fit-decomposition", &cfg, dir.path(), Some(4), false), 0);
    let first = read(dir.path());
    assert_eq!(pampere("fit-decomposition", &cfg, dir.path(), Some(4), false), 0);
    assert_eq!(first, read(dir.path()));
}
