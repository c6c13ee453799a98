//! End-to-end checks of the command-line interface: exit codes, output
//! files, and the stability of the debug dump.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_impaired-mdp"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_emits_csv_and_summary_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "instance": "random-2x2x3",
            "impairment": {"type": "geometric", "p": 0.5},
            "algorithm": "alg1",
            "episodes": 15,
            "seed": 11
        }"#,
    );
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("alg1_random-2x2x3_11.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(tmp.path().join("alg1_random-2x2x3_11_summary.json").exists());
    // the printed summary is valid JSON
    let first_line = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(first_line.lines().next().unwrap()).unwrap();
    assert!(v["config_hash"].is_string());
}

#[test]
fn seed_and_episode_overrides_take_effect() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "instance": "random-2x2x3",
            "impairment": {"type": "missing", "lambda": [0.9]},
            "algorithm": "alg3",
            "episodes": 5,
            "seed": 1
        }"#,
    );
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .arg("--seed")
        .arg("42")
        .arg("--episodes")
        .arg("8")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("alg3_random-2x2x3_42.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn invalid_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "instance": "random-2x2x3",
            "impairment": {"type": "missing", "lambda": [0.9]},
            "algorithm": "alg1",
            "episodes": 5,
            "seed": 1
        }"#,
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alg1"), "unhelpful error: {err}");
}

#[test]
fn cap_exceeded_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "instance": "random-3x3x6",
            "impairment": {"type": "geometric", "p": 0.5},
            "algorithm": "alg1",
            "episodes": 5,
            "seed": 1,
            "aug_cap": 10
        }"#,
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn dump_aug_is_stable_and_structured() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "instance": "fig2-d1",
            "impairment": {"type": "constant", "d": 1},
            "algorithm": "oracle-only",
            "episodes": 1,
            "seed": 0
        }"#,
    );
    let a = bin().arg("dump-aug").arg(&cfg).output().unwrap();
    let b = bin().arg("dump-aug").arg(&cfg).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["num_states"], 2);
    assert_eq!(v["real_horizon"], 3);
    // constant delay 1 on the dichotomy instance: single unobserved start
    assert_eq!(v["layers"][0].as_array().unwrap().len(), 1);
    assert_eq!(v["layers"].as_array().unwrap().len(), 3);
}

#[test]
fn bench_prop3_prints_the_dichotomy_table() {
    let out = bin().arg("bench-prop3").arg("--max-d").arg("2").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("0.500000000"));
    assert!(text.contains("0.000000000"));
}

#[test]
fn gap_subcommand_emits_a_json_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "instance": "fig2-d1",
            "impairment": {"type": "constant", "d": 2},
            "algorithm": "oracle-only",
            "episodes": 1,
            "seed": 0
        }"#,
    );
    let out = bin().arg("gap").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["gap"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(v["bound"].as_f64().unwrap() >= v["gap"].as_f64().unwrap() - 1e-9);
}
