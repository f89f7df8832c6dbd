use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wakegait::config::{save_config, SimConfig};
use wakegait::wake::AdvectMode;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wakegait"))
}

fn small_config(dir: &Path) -> PathBuf {
    let mut cfg = SimConfig::default();
    cfg.wing.n_elements_per_side = 4;
    cfg.solver.dt_per_cycle = 50;
    cfg.solver.wake_mode = AdvectMode::Prescribed;
    cfg.field.dims = [8, 6, 6];
    cfg.output_dir = dir.join("out").to_string_lossy().into_owned();
    let p = dir.join("small.json");
    save_config(&cfg, &p).unwrap();
    p
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not one JSON object: {text}"))
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = bin().args(["simulate", "x.json", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"], "usage");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn missing_and_invalid_configs_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = bin().arg("simulate").arg(tmp.path().join("nope.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"solver": {"dt_per_cycle": 0}}"#).unwrap();
    let out = bin().arg("simulate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "config");

    let unknown = tmp.path().join("unknown.json");
    fs::write(&unknown, r#"{"wing": {"span": 1.0}}"#).unwrap();
    let out = bin().arg("simulate").arg(&unknown).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = bin().arg("check").env("WAKEGAIT_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn field_outputs_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let run = |dir: &Path, threads: &str| {
        let out = bin()
            .arg("field")
            .arg(&cfg)
            .arg("--out")
            .arg(dir)
            .env("WAKEGAIT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&a, "1");
    run(&b, "3");

    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["circulation.csv", "manifest.json", "slices.csv", "vorticity.vtk", "wake.vtk"]
    );
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n} differs");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["wake_faces"], 50 * 8);
}

#[test]
fn failed_run_leaves_incomplete_marker() {
    let tmp = TempDir::new().unwrap();
    let cfg_path = small_config(tmp.path());
    let sim_dir = tmp.path().join("sim");
    let out = bin().arg("simulate").arg(&cfg_path).arg("--out").arg(&sim_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!sim_dir.join("INCOMPLETE").exists());

    // a budget below dimension + 2 is rejected after the output directory opens
    let mut cfg = wakegait::config::load_config(&cfg_path).unwrap();
    cfg.optimize.budget = 3;
    let tight = tmp.path().join("tight.json");
    save_config(&cfg, &tight).unwrap();
    let opt_dir = tmp.path().join("opt");
    let out = bin()
        .arg("optimize")
        .arg(&tight)
        .arg(sim_dir.join("wake.vtk"))
        .arg("--out")
        .arg(&opt_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(opt_dir.join("INCOMPLETE").exists());
}

#[test]
fn optimize_writes_result_and_history() {
    let tmp = TempDir::new().unwrap();
    let cfg_path = small_config(tmp.path());
    let sim_dir = tmp.path().join("sim");
    assert_eq!(
        bin().arg("simulate").arg(&cfg_path).arg("--out").arg(&sim_dir).status().unwrap().code(),
        Some(0)
    );
    let mut cfg = wakegait::config::load_config(&cfg_path).unwrap();
    cfg.optimize.budget = 6;
    let p = tmp.path().join("opt.json");
    save_config(&cfg, &p).unwrap();
    let opt_dir = tmp.path().join("opt");
    let out = bin()
        .arg("optimize")
        .arg(&p)
        .arg(sim_dir.join("wake.vtk"))
        .args(["--perturb", "0.1", "--out"])
        .arg(&opt_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!opt_dir.join("INCOMPLETE").exists());
    let res: serde_json::Value = serde_json::from_slice(&fs::read(opt_dir.join("opt_result.json")).unwrap()).unwrap();
    let evals = res["evaluations"].as_u64().unwrap();
    assert!(evals <= 6);
    let history = fs::read_to_string(opt_dir.join("opt_history.csv")).unwrap();
    assert_eq!(history.lines().count() as u64, evals + 1);
    assert!(history.lines().next().unwrap().ends_with("cost,best_so_far,feasible"));
}

#[test]
fn check_subcommand_passes() {
    let out = bin().arg("check").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9);
}
