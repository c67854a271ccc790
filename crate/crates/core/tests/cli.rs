use std::process::Command;

use twistkam::harness::{read_csv, ExperimentConfig, SweepGrid};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twistkam"))
}

fn small_flags(cmd: &mut Command) -> &mut Command {
    cmd.args(["--kappa-min", "6", "--kappa-max", "6", "--window", "16", "--chords", "8", "--pairs", "4"]).args([
        "--quadruples",
        "2",
        "--seeds",
        "1,2",
    ])
}

#[test]
fn cf_prints_convergents() {
    let out = bin().args(["cf", "--depth", "12"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.split_whitespace().take(4).eq(["10", "1", "55", "89"])));
    assert!(text.contains("gamma0 = 3"));
}

#[test]
fn map_check_passes_on_golden_map() {
    let out = bin().args(["map-check", "--samples", "1000"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["det_deviation"].as_f64().unwrap() < 1e-12);
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let ok =
        small_flags(bin().args(["criteria", "--amplitude", "0"])).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(!read_csv(&dir.path().join("run.csv")).unwrap().is_empty());

    let infeasible = small_flags(bin().arg("criteria")).args(["--window", "12"]).output().unwrap();
    assert_eq!(infeasible.status.code(), Some(2));

    let bad = bin().args(["criteria", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));

    let violated = bin().arg("criteria").args(["--seeds", "1", "--chords", "32", "--pairs", "16"]).output().unwrap();
    assert_eq!(violated.status.code(), Some(1));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    let c = ExperimentConfig { amplitude: 0.0, ..Default::default() };
    std::fs::write(&path, c.to_toml().unwrap()).unwrap();
    let out = small_flags(bin().arg("criteria").arg("--config").arg(&path)).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = small_flags(bin().arg("criteria").arg("--config").arg(&path)).args(["--window", "12"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let base = ExperimentConfig {
        kappa_max: 6,
        window: 16,
        budgets: twistkam::distortion::Budgets { chords: 8, pairs: 4, quadruples: 2 },
        seeds: vec![1],
        ..Default::default()
    };
    let grid = SweepGrid { base, amplitude: vec![0.0, 0.0001], level: vec![], eps: vec![], kappa_max: vec![] };
    let gpath = dir.path().join("grid.toml");
    std::fs::write(&gpath, toml::to_string(&grid).unwrap()).unwrap();
    let store = dir.path().join("store.jsonl");
    for round in 0..2 {
        let out = bin().arg("sweep").arg(&gpath).arg("--store").arg(&store).output().unwrap();
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(out.status.code().is_some_and(|c| c <= 1), "{err}");
        let want = if round == 0 { "2 run, 0 resumed" } else { "0 run, 2 resumed" };
        assert!(err.contains(want), "{err}");
    }
    let out_dir = dir.path().join("out");
    let out = bin().arg("report").arg("--store").arg(&store).arg("--out-dir").arg(&out_dir).output().unwrap();
    assert!(out.status.success());
    let jsons = std::fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "json"));
    assert_eq!(jsons.count(), 2);
}

#[test]
fn shipped_configs_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let golden = ExperimentConfig::load(&root.join("golden.toml")).unwrap();
    assert_eq!(golden, ExperimentConfig::default());
    let sweep = SweepGrid::load(&root.join("amplitude_sweep.toml")).unwrap();
    assert_eq!(sweep.base, golden);
    assert_eq!(sweep.expand().len(), 3);
}
