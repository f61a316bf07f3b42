use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn lacboost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacboost")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = lacboost(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    stdout.lines().last().map_or(Value::Null, |l| serde_json::from_str(l).unwrap())
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).expect("json line on stderr");
    serde_json::from_str(line).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn toy(dir: &TempDir, name: &str, kind: &str, n_pos: usize, n_neg: usize, seed: u64) -> PathBuf {
    let path = p(dir, name);
    ok(&["gen-toy", "--kind", kind, "--n-pos", &n_pos.to_string(), "--n-neg", &n_neg.to_string(), "--seed", &seed.to_string(), "--out", s(&path)]);
    path
}

#[test]
fn gen_toy_is_reproducible() {
    let (d1, d2) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let run = |dir: &TempDir, seed: &str| {
        let args = ["gen-toy", "--n-pos", "100", "--n-neg", "400", "--seed", seed, "--out", "toy.csv"];
        let out = Command::new(env!("CARGO_BIN_EXE_lacboost")).args(args).current_dir(dir.path()).output().unwrap();
        assert!(out.status.success());
        std::fs::read(dir.path().join("toy.csv")).unwrap()
    };
    let a = run(&d1, "7");
    assert_eq!(a, run(&d2, "7"));
    assert_ne!(a, run(&d2, "8"));

    let text = String::from_utf8(a).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(header["seed"], 7);
    assert_eq!(header["config"]["n-pos"], 100);
    assert_eq!(text.lines().filter(|l| l.starts_with("+1,")).count(), 100);
    assert_eq!(text.lines().filter(|l| l.starts_with("-1,")).count(), 400);
}

#[test]
fn solve_qp_identity_instance() {
    let dir = TempDir::new().unwrap();
    let problem = p(&dir, "qp.json");
    std::fs::write(&problem, r#"{"P": [[1, 0], [0, 1]], "c": [1, 0]}"#).unwrap();
    for solver in ["eg", "reference"] {
        let v = ok(&["solve-qp", "--problem", s(&problem), "--solver", solver]);
        let w: Vec<f64> = serde_json::from_value(v["solution"]["w"].clone()).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-3 && w[1].abs() < 1e-3, "{solver}: {w:?}");
        assert!((v["solution"]["objective"].as_f64().unwrap() + 0.5).abs() < 1e-6);
        assert_eq!(v["config"]["solver"], solver);
    }
    // flat row-major form and file output
    std::fs::write(&problem, r#"{"P": [2, 1, 1, 2], "c": [0, 0]}"#).unwrap();
    let out = p(&dir, "sol.json");
    ok(&["solve-qp", "--problem", s(&problem), "--out", s(&out)]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let w: Vec<f64> = serde_json::from_value(v["solution"]["w"].clone()).unwrap();
    assert!((w[0] - 0.5).abs() < 1e-4 && (w[1] - 0.5).abs() < 1e-4);
}

#[test]
fn train_then_eval_reports_identical_metrics() {
    let dir = TempDir::new().unwrap();
    let data = toy(&dir, "toy.csv", "gaussians2d", 60, 240, 2);
    for mode in ["lacboost", "fisherboost", "adaboost"] {
        let model = p(&dir, &format!("{mode}.json"));
        ok(&["train", "--data", s(&data), "--out", s(&model), "--mode", mode, "--n-max", "15", "--seed", "4"]);
        let saved: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
        let eval = ok(&["eval", "--model", s(&model), "--data", s(&data)]);
        assert_eq!(eval["metrics"], saved["metadata"]["metrics"], "{mode}");
        assert_eq!(saved["metadata"]["seed"], 4);
        assert_eq!(saved["metadata"]["config"]["mode"], mode);
    }
}

#[test]
fn saved_models_round_trip_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let data = toy(&dir, "toy.csv", "xor", 40, 80, 1);
    let model = p(&dir, "m.json");
    ok(&["train", "--data", s(&data), "--out", s(&model), "--n-max", "10"]);
    let copy = p(&dir, "copy.json");
    lacboost::ModelFile::load(&model).unwrap().save(&copy).unwrap();
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&copy).unwrap());
}

#[test]
fn config_file_overrides_flags() {
    let dir = TempDir::new().unwrap();
    let data = toy(&dir, "toy.csv", "gaussians2d", 50, 150, 3);
    let model = p(&dir, "m.json");
    let cfg = p(&dir, "cfg.json");
    std::fs::write(&cfg, r#"{"n-max": 2, "mode": "fisherboost"}"#).unwrap();
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&model), "--n-max", "30"]);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert!(saved["weak_classifiers"].as_array().unwrap().len() <= 2);
    assert_eq!(saved["mode"], "FisherBoost");
    assert_eq!(saved["metadata"]["config"]["n-max"], 2);

    std::fs::write(&cfg, r#"{"nmax": 2}"#).unwrap();
    let out = lacboost(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"]["kind"], "usage");
}

#[test]
fn failures_print_a_json_error_line() {
    let dir = TempDir::new().unwrap();
    let missing = p(&dir, "missing.csv");
    let out = lacboost(&["train", "--data", s(&missing), "--out", s(&p(&dir, "m.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["error"]["message"].as_str().unwrap().contains("missing.csv"));

    let out = lacboost(&["train", "--unknown-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"]["kind"], "usage");

    // a dataset without negatives is rejected by the library
    let bad = p(&dir, "bad.csv");
    std::fs::write(&bad, "label,f0\n+1,0.5\n+1,0.7\n").unwrap();
    let model = p(&dir, "m.json");
    let out = lacboost(&["train", "--data", s(&bad), "--out", s(&model)]);
    assert_eq!(out.status.code(), Some(1));
    assert_ne!(error_line(&out)["error"]["kind"], "usage");
    assert!(!model.exists());

    let problem = p(&dir, "qp.json");
    std::fs::write(&problem, r#"{"P": [[1, 2], [0, 1]], "c": [0, 0]}"#).unwrap();
    let out = lacboost(&["solve-qp", "--problem", s(&problem)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unreachable_cascade_target_is_flagged_but_saved() {
    let dir = TempDir::new().unwrap();
    let data = toy(&dir, "toy.csv", "gaussians2d", 40, 400, 5);
    let model = p(&dir, "cascade.json");
    let nodes = p(&dir, "nodes.csv");
    let out = lacboost(&[
        "train-cascade", "--data", s(&data), "--out", s(&model), "--node-report", s(&nodes),
        "--max-nodes", "2", "--exit-schedule", "1", "--node-budget", "0", "--negatives-per-node", "100",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let saved = lacboost::CascadeModel::load(&model).unwrap();
    assert_eq!(saved.n_exits(), 2);
    assert!(!saved.metadata["flags"].as_array().unwrap().is_empty());
    let report = std::fs::read_to_string(&nodes).unwrap();
    assert_eq!(report.lines().count(), 2 + 2);

    let eval = ok(&["eval", "--model", s(&model), "--data", s(&data)]);
    assert_eq!(eval["metrics"], saved.metadata["metrics"]);
    let nodes = eval["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 2);
    assert!(nodes[1]["fp_rate"].as_f64() <= nodes[0]["fp_rate"].as_f64());
}

#[test]
fn roc_is_monotone() {
    let dir = TempDir::new().unwrap();
    let data = toy(&dir, "toy.csv", "gaussians2d", 50, 200, 9);
    let model = p(&dir, "m.json");
    ok(&["train", "--data", s(&data), "--out", s(&model), "--n-max", "8"]);
    let roc = p(&dir, "roc.csv");
    ok(&["roc", "--model", s(&model), "--data", s(&data), "--out", s(&roc)]);
    let text = std::fs::read_to_string(&roc).unwrap();
    let rows: Vec<(usize, f64)> = text
        .lines()
        .skip(2)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    assert!(rows.len() > 2);
    assert_eq!(rows[0], (0, 0.0));
    assert_eq!(*rows.last().unwrap(), (200, 1.0));
    assert!(rows.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
}

#[test]
fn analyze_writes_qq_and_diagonality() {
    let dir = TempDir::new().unwrap();
    let data = toy(&dir, "toy.csv", "gaussians2d", 80, 200, 11);
    let model = p(&dir, "m.json");
    ok(&["train", "--data", s(&data), "--out", s(&model), "--n-max", "10"]);
    let (qq, diag) = (p(&dir, "qq.csv"), p(&dir, "diag.csv"));
    let v = ok(&["analyze", "--model", s(&model), "--data", s(&data), "--qq-out", s(&qq), "--diag-out", s(&diag)]);
    assert_eq!(std::fs::read_to_string(&qq).unwrap().lines().count(), 2 + 80);
    assert_eq!(std::fs::read_to_string(&diag).unwrap().lines().nth(1), Some("mean_abs_diag,mean_abs_offdiag,ratio"));
    let gammas: Vec<f64> = v["worst_case"].as_array().unwrap().iter().filter_map(|w| w["gamma"].as_f64()).collect();
    assert_eq!(gammas.len(), 4);
    // general <= symmetric-unimodal <= gaussian at the same margin
    assert!(gammas[0] <= gammas[2] && gammas[2] <= gammas[3]);
    let out = lacboost(&["analyze", "--model", s(&model), "--data", s(&data), "--exit", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theta_sweep_breaks_ties_towards_smaller_theta() {
    let dir = TempDir::new().unwrap();
    let data = toy(&dir, "sep.csv", "separable", 30, 120, 1);
    let out = p(&dir, "sweep.csv");
    let v = ok(&["theta-sweep", "--data", s(&data), "--out", s(&out), "--nodes", "1", "--negatives-per-node", "60"]);
    // every candidate separates the data perfectly
    assert_eq!(v["best_accuracy"], 1.0);
    assert_eq!(v["best_theta"], 1.0 / 50.0);
    let v = ok(&["theta-sweep", "--data", s(&data), "--out", s(&out), "--nodes", "1", "--negatives-per-node", "60", "--grid", "0.1,0.05,0.08"]);
    assert_eq!(v["best_theta"], 0.05);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2 + 3);
}

fn write_pgm(path: &Path, w: usize, h: usize, pixel: impl Fn(usize, usize) -> u8) {
    let mut s = format!("P2\n{w} {h}\n255\n");
    for y in 0..h {
        let row: Vec<String> = (0..w).map(|x| pixel(x, y).to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn haar_cascade_from_image_directories() {
    let dir = TempDir::new().unwrap();
    let noise = |seed: usize| move |x: usize, y: usize| ((x * 7919 + y * 104_729 + seed * 1_299_709) % 251) as u8;
    let face = |seed: usize| move |x: usize, y: usize| if y < 4 { 30 + ((x + seed) % 20) as u8 } else { 200 + ((y + seed) % 40) as u8 };
    for sub in ["train_pos", "bg", "test/pos", "test/neg"] {
        std::fs::create_dir_all(dir.path().join(sub)).unwrap();
    }
    for i in 0..30 {
        write_pgm(&dir.path().join(format!("train_pos/{i:02}.pgm")), 8, 8, face(i));
        write_pgm(&dir.path().join(format!("test/pos/{i:02}.pgm")), 8, 8, face(i + 50));
        write_pgm(&dir.path().join(format!("test/neg/{i:02}.pgm")), 8, 8, noise(i + 7));
    }
    for i in 0..2 {
        write_pgm(&dir.path().join(format!("bg/{i}.pgm")), 40, 40, noise(i));
    }
    let model = p(&dir, "haar.json");
    let out = lacboost(&[
        "train-cascade", "--positives", s(&dir.path().join("train_pos")), "--backgrounds", s(&dir.path().join("bg")),
        "--haar-features", "300", "--pool-fraction", "0.5", "--max-nodes", "2", "--exit-schedule", "2",
        "--node-budget", "4", "--negatives-per-node", "60", "--out", s(&model),
    ]);
    assert!(matches!(out.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&out.stderr));
    let saved = lacboost::CascadeModel::load(&model).unwrap();
    assert_eq!(saved.metadata["haar"]["features"].as_array().unwrap().len(), 300);

    let eval = ok(&["eval", "--model", s(&model), "--windows", s(&dir.path().join("test"))]);
    assert_eq!(eval["metrics"]["examples"], 60);
    assert!(eval["metrics"]["error"].as_f64().unwrap() < 0.5);
    let out = lacboost(&["eval", "--model", s(&model), "--data", s(&p(&dir, "none.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}
