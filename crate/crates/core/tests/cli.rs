use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dimmatch::datasets::synth_scene;
use dimmatch::io::save_image;

fn dimmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimmatch"))
        .args(args)
        .env_remove("DIM_DATASET_ROOT")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn match_writes_outputs_and_finds_the_plant() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth_scene(7, 3, (15, 15), (100, 90), 0.02).unwrap();
    let img = dir.path().join("scene.png");
    save_image(&img, &scene.image).unwrap();
    let b = scene.boxes[1];
    let arg_box = format!("{},{},{},{}", b.x, b.y, b.w, b.h);
    let mut sums = Vec::new();
    for method in ["dim", "zncc"] {
        let out = dir.path().join(method);
        let o = dimmatch(&[
            "match", "--image", s(&img), "--box", &arg_box, "--method", method, "--threads", "2", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let peaks = fs::read_to_string(out.join("peaks.csv")).unwrap();
        let first: Vec<i64> = peaks.lines().nth(1).unwrap().split(',').skip(1).take(2).map(|v| v.parse().unwrap()).collect();
        let (cx, cy) = b.center();
        assert!((first[0] - cx).abs() <= 1 && (first[1] - cy).abs() <= 1, "{method}: {first:?}");
        assert!(out.join("detections.png").is_file());
        sums.push(fs::read(out.join("heatmap.png")).unwrap());
    }
    assert_ne!(sums[0], sums[1]);
}

#[test]
fn missing_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = dimmatch(&["match", "--image", "/no/such/file.png", "--box", "0,0,5,5", "--out", s(dir.path())]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/file.png"));
    let o = dimmatch(&["bench-bbs", "--out", s(dir.path())]);
    assert!(!o.status.success());
    let o = dimmatch(&["sweep", "--dataset", s(dir.path()), "--param", "kappa"]);
    assert!(!o.status.success());
}

#[test]
fn synthetic_pair_benchmark_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pairs");
    let o = dimmatch(&["synth-bbs", "--pairs", "3", "--image-size", "72", "--template-size", "13", "--out", s(&data)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for method in ["zncc", "dim"] {
        let out = dir.path().join(method);
        let o = dimmatch(&["bench-bbs", "--dataset", s(&data), "--method", method, "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let pairs = fs::read_to_string(out.join("pairs.csv")).unwrap();
        assert_eq!(pairs.lines().count(), 4);
        let success = fs::read_to_string(out.join("success.csv")).unwrap();
        assert_eq!(success.lines().count(), 101);
        assert!(out.join("success.png").is_file());
        assert!(String::from_utf8_lossy(&o.stdout).contains("AUC"));
    }
    // empty dataset is an error
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert!(!dimmatch(&["bench-bbs", "--dataset", s(&empty), "--out", s(dir.path())]).status.success());
}

#[test]
fn identity_sweep_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pairs");
    assert!(dimmatch(&["synth-bbs", "--pairs", "2", "--image-size", "64", "--template-size", "11", "--out", s(&data)])
        .status
        .success());
    let out = dir.path().join("bench");
    assert!(dimmatch(&["bench-bbs", "--dataset", s(&data), "--out", s(&out), "--threads", "1"]).status.success());
    let sweep = dir.path().join("sweep");
    let o = dimmatch(&[
        "sweep", "--dataset", s(&data), "--param", "lambda", "--factors", "1", "--out", s(&sweep), "--threads", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // factor 1 reproduces the plain benchmark
    let bench_curve = fs::read_to_string(out.join("pairs.csv")).unwrap();
    let ious: Vec<f64> = bench_curve.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    let grid: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
    let auc = dimmatch::eval::success_curve(&ious, &grid).unwrap().auc;
    let sweep_csv = fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    let swept: f64 = sweep_csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((swept - auc).abs() < 1e-6);

    let timing = dir.path().join("timing");
    let o = dimmatch(&[
        "timing", "--image-size", "48", "--template-size", "7", "--templates", "2", "--repeats", "1", "--out", s(&timing),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(timing.join("timing.csv")).unwrap().lines().count(), 3);
}
