use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rihop_core::dataset::{read_xyz, DatasetManifest};
use rihop_core::geometry::normalize;
use rihop_core::pipeline::load_model;

fn rihop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rihop"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rihop(args);
    assert!(
        out.status.success(),
        "rihop {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small four-class dataset on disk.
fn toy(dir: &Path) -> (PathBuf, PathBuf) {
    let out = dir.join("data");
    ok(&[
        "synth",
        "--out-dir",
        s(&out),
        "--train-per-class",
        "6",
        "--test-per-class",
        "3",
        "--points",
        "256",
        "--seed",
        "3",
    ]);
    (out.join("train.csv"), out.join("test.csv"))
}

const SMALL: [&str; 4] = ["--points", "256", "--dft-top", "400"];

#[test]
fn fit_then_eval_on_training_split_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = toy(dir.path());
    let model = dir.path().join("model.bin");
    let mut args = vec![
        "fit",
        "--train",
        s(&train),
        "--model",
        s(&model),
        "--train-rotation",
        "so3",
    ];
    args.extend(SMALL);
    let stdout = ok(&args);
    assert!(stdout.contains("training accuracy: 100.00%"), "{stdout}");
    assert!(stdout.contains("point features"));

    let metrics = dir.path().join("metrics.csv");
    let predictions = dir.path().join("predictions.csv");
    let stdout = ok(&[
        "eval",
        "--model",
        s(&model),
        "--test",
        s(&train),
        "--rotation",
        "so3",
        "--metrics",
        s(&metrics),
        "--predictions",
        s(&predictions),
    ]);
    assert!(stdout.contains("accuracy: 100.00%"), "{stdout}");
    assert!(stdout.contains("confusion"));
    let metrics = fs::read_to_string(metrics).unwrap();
    assert!(metrics.starts_with("class,support,correct,accuracy\n"));
    assert!(metrics.contains("overall,24,24,1.000000"));
    assert_eq!(fs::read_to_string(predictions).unwrap().lines().count(), 25);
}

#[test]
fn identical_flags_give_identical_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = toy(dir.path());
    let fit = |name: &str| {
        let model = dir.path().join(name);
        let mut args = vec!["fit", "--train", s(&train), "--model", s(&model), "--seed", "9"];
        args.extend(SMALL);
        ok(&args);
        fs::read(model).unwrap()
    };
    assert_eq!(fit("a.bin"), fit("b.bin"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = toy(dir.path());
    let config = dir.path().join("run.conf");
    fs::write(
        &config,
        "# small run\nk_geo = 48\nk-cov=24\nfeatures=cov,oct\ndft_top=300\npoints=256\n",
    )
    .unwrap();
    let model = dir.path().join("model.bin");
    ok(&[
        "fit",
        "--train",
        s(&train),
        "--model",
        s(&model),
        "--config",
        s(&config),
        "--k-cov",
        "16",
    ]);
    let config = load_model(&model).unwrap().config;
    assert_eq!(config.features.k_geometric, 48);
    assert_eq!(config.features.k_covariance, 16);
    assert_eq!(config.features.k_octant, 64);
    assert!(!config.feature_sets.geometric && config.feature_sets.covariance && config.feature_sets.octant);
    assert_eq!(config.selection.num_selected, 300);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = toy(dir.path());
    let model = dir.path().join("m.bin");

    let out = rihop(&["fit", "--train", s(&train), "--model", s(&model), "--k-geo", "many"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));

    let out = rihop(&[
        "fit",
        "--train",
        s(&train),
        "--model",
        s(&model),
        "--features",
        "geo,colour",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = rihop(&["fit", "--train", s(&train), "--model", s(&model), "--dft-top", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let config = dir.path().join("bad.conf");
    fs::write(&config, "learning_rate=0.1\n").unwrap();
    let out = rihop(&[
        "fit",
        "--train",
        s(&train),
        "--model",
        s(&model),
        "--config",
        s(&config),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown configuration key"));

    assert_eq!(rihop(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (_, test) = toy(dir.path());
    let missing = dir.path().join("missing.bin");
    let out = rihop(&["eval", "--model", s(&missing), "--test", s(&test)]);
    assert_eq!(out.status.code(), Some(1));

    let garbage = dir.path().join("garbage.bin");
    fs::write(&garbage, b"S3I1 definitely not a model").unwrap();
    let out = rihop(&["eval", "--model", s(&garbage), "--test", s(&test)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn help_lists_every_flag_with_default() {
    let stdout = ok(&["fit", "--help"]);
    for flag in [
        "--points",
        "--k-geo",
        "--k-cov",
        "--k-oct",
        "--features",
        "--saab-channels",
        "--saab-energy",
        "--aggregation",
        "--sphere-centers",
        "--dft ",
        "--dft-top",
        "--dft-thresholds",
        "--ridge",
        "--train-rotation",
        "--test-rotation",
        "--seed",
        "--config",
        "--threads",
    ] {
        assert!(stdout.contains(flag), "missing {flag}");
    }
    assert!(stdout.contains("[default: 128]") && stdout.contains("[default: 2700]"));
}

fn pairwise(points: &[rihop_core::Point3]) -> Vec<f64> {
    let mut d = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push((points[i] - points[j]).norm());
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn prepare_normalizes_rotates_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = toy(dir.path());
    let input = DatasetManifest::load(&train).unwrap();
    let run = |name: &str, rotate: &str| {
        let out = dir.path().join(name);
        ok(&[
            "prepare",
            "--manifest",
            s(&train),
            "--out-dir",
            s(&out),
            "--rotate",
            rotate,
            "--seed",
            "4",
        ]);
        DatasetManifest::load(out.join("manifest.csv")).unwrap()
    };

    let plain = run("plain", "none");
    assert_eq!(plain.class_names, input.class_names);
    for (a, b) in plain.entries.iter().zip(&input.entries) {
        assert_eq!(a.label, b.label);
        let prepared = read_xyz(&a.path).unwrap();
        let expected = normalize(&read_xyz(&b.path).unwrap()).unwrap();
        for (p, q) in prepared.points.iter().zip(&expected.points) {
            assert!((p - q).amax() <= 1e-15);
        }
    }

    let first = run("so3_a", "so3");
    let second = run("so3_b", "so3");
    for ((a, b), original) in first.entries.iter().zip(&second.entries).zip(&input.entries) {
        assert_eq!(fs::read(&a.path).unwrap(), fs::read(&b.path).unwrap());
        let rotated = read_xyz(&a.path).unwrap();
        let reference = normalize(&read_xyz(&original.path).unwrap()).unwrap();
        let (d1, d2) = (pairwise(&rotated.points), pairwise(&reference.points));
        let worst = d1.iter().zip(&d2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-9, "distance drift {worst}");
    }
}

#[test]
fn ablate_writes_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = toy(dir.path());
    let csv = dir.path().join("ablation.csv");
    let mut args = vec!["ablate", "--train", s(&train), "--test", s(&test), "--out", s(&csv)];
    args.extend(SMALL);
    ok(&args);
    let text = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "config_id,geometric,covariance,octant,aggregation,dft,accuracy"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("1,0,1,1,local,1,"));
    assert!(lines[5].starts_with("5,1,1,1,global,1,"));
    assert!(lines[6].starts_with("6,1,1,1,local,0,"));

    let stdout = ok(&[
        "ablate",
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--grid",
        "4,6",
        "--points",
        "256",
        "--dft-top",
        "400",
    ]);
    assert_eq!(stdout.lines().count(), 3);
}
