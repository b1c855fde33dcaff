use std::path::Path;
use std::process::{Command, Output};

use affectbench::labeling::Axis;
use affectbench::synth;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affectbench"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn synth_small(dir: &Path) {
    let out = run(&[
        "synth",
        "--seed",
        "7",
        "--participants",
        "8",
        "--clips",
        "6",
        "--common-clips",
        "5",
        "--clip-pool",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn no_arguments_prints_help_and_exits_2() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["train-eval", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["--jobs", "0", "synth", "--out", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_dataset_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = run(&[
        "train-eval",
        "--data",
        missing.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn train_eval_writes_one_fold_per_common_clip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_small(&data);
    let out_dir = tmp.path().join("run");
    let out = run(&[
        "train-eval",
        "--data",
        data.to_str().unwrap(),
        "--modality",
        "fusion",
        "--labeling",
        "kmeans",
        "--grid",
        "linear:1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&out_dir.join("report.json"));
    assert_eq!(report["folds"].as_array().unwrap().len(), 5);
    assert_eq!(report["feature_names"].as_array().unwrap().len(), 71);
    let acc = report["mean_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(out_dir.join("folds.csv").is_file());
    assert!(out_dir.join("run_config.json").is_file());
}

#[test]
fn threshold_labels_match_the_generated_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_small(&data);
    let out_dir = tmp.path().join("labels");
    let out = run(&[
        "label",
        "--data",
        data.to_str().unwrap(),
        "--method",
        "threshold",
        "--threshold",
        "4.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary = json(&out_dir.join("labels.json"));
    let truth = synth::read_manifest(&data).unwrap();
    for axis in [Axis::Valence, Axis::Arousal] {
        let scores: Vec<f64> = truth
            .trials
            .iter()
            .map(|t| {
                if axis == Axis::Valence {
                    t.valence_score
                } else {
                    t.arousal_score
                }
            })
            .collect();
        let high = scores.iter().filter(|&&s| s >= 4.5).count();
        let expected = format!("{:.2}:1", (scores.len() - high) as f64 / high as f64);
        assert_eq!(
            summary["axes"][axis.to_string()]["class_ratio"],
            Value::from(expected)
        );
    }
}

#[test]
fn select_stimuli_sweep_sse_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let ratings = tmp.path().join("ratings.csv");
    let mut text = String::from("clip_id,happiness,fear,excitement\n");
    let centres = [(8.0, 2.0, 7.0), (2.0, 8.0, 6.0), (3.0, 3.0, 2.0)];
    for (g, c) in centres.iter().enumerate() {
        for j in 0..8 {
            for r in 0..3 {
                let d = 0.1 * (j as f64) + 0.03 * r as f64;
                text.push_str(&format!(
                    "g{g}c{j},{},{},{}\n",
                    c.0 + d,
                    c.1 - d,
                    c.2 + 0.5 * d
                ));
            }
        }
    }
    std::fs::write(&ratings, text).unwrap();
    let out_dir = tmp.path().join("sel");
    let out = run(&[
        "select-stimuli",
        "--ratings",
        ratings.to_str().unwrap(),
        "--per-cluster",
        "4",
        "--k-max",
        "6",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let clusters = json(&out_dir.join("clusters.json"));
    let entries = clusters["sweep"]["kmeans"]["entries"].as_array().unwrap();
    let sse: Vec<f64> = entries.iter().map(|e| e["sse"].as_f64().unwrap()).collect();
    assert!(sse.len() >= 4);
    assert!(sse.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{sse:?}");
    assert_eq!(clusters["sweep"]["kmeans"]["k_by_db"], Value::from(3));

    let report_dir = tmp.path().join("report");
    let out = run(&[
        "report",
        "--inputs",
        out_dir.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let elbow = std::fs::read_to_string(report_dir.join("elbow.csv")).unwrap();
    assert!(elbow.starts_with("source,method,k,sse,db\n"));
}

#[test]
fn report_rejects_a_directory_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = run(&[
        "report",
        "--inputs",
        empty.to_str().unwrap(),
        "--out",
        tmp.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("report.json"));
}
