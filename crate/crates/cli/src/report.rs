//! Reshapes existing run outputs into comparison tables and plot series.
//! Nothing here recomputes results.

use std::collections::BTreeMap;

use affectbench::features::Modality;
use affectbench::Error;
use serde_json::{json, Value};

use crate::args::{Cli, ReportArgs};
use crate::commands::{StudyOutput, TrainEvalReport, CLUSTERS_FILE, REPORT_FILE, STUDY_FILE};
use crate::output::{ensure_dir, read_json, write_csv, write_json, write_run_config};
use crate::CliResult;

const MODALITIES: [Modality; 3] = [Modality::Eeg, Modality::E4, Modality::Fusion];

pub fn run(cli: &Cli, a: &ReportArgs) -> CliResult<()> {
    let mut runs: Vec<TrainEvalReport> = Vec::new();
    let mut studies: Vec<StudyOutput> = Vec::new();
    let mut sweeps: Vec<(String, Value)> = Vec::new();
    for dir in &a.inputs {
        let mut found = false;
        if dir.join(REPORT_FILE).is_file() {
            runs.push(read_json(&dir.join(REPORT_FILE))?);
            found = true;
        }
        if dir.join(STUDY_FILE).is_file() {
            studies.push(read_json(&dir.join(STUDY_FILE))?);
            found = true;
        }
        if dir.join(CLUSTERS_FILE).is_file() {
            sweeps.push((
                dir.display().to_string(),
                read_json(&dir.join(CLUSTERS_FILE))?,
            ));
            found = true;
        }
        if !found {
            return Err(Error::Structure {
                path: dir.clone(),
                reason: format!("no run outputs found; expected one of {REPORT_FILE}, {STUDY_FILE}, {CLUSTERS_FILE}"),
            }
            .into());
        }
    }
    ensure_dir(&a.out)?;
    let mut files: Vec<String> = Vec::new();

    if !runs.is_empty() {
        let long: Vec<Vec<String>> = runs
            .iter()
            .map(|r| {
                vec![
                    r.labeling.to_string(),
                    r.cv.target.to_string(),
                    r.modality.to_string(),
                    format!("{}", r.cv.mean_accuracy),
                    format!("{}", r.cv.mean_f1),
                    r.cv.class_ratio.clone(),
                    r.cv.folds.len().to_string(),
                ]
            })
            .collect();
        write_csv(
            &a.out.join("comparison.csv"),
            &[
                "labeling",
                "target",
                "modality",
                "mean_accuracy",
                "mean_f1",
                "class_ratio",
                "folds",
            ],
            &long,
        )?;
        files.push("comparison.csv".to_string());

        // one block per (labeling, target) with accuracy / F1 / class-ratio rows
        let present: Vec<Modality> = MODALITIES
            .into_iter()
            .filter(|m| runs.iter().any(|r| r.modality == *m))
            .collect();
        let mut blocks: BTreeMap<(String, String), BTreeMap<String, &TrainEvalReport>> =
            BTreeMap::new();
        for r in &runs {
            blocks
                .entry((r.labeling.to_string(), r.cv.target.to_string()))
                .or_default()
                .insert(r.modality.to_string(), r);
        }
        let mut wide = Vec::new();
        for ((labeling, target), by_modality) in &blocks {
            for metric in ["accuracy", "f1", "class_ratio"] {
                let mut row = vec![labeling.clone(), target.clone(), metric.to_string()];
                for m in &present {
                    row.push(match by_modality.get(&m.to_string()) {
                        None => String::new(),
                        Some(r) => match metric {
                            "accuracy" => format!("{:.4}", r.cv.mean_accuracy),
                            "f1" => format!("{:.4}", r.cv.mean_f1),
                            _ => r.cv.class_ratio.clone(),
                        },
                    });
                }
                wide.push(row);
            }
        }
        let mut header = vec![
            "labeling".to_string(),
            "target".to_string(),
            "metric".to_string(),
        ];
        header.extend(present.iter().map(|m| m.to_string()));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&a.out.join("comparison_table.csv"), &header, &wide)?;
        files.push("comparison_table.csv".to_string());
    }

    for s in &studies {
        let rows: Vec<Vec<String>> = s
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    format!("{:.4}", r.report.mean_accuracy),
                    format!("{:.4}", r.report.mean_f1),
                ]
            })
            .collect();
        let name = format!("ablation_{}_{}_{}.csv", s.kind, s.labeling, s.target);
        write_csv(
            &a.out.join(&name),
            &[s.kind.as_str(), "mean_accuracy", "mean_f1"],
            &rows,
        )?;
        files.push(name);
    }

    if !sweeps.is_empty() {
        let mut rows = Vec::new();
        for (source, v) in &sweeps {
            let Some(methods) = v.get("sweep").and_then(Value::as_object) else {
                continue;
            };
            for (method, summary) in methods {
                for e in summary
                    .get("entries")
                    .and_then(Value::as_array)
                    .into_iter()
                    .flatten()
                {
                    let cell = |key: &str| {
                        e.get(key)
                            .filter(|x| !x.is_null())
                            .map(|x| x.to_string())
                            .unwrap_or_default()
                    };
                    rows.push(vec![
                        source.clone(),
                        method.clone(),
                        cell("k"),
                        cell("sse"),
                        cell("db"),
                    ]);
                }
            }
        }
        write_csv(
            &a.out.join("elbow.csv"),
            &["source", "method", "k", "sse", "db"],
            &rows,
        )?;
        files.push("elbow.csv".to_string());
    }

    write_json(
        &a.out.join("report_index.json"),
        &json!({
            "inputs": a.inputs,
            "train_eval_runs": runs.len(),
            "studies": studies.len(),
            "cluster_sweeps": sweeps.len(),
            "files": files,
        }),
    )?;
    write_run_config(&a.out, cli, "report", json!({ "inputs": a.inputs }))
}
