use std::collections::BTreeMap;
use std::path::Path;

use affectbench::dataset::{
    load_dataset, save_dataset, validate_cv_readiness, Dataset, SampleRates,
};
use affectbench::evaluation::{self, CVReport, FeatureView, GridSpec, StudyRow};
use affectbench::features::{
    extract_table, montage, EegBand, FeatureTable, Modality, PipelineConfig,
};
use affectbench::labeling::{
    self, Axis, BinaryLabels, ClusterMethod, KSweepEntry, LabelScheme, Level, RatedPoint,
};
use affectbench::seeds::derive_named;
use affectbench::svm::{self, KernelKind, SVMModel};
use affectbench::synth::{self, SynthSpec};
use affectbench::{stats, Error};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::*;
use crate::output::{ensure_dir, read_json, write_csv, write_json, write_run_config, write_text};
use crate::{CliError, CliResult};

pub const REPORT_FILE: &str = "report.json";
pub const STUDY_FILE: &str = "study.json";
pub const CLUSTERS_FILE: &str = "clusters.json";

pub fn pipeline_config(p: &PipelineArgs) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    let pre = &mut cfg.preprocess;
    if let Some(v) = p.head_s {
        pre.head_s = v;
    }
    if let Some(v) = p.tail_s {
        pre.tail_s = v;
    }
    if let Some(v) = p.notch_hz {
        pre.notch_hz = v;
    }
    if let Some(v) = p.notch_q {
        pre.notch_q = v;
    }
    if let Some(v) = &p.ica_remove {
        pre.ica = v.clone();
    }
    let feat = &mut cfg.features;
    if let Some(v) = p.eda_bands {
        feat.eda_bands = v;
    }
    if let Some(v) = p.welch_seg {
        feat.eeg_welch.seg_len = v;
    }
    if let Some(v) = p.welch_overlap {
        feat.eeg_welch.overlap = v;
    }
    feat.log_eeg = p.log_eeg;
    cfg
}

/// `full` or `<kernel>:<C>`.
pub fn parse_grid(s: &str) -> CliResult<GridSpec> {
    if s.eq_ignore_ascii_case("full") {
        return Ok(GridSpec::full());
    }
    let bad = || {
        CliError::Usage(format!(
            "bad --grid {s:?}; expected `full` or `<kernel>:<C>`"
        ))
    };
    let (kernel, c) = s.split_once(':').ok_or_else(bad)?;
    let kernel: KernelKind = kernel.parse().map_err(|_| bad())?;
    let c: f64 = c.parse().map_err(|_| bad())?;
    if !(c > 0.0) {
        return Err(bad());
    }
    Ok(GridSpec::single(kernel, c))
}

pub fn synth(cli: &Cli, a: &SynthArgs) -> CliResult<()> {
    let mut spec = SynthSpec {
        seed: cli.seed,
        ..SynthSpec::default()
    };
    if let Some(v) = a.participants {
        spec.participants = v;
    }
    if let Some(v) = a.clips {
        spec.clips = v;
    }
    if let Some(v) = a.common_clips {
        spec.common_clips = v;
    }
    if let Some(v) = a.clip_pool {
        spec.clip_pool = v;
    }
    if let Some(v) = a.duration {
        spec.duration_s = v;
    }
    if let Some(v) = a.effect_amplitude {
        spec = spec.with_effect_amplitude(v);
    }
    if let Some(v) = a.hr_effect_bpm {
        spec.hr_effect_bpm = v;
    }
    if let Some(v) = a.noise_sd {
        spec.noise_sd = v;
    }
    if let Some(v) = a.mains_amplitude {
        spec.mains_amplitude = v;
    }
    if a.no_effects {
        spec = spec.without_effects();
    }
    let (ds, truth) = synth::generate(&spec)?;
    synth::write(&ds, &truth, &a.out)?;
    write_run_config(&a.out, cli, "synth", json!({ "spec": spec }))
}

#[derive(Debug, Serialize)]
struct DatasetSummary {
    trials: usize,
    participants: Vec<String>,
    clips: Vec<String>,
    common_clips: Vec<String>,
    sample_rates: SampleRates,
    /// Shortest trial per signal, in seconds.
    min_duration_s: BTreeMap<&'static str, f64>,
    warnings: Vec<String>,
}

pub fn ingest(cli: &Cli, a: &IngestArgs) -> CliResult<()> {
    let ds = load_dataset(&a.data)?;
    let mut warnings = Vec::new();
    let common = validate_cv_readiness(&ds).unwrap_or_else(|e| {
        warnings.push(e.to_string());
        Vec::new()
    });
    let mut min_duration_s = BTreeMap::new();
    for t in ds.trials() {
        for (name, trace) in t.traces() {
            let d = trace.duration_s();
            let slot = min_duration_s.entry(name).or_insert(d);
            *slot = f64::min(*slot, d);
        }
    }
    let clips: std::collections::BTreeSet<&str> =
        ds.trials().iter().map(|t| t.clip_id.as_str()).collect();
    let summary = DatasetSummary {
        trials: ds.len(),
        participants: ds.participants().into_iter().map(str::to_string).collect(),
        clips: clips.into_iter().map(str::to_string).collect(),
        common_clips: common,
        sample_rates: ds.sample_rates(),
        min_duration_s,
        warnings,
    };
    ensure_dir(&a.out)?;
    save_dataset(&ds, a.out.join("dataset"))?;
    write_json(&a.out.join("summary.json"), &summary)?;
    write_run_config(&a.out, cli, "ingest", json!({ "data": a.data }))
}

fn read_ratings(path: &Path) -> CliResult<Vec<RatedPoint>> {
    let err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let rows = r
        .deserialize()
        .collect::<Result<Vec<RatedPoint>, _>>()
        .map_err(err)?;
    if rows.is_empty() {
        return Err(Error::Validation {
            context: path.display().to_string(),
            reason: "no ratings".into(),
        }
        .into());
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    entries: Vec<KSweepEntry>,
    k_by_db: Option<usize>,
    k_by_elbow: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn sweep(points: &[Vec<f64>], ks: &[usize], method: ClusterMethod, seed: u64) -> SweepSummary {
    match labeling::cluster_sweep(points, ks, method, seed) {
        Ok(entries) => {
            let db: BTreeMap<usize, f64> = entries
                .iter()
                .filter_map(|e| e.db.map(|d| (e.k, d)))
                .collect();
            let sse: BTreeMap<usize, f64> = entries.iter().map(|e| (e.k, e.sse)).collect();
            SweepSummary {
                k_by_db: labeling::select_k_by_db(&db),
                k_by_elbow: labeling::elbow_knee(&sse),
                entries,
                error: None,
            }
        }
        Err(e) => {
            log::warn!("{method:?} sweep failed: {e}");
            SweepSummary {
                entries: Vec::new(),
                k_by_db: None,
                k_by_elbow: None,
                error: Some(e.to_string()),
            }
        }
    }
}

pub fn select_stimuli(cli: &Cli, a: &SelectArgs) -> CliResult<()> {
    let ratings = match (&a.ratings, &a.data) {
        (Some(path), _) => read_ratings(path)?,
        (None, Some(data)) => load_dataset(data)?
            .trials()
            .iter()
            .map(|t| RatedPoint {
                clip_id: t.clip_id.clone(),
                happiness: t.assessment.happiness,
                fear: t.assessment.fear,
                excitement: t.assessment.excitement,
            })
            .collect(),
        (None, None) => {
            return Err(CliError::Usage(
                "one of --ratings or --data is required".into(),
            ))
        }
    };
    if a.k_min < 2 || a.k_max < a.k_min {
        return Err(CliError::Usage("need 2 <= --k-min <= --k-max".into()));
    }
    let points: Vec<Vec<f64>> = ratings
        .iter()
        .map(|r| vec![r.happiness, r.fear, r.excitement])
        .collect();
    let ks: Vec<usize> = (a.k_min..=a.k_max).filter(|&k| k < points.len()).collect();
    let sweep_seed = derive_named(cli.seed, "sweep");
    let mut sweeps = BTreeMap::new();
    sweeps.insert(
        "kmeans",
        sweep(&points, &ks, ClusterMethod::Kmeans, sweep_seed),
    );
    sweeps.insert("gmm", sweep(&points, &ks, ClusterMethod::Gmm, sweep_seed));

    let ranking = labeling::select_stimuli(
        &ratings,
        a.k,
        a.per_cluster,
        derive_named(cli.seed, "stimuli"),
    )?;
    ensure_dir(&a.out)?;
    let mut rows = Vec::new();
    for (c, list) in ranking.clusters.iter().enumerate() {
        for (rank, item) in list.iter().enumerate() {
            rows.push(vec![
                c.to_string(),
                (rank + 1).to_string(),
                item.clip_id.clone(),
                format!("{}", item.distance),
                item.selected.to_string(),
            ]);
        }
    }
    write_csv(
        &a.out.join("ranking.csv"),
        &["cluster", "rank", "clip_id", "distance", "selected"],
        &rows,
    )?;
    write_json(
        &a.out.join(CLUSTERS_FILE),
        &json!({
            "k": a.k,
            "per_cluster": a.per_cluster,
            "n_ratings": ratings.len(),
            "centroids": ranking.model.centroids,
            "inertia": ranking.model.inertia,
            "selected": ranking.selected,
            "dropped_points": ranking.dropped_points,
            "warnings": ranking.warnings,
            "sweep": sweeps,
        }),
    )?;
    write_run_config(
        &a.out,
        cli,
        "select-stimuli",
        json!({
            "ratings": a.ratings,
            "data": a.data,
            "k": a.k,
            "per_cluster": a.per_cluster,
            "k_range": [a.k_min, a.k_max],
        }),
    )
}

fn features_for(ds: &Dataset, cfg: &PipelineConfig, seed: u64) -> CliResult<FeatureTable> {
    Ok(extract_table(ds, cfg, derive_named(seed, "features"))?)
}

pub fn extract_features(cli: &Cli, a: &ExtractArgs) -> CliResult<()> {
    let ds = load_dataset(&a.data)?;
    let cfg = pipeline_config(&a.pipeline);
    let table = features_for(&ds, &cfg, cli.seed)?;
    let view = table.view(a.modality, &montage(), &EegBand::ALL)?;
    ensure_dir(&a.out)?;
    let params = json!({
        "data": a.data,
        "modality": a.modality,
        "pipeline": cfg,
    });
    view.write(&a.out, "features", &params)?;
    write_run_config(&a.out, cli, "extract-features", params)
}

fn labels_for(
    ds: &Dataset,
    scheme: LabelScheme,
    threshold: f64,
    seed: u64,
) -> CliResult<(BinaryLabels, Option<labeling::ClusterModel>)> {
    Ok(evaluation::make_labels(
        ds,
        scheme,
        threshold,
        derive_named(seed, "labels"),
    )?)
}

fn level_name(l: Level) -> &'static str {
    match l {
        Level::Low => "low",
        Level::High => "high",
    }
}

pub fn label(cli: &Cli, a: &LabelArgs) -> CliResult<()> {
    let ds = load_dataset(&a.data)?;
    let (labels, model) = labels_for(&ds, a.method, a.threshold, cli.seed)?;
    ensure_dir(&a.out)?;
    let rows: Vec<Vec<String>> = ds
        .trials()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                t.participant_id.clone(),
                t.clip_id.clone(),
                format!("{}", t.assessment.valence),
                format!("{}", t.assessment.arousal),
                level_name(labels.valence[i]).to_string(),
                level_name(labels.arousal[i]).to_string(),
                labeling::quadrant_name(labels.valence[i], labels.arousal[i]).to_string(),
            ]
        })
        .collect();
    write_csv(
        &a.out.join("labels.csv"),
        &[
            "participant_id",
            "clip_id",
            "valence_score",
            "arousal_score",
            "valence",
            "arousal",
            "quadrant",
        ],
        &rows,
    )?;
    let threshold = (a.method == LabelScheme::Threshold).then_some(a.threshold);
    let mut summary = BTreeMap::new();
    for axis in [Axis::Valence, Axis::Arousal] {
        let (low, high) = labels.counts(axis);
        summary.insert(
            axis.to_string(),
            json!({ "low": low, "high": high, "class_ratio": labels.class_ratio(axis) }),
        );
    }
    write_json(
        &a.out.join("labels.json"),
        &json!({
            "method": a.method,
            "threshold": threshold,
            "axes": summary,
            "cluster_model": model,
        }),
    )?;
    write_run_config(
        &a.out,
        cli,
        "label",
        json!({ "data": a.data, "method": a.method, "threshold": threshold }),
    )
}

/// `report.json` of a train-eval run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainEvalReport {
    pub modality: Modality,
    pub labeling: LabelScheme,
    pub threshold: Option<f64>,
    pub channels: Vec<String>,
    pub bands: Vec<EegBand>,
    pub feature_names: Vec<String>,
    pub grid_points: usize,
    #[serde(flatten)]
    pub cv: CVReport,
}

fn labeling_params(l: &LabelingArgs) -> serde_json::Value {
    json!({
        "labeling": l.labeling,
        "threshold": (l.labeling == LabelScheme::Threshold).then_some(l.threshold),
        "target": l.target,
        "grid": l.grid,
    })
}

fn folds_csv(path: &Path, report: &CVReport) -> CliResult<()> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .folds
        .iter()
        .map(|f| {
            vec![
                f.held_out_clip.clone(),
                f.chosen.kernel.to_string(),
                format!("{}", f.chosen.c),
                opt(f.chosen.degree.map(|d| d.to_string())),
                opt(f.chosen.coef0.map(|c| format!("{c}"))),
                f.chosen.penalty.to_string(),
                opt(f.inner_f1.map(|v| format!("{v}"))),
                format!("{}", f.test_accuracy),
                format!("{}", f.test_f1),
                f.n_train.to_string(),
                f.n_test.to_string(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "held_out_clip",
            "kernel",
            "c",
            "degree",
            "coef0",
            "penalty",
            "inner_f1",
            "test_accuracy",
            "test_f1",
            "n_train",
            "n_test",
        ],
        &rows,
    )
}

pub fn train_eval(cli: &Cli, a: &TrainEvalArgs) -> CliResult<()> {
    if a.modality == Modality::E4 && (a.channels.is_some() || a.bands.is_some()) {
        return Err(CliError::Usage(
            "--channels/--bands apply to the eeg and fusion modalities only".into(),
        ));
    }
    let grid = parse_grid(&a.labels.grid)?;
    let cfg = pipeline_config(&a.pipeline);
    let ds = load_dataset(&a.data)?;
    let table = features_for(&ds, &cfg, cli.seed)?;
    let (labels, _) = labels_for(&ds, a.labels.labeling, a.labels.threshold, cli.seed)?;
    let view = FeatureView {
        modality: a.modality,
        channels: a.channels.clone().unwrap_or_else(montage),
        bands: a.bands.clone().unwrap_or_else(|| EegBand::ALL.to_vec()),
    };
    let feature_names: Vec<String> = table
        .view(view.modality, &view.channels, &view.bands)?
        .layout
        .into_iter()
        .map(|s| s.name)
        .collect();
    let data = evaluation::cv_data(&ds, &table, &view, &labels, a.labels.target)?;
    let cv_seed = derive_named(cli.seed, "cv");
    let mut params = json!({
        "data": a.data,
        "modality": a.modality,
        "channels": view.channels,
        "bands": view.bands,
        "pipeline": cfg,
        "labels": labeling_params(&a.labels),
    });
    ensure_dir(&a.out)?;

    if let Some(path) = &a.load_model {
        let model = SVMModel::load(path)?;
        let (pred, values) = model.predict_unscaled(&data.x)?;
        let m = svm::metrics(&data.y, &pred)?;
        let predictions: Vec<_> = ds
            .trials()
            .iter()
            .zip(data.y.iter().zip(pred.iter().zip(&values)))
            .map(|(t, (y, (p, v)))| json!({ "participant_id": t.participant_id, "clip_id": t.clip_id, "true": y, "predicted": p, "decision_value": v }))
            .collect();
        write_json(
            &a.out.join("evaluation.json"),
            &json!({ "model": path, "target": a.labels.target, "metrics": m, "predictions": predictions }),
        )?;
        params["load_model"] = json!(path);
        return write_run_config(&a.out, cli, "train-eval", params);
    }

    let cv = evaluation::cross_validate(&data, a.labels.target, &grid, cv_seed)?;
    folds_csv(&a.out.join("folds.csv"), &cv)?;
    let report = TrainEvalReport {
        modality: a.modality,
        labeling: a.labels.labeling,
        threshold: (a.labels.labeling == LabelScheme::Threshold).then_some(a.labels.threshold),
        channels: view.channels.clone(),
        bands: view.bands.clone(),
        feature_names,
        grid_points: grid.points().len(),
        cv,
    };
    write_json(&a.out.join(REPORT_FILE), &report)?;
    if let Some(path) = &a.save_model {
        let (choice, model) =
            evaluation::train_final(&data, &grid, derive_named(cv_seed, "final-model"))?;
        model.save(path)?;
        write_json(&a.out.join("final_model_choice.json"), &choice)?;
        params["save_model"] = json!(path);
    }
    write_run_config(&a.out, cli, "train-eval", params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Channel,
    Band,
}

/// `study.json` of a channel or band study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyOutput {
    pub kind: String,
    pub labeling: LabelScheme,
    pub target: Axis,
    pub rows: Vec<StudyRow>,
}

pub fn study(cli: &Cli, a: &StudyArgs, kind: StudyKind) -> CliResult<()> {
    let grid = parse_grid(&a.labels.grid)?;
    let cfg = pipeline_config(&a.pipeline);
    let ds = load_dataset(&a.data)?;
    let table = features_for(&ds, &cfg, cli.seed)?;
    let (labels, _) = labels_for(&ds, a.labels.labeling, a.labels.threshold, cli.seed)?;
    let seed = derive_named(cli.seed, "cv");
    let target = a.labels.target;
    let (name, rows) = match kind {
        StudyKind::Channel => (
            "channel",
            evaluation::channel_study(&ds, &table, &labels, target, &grid, seed)?,
        ),
        StudyKind::Band => (
            "band",
            evaluation::band_study(&ds, &table, &labels, target, &grid, seed)?,
        ),
    };
    ensure_dir(&a.out)?;
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                format!("{}", r.report.mean_accuracy),
                format!("{}", r.report.mean_f1),
                r.report.class_ratio.clone(),
                r.report.n_features.to_string(),
            ]
        })
        .collect();
    write_csv(
        &a.out.join("study.csv"),
        &[
            "name",
            "mean_accuracy",
            "mean_f1",
            "class_ratio",
            "n_features",
        ],
        &table_rows,
    )?;
    let out = StudyOutput {
        kind: name.to_string(),
        labeling: a.labels.labeling,
        target,
        rows,
    };
    write_json(&a.out.join(STUDY_FILE), &out)?;
    let command = format!("{name}-study");
    write_run_config(
        &a.out,
        cli,
        &command,
        json!({ "data": a.data, "pipeline": cfg, "labels": labeling_params(&a.labels) }),
    )
}

pub fn stats(cli: &Cli, a: &StatsArgs) -> CliResult<()> {
    let reports: Vec<TrainEvalReport> = a
        .reports
        .iter()
        .map(|p| read_json(p))
        .collect::<CliResult<_>>()?;
    let names: Vec<String> = match &a.names {
        Some(n) if n.len() != reports.len() => {
            return Err(CliError::Usage(format!(
                "{} names for {} reports",
                n.len(),
                reports.len()
            )));
        }
        Some(n) => n.clone(),
        None => {
            let base: Vec<String> = reports.iter().map(|r| r.modality.to_string()).collect();
            let unique: std::collections::BTreeSet<&String> = base.iter().collect();
            if unique.len() == base.len() {
                base
            } else {
                base.iter()
                    .enumerate()
                    .map(|(i, b)| format!("{b}#{}", i + 1))
                    .collect()
            }
        }
    };
    // subjects are the held-out clips, matched across reports
    let clips: Vec<String> = reports[0]
        .cv
        .folds
        .iter()
        .map(|f| f.held_out_clip.clone())
        .collect();
    let mut scores = vec![vec![0.0; reports.len()]; clips.len()];
    for (j, (r, path)) in reports.iter().zip(&a.reports).enumerate() {
        let by_clip: BTreeMap<&str, f64> =
            r.cv.folds
                .iter()
                .map(|f| {
                    let v = match a.metric {
                        Metric::Accuracy => f.test_accuracy,
                        Metric::F1 => f.test_f1,
                    };
                    (f.held_out_clip.as_str(), v)
                })
                .collect();
        if by_clip.len() != clips.len() {
            return Err(Error::Validation {
                context: path.display().to_string(),
                reason: "held-out clips differ from the first report".into(),
            }
            .into());
        }
        for (i, c) in clips.iter().enumerate() {
            scores[i][j] = *by_clip.get(c.as_str()).ok_or_else(|| Error::Validation {
                context: path.display().to_string(),
                reason: format!("no fold for held-out clip {c}"),
            })?;
        }
    }
    let result = stats::rm_anova_gg(&scores, &names)?;
    let summary = result.summary();
    println!("{summary}");
    ensure_dir(&a.out)?;
    write_json(
        &a.out.join("anova.json"),
        &json!({
            "metric": a.metric,
            "subjects": clips,
            "subject_unit": "held-out clip (outer fold)",
            "conditions": names,
            "scores": scores,
            "result": result,
            "summary": summary,
        }),
    )?;
    write_text(&a.out.join("summary.txt"), &format!("{summary}\n"))?;
    write_run_config(
        &a.out,
        cli,
        "stats",
        json!({ "reports": a.reports, "names": names, "metric": a.metric }),
    )
}
