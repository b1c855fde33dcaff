use std::path::PathBuf;

use affectbench::features::{EegBand, Modality};
use affectbench::labeling::{Axis, LabelScheme};
use affectbench::preprocessing::IcaPolicy;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "affectbench",
    version,
    about = "Emotion recognition from EEG and wristband biosignals: stimulus clustering, features, labeling, nested leave-one-clip-out SVM",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Base seed; every random step derives a named sub-seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "AFFECTBENCH_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with known ground truth.
    Synth(SynthArgs),
    /// Load and validate a dataset tree, writing a summary and a canonical copy.
    Ingest(IngestArgs),
    /// Cluster (happiness, fear, excitement) ratings and pick the clips nearest each centroid.
    SelectStimuli(SelectArgs),
    /// Preprocess every trial and write the feature table.
    ExtractFeatures(ExtractArgs),
    /// Binary valence/arousal labels from self-assessments.
    Label(LabelArgs),
    /// Nested leave-one-clip-out SVM evaluation.
    TrainEval(TrainEvalArgs),
    /// EEG-only evaluation over the nine channel subsets.
    ChannelStudy(StudyArgs),
    /// EEG-only evaluation per frequency band.
    BandStudy(StudyArgs),
    /// Repeated-measures ANOVA across two or more train-eval reports.
    Stats(StatsArgs),
    /// Reshape existing outputs into comparison tables and plot series.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dataset root to create.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub participants: Option<usize>,
    /// Clips per participant.
    #[arg(long)]
    pub clips: Option<usize>,
    #[arg(long)]
    pub common_clips: Option<usize>,
    /// Size of the pool the non-common clips rotate through.
    #[arg(long)]
    pub clip_pool: Option<usize>,
    /// Trial length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Amplitude of every planted EEG oscillation, in background-RMS units.
    #[arg(long)]
    pub effect_amplitude: Option<f64>,
    /// Heart-rate increase for high-arousal trials.
    #[arg(long)]
    pub hr_effect_bpm: Option<f64>,
    /// Plant no class effects at all.
    #[arg(long)]
    pub no_effects: bool,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub mains_amplitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["ratings", "data"]))]
pub struct SelectArgs {
    /// CSV with columns clip_id,happiness,fear,excitement (one row per rating).
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Use the self-assessments of a dataset instead.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub per_cluster: usize,
    /// Smallest K in the Davies-Bouldin / SSE sweep.
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
}

/// Preprocessing and feature overrides; unset flags keep library defaults.
#[derive(Debug, Args, Clone)]
pub struct PipelineArgs {
    /// Seconds trimmed from the start of each trial.
    #[arg(long)]
    pub head_s: Option<f64>,
    /// Seconds trimmed from the end of each trial.
    #[arg(long)]
    pub tail_s: Option<f64>,
    /// Mains notch frequency.
    #[arg(long)]
    pub notch_hz: Option<f64>,
    #[arg(long)]
    pub notch_q: Option<f64>,
    /// none, auto:<n> or a comma-separated component list.
    #[arg(long)]
    pub ica_remove: Option<IcaPolicy>,
    /// 14 keeps every EDA band; 13 gives the 70-feature fusion vector.
    #[arg(long)]
    pub eda_bands: Option<usize>,
    /// log10 of EEG band powers.
    #[arg(long)]
    pub log_eeg: bool,
    /// EEG Welch segment length in samples.
    #[arg(long)]
    pub welch_seg: Option<usize>,
    #[arg(long)]
    pub welch_overlap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "fusion")]
    pub modality: Modality,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// threshold or kmeans.
    #[arg(long, default_value = "threshold")]
    pub method: LabelScheme,
    #[arg(long, default_value_t = affectbench::labeling::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct LabelingArgs {
    /// threshold or kmeans.
    #[arg(long, default_value = "threshold")]
    pub labeling: LabelScheme,
    #[arg(long, default_value_t = affectbench::labeling::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "valence")]
    pub target: Axis,
    /// `full` for the 45-point grid, or `<kernel>:<C>` for one point.
    #[arg(long, default_value = "full")]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct TrainEvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "fusion")]
    pub modality: Modality,
    /// EEG channel subset (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<String>>,
    /// EEG band subset (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub bands: Option<Vec<EegBand>>,
    #[command(flatten)]
    pub labels: LabelingArgs,
    /// Also train on every row and write the model here.
    #[arg(long, conflicts_with = "load_model")]
    pub save_model: Option<PathBuf>,
    /// Skip training; score this model on every row.
    #[arg(long)]
    pub load_model: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub labels: LabelingArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    F1,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// train-eval report.json files, one per condition.
    #[arg(long, num_args = 2.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Condition names, in report order (default: each report's modality).
    #[arg(long, value_delimiter = ',')]
    pub names: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "accuracy")]
    pub metric: Metric,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directories of earlier runs.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
