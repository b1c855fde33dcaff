//! Sessions, trials, signal traces and self-assessments, plus the on-disk
//! dataset layout:
//!
//! ```text
//! root/meta.json                    schema version + default sample rates
//! root/clips.csv                    clip_id,title,tags
//! root/P<participant>/C<clip>/eeg.csv         t,Fp1,Fp2,Fz,Cz,T3,T4,Pz,Oz
//! root/P<participant>/C<clip>/{eda,bvp,temp}.csv   t,value
//! root/P<participant>/C<clip>/assessment.json five scores + is_common_clip
//! ```
//!
//! Writing is canonical: `save_dataset(load_dataset(root))` reproduces the
//! files byte for byte when they were themselves written by `save_dataset`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight-electrode EEG montage, in file column order.
pub const MONTAGE: [&str; 8] = ["Fp1", "Fp2", "Fz", "Cz", "T3", "T4", "Pz", "Oz"];

pub const SCHEMA_VERSION: u32 = 1;

const SCORE_MIN: f64 = 1.0;
const SCORE_MAX: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfAssessment {
    pub valence: f64,
    pub arousal: f64,
    pub happiness: f64,
    pub fear: f64,
    pub excitement: f64,
}

impl SelfAssessment {
    pub fn validate(&self, context: &str) -> Result<()> {
        let named = [
            ("valence", self.valence),
            ("arousal", self.arousal),
            ("happiness", self.happiness),
            ("fear", self.fear),
            ("excitement", self.excitement),
        ];
        for (name, s) in named {
            if !(SCORE_MIN..=SCORE_MAX).contains(&s) {
                return Err(Error::validation(
                    context,
                    format!("{name} score {s} outside [1, 9]"),
                ));
            }
        }
        Ok(())
    }
}

/// Uniformly sampled multichannel signal, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    samples: Vec<Vec<f64>>,
    sample_rate_hz: f64,
    channel_names: Vec<String>,
}

impl SignalTrace {
    pub fn new(
        samples: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::param(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.len() != channel_names.len() {
            return Err(Error::param(format!(
                "{} channel rows but {} channel names",
                samples.len(),
                channel_names.len()
            )));
        }
        if let Some(first) = samples.first() {
            let n = first.len();
            if samples.iter().any(|row| row.len() != n) {
                return Err(Error::param("channel rows have unequal lengths"));
            }
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("trace contains non-finite samples"));
        }
        Ok(SignalTrace {
            samples,
            sample_rate_hz,
            channel_names,
        })
    }

    /// Single-channel trace named `value`.
    pub fn single(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![samples], sample_rate_hz, vec!["value".to_string()])
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    /// Number of time samples.
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channel_names
            .iter()
            .position(|c| c == name)
            .map(|i| self.samples[i].as_slice())
    }

    /// First channel; convenient for the single-channel E4 traces.
    pub fn first_channel(&self) -> &[f64] {
        self.samples.first().map_or(&[], Vec::as_slice)
    }

    /// Same metadata, new samples. Row count must not change.
    pub fn with_samples(&self, samples: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(samples, self.sample_rate_hz, self.channel_names.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub participant_id: String,
    pub clip_id: String,
    pub eeg: SignalTrace,
    pub eda: SignalTrace,
    pub bvp: SignalTrace,
    pub temp: SignalTrace,
    pub assessment: SelfAssessment,
    pub is_common_clip: bool,
}

impl Trial {
    pub fn id(&self) -> String {
        format!("P{}/C{}", self.participant_id, self.clip_id)
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.id();
        if self.eeg.n_channels() != MONTAGE.len() {
            return Err(Error::validation(
                &id,
                format!(
                    "eeg has {} channels, expected {}",
                    self.eeg.n_channels(),
                    MONTAGE.len()
                ),
            ));
        }
        for (name, trace) in [("eda", &self.eda), ("bvp", &self.bvp), ("temp", &self.temp)] {
            if trace.n_channels() != 1 {
                return Err(Error::validation(
                    &id,
                    format!("{name} has {} channels, expected 1", trace.n_channels()),
                ));
            }
        }
        for (name, trace) in self.traces() {
            if trace.is_empty() {
                return Err(Error::validation(&id, format!("{name} trace is empty")));
            }
        }
        self.assessment.validate(&id)
    }

    pub fn traces(&self) -> [(&'static str, &SignalTrace); 4] {
        [
            ("eeg", &self.eeg),
            ("eda", &self.eda),
            ("bvp", &self.bvp),
            ("temp", &self.temp),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipInfo {
    pub title: String,
    /// Free-form affective/genre tags.
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRates {
    pub eeg: f64,
    pub eda: f64,
    pub bvp: f64,
    pub temp: f64,
}

impl Default for SampleRates {
    fn default() -> Self {
        SampleRates {
            eeg: 250.0,
            eda: 4.0,
            bvp: 64.0,
            temp: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    trials: Vec<Trial>,
    clip_catalog: BTreeMap<String, ClipInfo>,
    sample_rates: SampleRates,
}

impl Dataset {
    /// Validates every trial and sorts them by (participant, clip).
    pub fn new(
        mut trials: Vec<Trial>,
        clip_catalog: BTreeMap<String, ClipInfo>,
        sample_rates: SampleRates,
    ) -> Result<Self> {
        for t in &trials {
            t.validate()?;
        }
        trials
            .sort_by(|a, b| (&a.participant_id, &a.clip_id).cmp(&(&b.participant_id, &b.clip_id)));
        for pair in trials.windows(2) {
            if pair[0].participant_id == pair[1].participant_id
                && pair[0].clip_id == pair[1].clip_id
            {
                return Err(Error::validation(pair[0].id(), "duplicate trial"));
            }
        }
        Ok(Dataset {
            trials,
            clip_catalog,
            sample_rates,
        })
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn clip_catalog(&self) -> &BTreeMap<String, ClipInfo> {
        &self.clip_catalog
    }

    /// Default per-modality sample rates declared in `meta.json`.
    pub fn sample_rates(&self) -> SampleRates {
        self.sample_rates
    }

    pub fn participants(&self) -> BTreeSet<&str> {
        self.trials
            .iter()
            .map(|t| t.participant_id.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

/// Clip ids seen by every participant, sorted. These are the CV folds.
pub fn validate_cv_readiness(ds: &Dataset) -> Result<Vec<String>> {
    let mut per_participant: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for t in ds.trials() {
        per_participant
            .entry(&t.participant_id)
            .or_default()
            .insert(&t.clip_id);
    }
    let mut sets = per_participant.into_values();
    let Some(first) = sets.next() else {
        return Err(Error::validation("dataset", "no common clips"));
    };
    let common = sets.fold(first, |acc, s| acc.intersection(&s).copied().collect());
    if common.is_empty() {
        return Err(Error::validation("dataset", "no common clips"));
    }
    Ok(common.into_iter().map(str::to_string).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    schema_version: u32,
    sample_rates: SampleRates,
}

#[derive(Debug, Serialize, Deserialize)]
struct AssessmentFile {
    valence: f64,
    arousal: f64,
    happiness: f64,
    fear: f64,
    excitement: f64,
    is_common_clip: bool,
    /// Present only when a trace deviates from the dataset defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_rates: Option<SampleRates>,
}

fn structure(path: &Path, reason: impl Into<String>) -> Error {
    Error::Structure {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(structure(path, "missing file"));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn sorted_subdirs(dir: &Path, prefix: char) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_prefix(prefix) {
            if !id.is_empty() {
                out.push((id.to_string(), path));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Parses a `t,<channels...>` CSV into a channel-major sample matrix.
fn read_trace_csv(path: &Path, trial_id: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::validation(trial_id, format!("{} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "t" {
        return Err(Error::validation(
            trial_id,
            format!("{}: header must start with `t,`", path.display()),
        ));
    }
    let names: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let mut rows = vec![Vec::new(); names.len()];
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        fields.next();
        let mut n = 0;
        for (ch, field) in fields.enumerate() {
            if ch >= names.len() {
                n = ch + 1;
                break;
            }
            let v: f64 = field.parse().map_err(|_| {
                Error::validation(
                    trial_id,
                    format!(
                        "{} line {}: bad number {field:?}",
                        path.display(),
                        lineno + 2
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::validation(
                    trial_id,
                    format!("{} line {}: non-finite sample", path.display(), lineno + 2),
                ));
            }
            rows[ch].push(v);
            n = ch + 1;
        }
        if n != names.len() {
            return Err(Error::validation(
                trial_id,
                format!(
                    "{} line {}: expected {} values, found {n}",
                    path.display(),
                    lineno + 2,
                    names.len()
                ),
            ));
        }
    }
    Ok((names, rows))
}

fn read_trace(path: &Path, trial_id: &str, rate: f64) -> Result<SignalTrace> {
    let (names, rows) = read_trace_csv(path, trial_id)?;
    SignalTrace::new(rows, rate, names).map_err(|e| Error::validation(trial_id, e.to_string()))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

fn read_clips(path: &Path) -> Result<BTreeMap<String, ClipInfo>> {
    if !path.exists() {
        return Err(structure(path, "missing file"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut catalog = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let id = record.get(0).unwrap_or_default().to_string();
        let title = record.get(1).unwrap_or_default().to_string();
        let tags = record
            .get(2)
            .unwrap_or_default()
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        catalog.insert(id, ClipInfo { title, tags });
    }
    Ok(catalog)
}

pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(structure(root, "dataset root is not a directory"));
    }
    let meta: Meta = parse_json(&root.join("meta.json"))?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(Error::validation(
            "meta.json",
            format!("unsupported schema version {}", meta.schema_version),
        ));
    }
    let catalog = read_clips(&root.join("clips.csv"))?;

    let mut trials = Vec::new();
    for (participant_id, pdir) in sorted_subdirs(root, 'P')? {
        for (clip_id, cdir) in sorted_subdirs(&pdir, 'C')? {
            let id = format!("P{participant_id}/C{clip_id}");
            let a: AssessmentFile = parse_json(&cdir.join("assessment.json"))?;
            let rates = a.sample_rates.unwrap_or(meta.sample_rates);
            let eeg = read_trace(&cdir.join("eeg.csv"), &id, rates.eeg)?;
            let eda = read_trace(&cdir.join("eda.csv"), &id, rates.eda)?;
            let bvp = read_trace(&cdir.join("bvp.csv"), &id, rates.bvp)?;
            let temp = read_trace(&cdir.join("temp.csv"), &id, rates.temp)?;
            let trial = Trial {
                participant_id: participant_id.clone(),
                clip_id,
                eeg,
                eda,
                bvp,
                temp,
                assessment: SelfAssessment {
                    valence: a.valence,
                    arousal: a.arousal,
                    happiness: a.happiness,
                    fear: a.fear,
                    excitement: a.excitement,
                },
                is_common_clip: a.is_common_clip,
            };
            trial.validate()?;
            trials.push(trial);
        }
    }
    Dataset::new(trials, catalog, meta.sample_rates)
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::new(f))
}

fn write_trace(path: &Path, trace: &SignalTrace) -> Result<()> {
    let mut w = create_file(path)?;
    let io = |e| Error::io(path, e);
    let mut header = String::from("t");
    for name in trace.channel_names() {
        header.push(',');
        header.push_str(name);
    }
    writeln!(w, "{header}").map_err(io)?;
    let fs_hz = trace.sample_rate_hz();
    let mut line = String::new();
    for i in 0..trace.len() {
        line.clear();
        line.push_str(&format!("{}", i as f64 / fs_hz));
        for row in trace.samples() {
            line.push(',');
            line.push_str(&format!("{}", row[i]));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `ds` under `root` in canonical form. Existing files are overwritten.
pub fn save_dataset(ds: &Dataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    write_json(
        &root.join("meta.json"),
        &Meta {
            schema_version: SCHEMA_VERSION,
            sample_rates: ds.sample_rates(),
        },
    )?;

    let clips_path = root.join("clips.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&clips_path)
        .map_err(|source| Error::Csv {
            path: clips_path.clone(),
            source,
        })?;
    let csv_err = |source| Error::Csv {
        path: clips_path.clone(),
        source,
    };
    w.write_record(["clip_id", "title", "tags"])
        .map_err(csv_err)?;
    for (id, info) in ds.clip_catalog() {
        w.write_record([id.as_str(), info.title.as_str(), &info.tags.join(";")])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&clips_path, e))?;

    let defaults = ds.sample_rates();
    for t in ds.trials() {
        let dir = root
            .join(format!("P{}", t.participant_id))
            .join(format!("C{}", t.clip_id));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let rates = SampleRates {
            eeg: t.eeg.sample_rate_hz(),
            eda: t.eda.sample_rate_hz(),
            bvp: t.bvp.sample_rate_hz(),
            temp: t.temp.sample_rate_hz(),
        };
        write_trace(&dir.join("eeg.csv"), &t.eeg)?;
        write_trace(&dir.join("eda.csv"), &t.eda)?;
        write_trace(&dir.join("bvp.csv"), &t.bvp)?;
        write_trace(&dir.join("temp.csv"), &t.temp)?;
        let a = &t.assessment;
        write_json(
            &dir.join("assessment.json"),
            &AssessmentFile {
                valence: a.valence,
                arousal: a.arousal,
                happiness: a.happiness,
                fear: a.fear,
                excitement: a.excitement,
                is_common_clip: t.is_common_clip,
                sample_rates: (rates != defaults).then_some(rates),
            },
        )?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn tiny_trial(participant: &str, clip: &str, eeg_channels: usize) -> Trial {
        let rates = SampleRates::default();
        let names: Vec<String> = MONTAGE
            .iter()
            .cycle()
            .take(eeg_channels)
            .enumerate()
            .map(|(i, n)| {
                if i < 8 {
                    n.to_string()
                } else {
                    format!("X{i}")
                }
            })
            .collect();
        let eeg = SignalTrace::new(
            (0..eeg_channels)
                .map(|c| (0..10).map(|i| (i * (c + 1)) as f64 * 0.5).collect())
                .collect(),
            rates.eeg,
            names,
        )
        .unwrap();
        let one = |fs: f64| SignalTrace::single(vec![1.0, 2.5, -0.25], fs).unwrap();
        Trial {
            participant_id: participant.into(),
            clip_id: clip.into(),
            eeg,
            eda: one(rates.eda),
            bvp: one(rates.bvp),
            temp: one(rates.temp),
            assessment: SelfAssessment {
                valence: 4.28,
                arousal: 5.0,
                happiness: 1.0,
                fear: 9.0,
                excitement: 3.5,
            },
            is_common_clip: true,
        }
    }

    fn catalog(clips: &[&str]) -> BTreeMap<String, ClipInfo> {
        clips
            .iter()
            .map(|c| {
                (
                    c.to_string(),
                    ClipInfo {
                        title: format!("Clip, \"{c}\""),
                        tags: vec!["Horror".into(), "Mystery".into()],
                    },
                )
            })
            .collect()
    }

    fn grid_dataset() -> Dataset {
        let mut trials = Vec::new();
        for p in ["01", "02"] {
            for c in ["1", "2", "3"] {
                trials.push(tiny_trial(p, c, 8));
            }
        }
        Dataset::new(trials, catalog(&["1", "2", "3"]), SampleRates::default()).unwrap()
    }

    #[test]
    fn loads_two_by_three_tree() {
        let dir = tempfile::tempdir().unwrap();
        let ds = grid_dataset();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.len(), 6);
        assert_eq!(loaded, ds);
    }

    #[test]
    fn seven_channel_eeg_is_rejected_with_trial_name() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&grid_dataset(), dir.path()).unwrap();
        let bad = tiny_trial("02", "3", 7);
        let path = dir.path().join("P02/C3/eeg.csv");
        write_trace(&path, &bad.eeg).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("P02/C3"), "{err}");
    }

    #[test]
    fn missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&grid_dataset(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("P01/C2/bvp.csv")).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Structure { .. }));
        assert!(err.to_string().contains("P01/C2/bvp.csv"), "{err}");
    }

    #[test]
    fn non_finite_sample_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&grid_dataset(), dir.path()).unwrap();
        fs::write(
            dir.path().join("P01/C1/temp.csv"),
            "t,value\n0,1\n0.25,NaN\n",
        )
        .unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("P01/C1"), "{err}");
        assert!(err.to_string().contains("non-finite"), "{err}");
    }

    #[test]
    fn out_of_range_score_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&grid_dataset(), dir.path()).unwrap();
        let path = dir.path().join("P02/C1/assessment.json");
        let text = fs::read_to_string(&path).unwrap().replace("4.28", "9.5");
        fs::write(&path, text).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("valence"), "{err}");
    }

    #[test]
    fn duplicate_trials_are_rejected() {
        let trials = vec![tiny_trial("01", "1", 8), tiny_trial("01", "1", 8)];
        assert!(Dataset::new(trials, BTreeMap::new(), SampleRates::default()).is_err());
    }

    #[test]
    fn per_trial_rate_override_round_trips() {
        let mut ds = grid_dataset();
        let t = &mut ds.trials[0];
        t.eda = SignalTrace::single(vec![0.5, 0.75], 8.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.trials()[0].eda.sample_rate_hz(), 8.0);
        assert_eq!(loaded.trials()[1].eda.sample_rate_hz(), 4.0);
    }

    #[test]
    fn common_clips_are_the_intersection() {
        let mut trials = Vec::new();
        for (p, clips) in [
            ("1", ["a", "b", "c"]),
            ("2", ["b", "c", "d"]),
            ("3", ["c", "b", "e"]),
        ] {
            for c in clips {
                trials.push(tiny_trial(p, c, 8));
            }
        }
        let ds = Dataset::new(trials, BTreeMap::new(), SampleRates::default()).unwrap();
        assert_eq!(validate_cv_readiness(&ds).unwrap(), vec!["b", "c"]);
    }

    #[test]
    fn nine_shared_clips_across_many_participants() {
        let mut trials = Vec::new();
        for p in 0..43 {
            for c in 0..9 {
                trials.push(tiny_trial(&format!("{p:02}"), &format!("{c:02}"), 8));
            }
            for j in 0..6 {
                trials.push(tiny_trial(&format!("{p:02}"), &format!("u{p}_{j}"), 8));
            }
        }
        let ds = Dataset::new(trials, BTreeMap::new(), SampleRates::default()).unwrap();
        assert_eq!(ds.len(), 645);
        assert_eq!(validate_cv_readiness(&ds).unwrap().len(), 9);
    }

    #[test]
    fn disjoint_clips_are_not_cv_ready() {
        let trials = vec![tiny_trial("1", "a", 8), tiny_trial("2", "b", 8)];
        let ds = Dataset::new(trials, BTreeMap::new(), SampleRates::default()).unwrap();
        let err = validate_cv_readiness(&ds).unwrap_err();
        assert!(err.to_string().contains("no common clips"));
    }
}
