//! Seeded synthetic datasets with known ground truth.
//!
//! Each trial draws a latent valence/arousal quadrant. Self-assessments come
//! from that quadrant's score blob, and the quadrant drives the planted EEG
//! band effects and the heart rate. Everything else is nuisance: band-limited
//! background EEG with per-participant gain, 50 Hz mains with per-channel
//! amplitude, EDA drift with skin-conductance responses, BVP pulses and a slow
//! temperature ramp.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    save_dataset, ClipInfo, Dataset, SampleRates, SelfAssessment, SignalTrace, Trial, MONTAGE,
};
use crate::dsp;
use crate::error::{Error, Result};
use crate::features::EegBand;
use crate::labeling::{Axis, Level};
use crate::seeds;

/// Extra band-limited EEG activity on one channel for trials whose latent
/// class on `axis` is high.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEffect {
    pub axis: Axis,
    pub channel: String,
    pub band: EegBand,
    /// Peak amplitude of the planted oscillation, in background-RMS units.
    pub amplitude: f64,
}

/// Score distribution of one quadrant: independent normals, clamped to [1, 9].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaBlob {
    pub mean: (f64, f64),
    pub sd: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub participants: usize,
    /// Clips per participant.
    pub clips: usize,
    /// Clips every participant sees; the rest rotate through `clip_pool`.
    pub common_clips: usize,
    pub clip_pool: usize,
    pub duration_s: f64,
    pub class_effects: Vec<ClassEffect>,
    /// Heart-rate increase (bpm) for high-arousal trials.
    pub hr_effect_bpm: f64,
    /// Skin-conductance responses per second in low-arousal trials.
    pub scr_rate_hz: f64,
    /// Extra responses per second in high-arousal trials.
    pub scr_effect_hz: f64,
    /// LVLA, LVHA, HVLA, HVHA.
    pub va_blobs: [VaBlob; 4],
    /// Background EEG RMS.
    pub noise_sd: f64,
    pub mains_amplitude: f64,
    pub sample_rates: SampleRates,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            participants: 20,
            clips: 8,
            common_clips: 5,
            clip_pool: 10,
            duration_s: 24.0,
            class_effects: vec![
                ClassEffect {
                    axis: Axis::Valence,
                    channel: "Oz".to_string(),
                    band: EegBand::Alpha,
                    amplitude: 1.5,
                },
                ClassEffect {
                    axis: Axis::Arousal,
                    channel: "Fz".to_string(),
                    band: EegBand::Beta,
                    amplitude: 1.5,
                },
            ],
            hr_effect_bpm: 8.0,
            scr_rate_hz: 0.08,
            scr_effect_hz: 0.07,
            va_blobs: [
                VaBlob {
                    mean: (3.0, 3.0),
                    sd: (0.6, 0.6),
                },
                VaBlob {
                    mean: (3.0, 7.0),
                    sd: (0.6, 0.6),
                },
                VaBlob {
                    mean: (7.0, 3.0),
                    sd: (0.6, 0.6),
                },
                VaBlob {
                    mean: (7.0, 7.0),
                    sd: (0.6, 0.6),
                },
            ],
            noise_sd: 1.0,
            mains_amplitude: 1.5,
            sample_rates: SampleRates::default(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Same layout with every planted effect removed.
    pub fn without_effects(mut self) -> Self {
        self.class_effects.clear();
        self.hr_effect_bpm = 0.0;
        self.scr_effect_hz = 0.0;
        self
    }

    /// Same spec with every planted EEG oscillation at `amplitude`.
    pub fn with_effect_amplitude(mut self, amplitude: f64) -> Self {
        for e in &mut self.class_effects {
            e.amplitude = amplitude;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.participants == 0 || self.clips == 0 {
            return Err(Error::param("need at least one participant and one clip"));
        }
        if self.common_clips == 0 || self.common_clips > self.clips {
            return Err(Error::param(
                "common clips must be between 1 and the clip count",
            ));
        }
        let rotating = self.clips - self.common_clips;
        if rotating > 0 && self.clip_pool <= rotating {
            return Err(Error::param(
                "clip pool must be larger than the number of non-common clips per participant",
            ));
        }
        if self.duration_s < 20.0 {
            return Err(Error::param("synthetic trials must last at least 20 s"));
        }
        for e in &self.class_effects {
            if !MONTAGE.contains(&e.channel.as_str()) {
                return Err(Error::param(format!(
                    "unknown channel {:?} in class effect",
                    e.channel
                )));
            }
        }
        if self
            .va_blobs
            .iter()
            .any(|b| !(b.sd.0 > 0.0 && b.sd.1 > 0.0))
        {
            return Err(Error::param("blob standard deviations must be positive"));
        }
        if !(self.scr_rate_hz > 0.0 && self.scr_effect_hz >= 0.0) {
            return Err(Error::param(
                "skin-conductance response rates must be positive",
            ));
        }
        Ok(())
    }

    fn clip_id(i: usize) -> String {
        format!("{:02}", i + 1)
    }

    /// Clip ids seen by participant `p`: the common ones, then a rotating
    /// window over the pool.
    fn clips_for(&self, p: usize) -> Vec<usize> {
        let rotating = self.clips - self.common_clips;
        let mut out: Vec<usize> = (0..self.common_clips).collect();
        out.extend(
            (0..rotating).map(|j| self.common_clips + (p * rotating + j) % self.clip_pool.max(1)),
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTruth {
    pub participant_id: String,
    pub clip_id: String,
    pub quadrant: String,
    /// Latent classes; the recorded scores scatter around their blob.
    pub valence: Level,
    pub arousal: Level,
    pub valence_score: f64,
    pub arousal_score: f64,
    pub heart_rate_bpm: f64,
    pub is_common_clip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub common_clips: Vec<String>,
    pub trials: Vec<TrialTruth>,
}

impl GroundTruth {
    /// "low/high:1" class ratio of the latent labels on one axis.
    pub fn class_ratio(&self, axis: Axis) -> String {
        let high = self
            .trials
            .iter()
            .filter(|t| match axis {
                Axis::Valence => t.valence == Level::High,
                Axis::Arousal => t.arousal == Level::High,
            })
            .count();
        format!("{:.2}:1", (self.trials.len() - high) as f64 / high as f64)
    }
}

/// Rounds to 1e-4 so written files stay compact and reload exactly.
fn quantize(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

const RHYTHM_LEVEL: f64 = 0.5;
const RHYTHM_SPREAD: f64 = 0.5;

fn white(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

struct TrialPlan<'a> {
    spec: &'a SynthSpec,
    high_v: bool,
    high_a: bool,
    eeg_gain: f64,
    base_hr: f64,
    eda_base: f64,
    temp_base: f64,
}

fn eeg_trace(plan: &TrialPlan, rng: &mut ChaCha8Rng) -> Result<SignalTrace> {
    let spec = plan.spec;
    let fs = spec.sample_rates.eeg;
    let n = (spec.duration_s * fs).round() as usize;
    let background = dsp::design_bandpass(1.0, 45.0, 4, fs)?;
    let rhythms = EegBand::ALL
        .iter()
        .map(|b| {
            let (lo, hi) = b.edges_hz();
            dsp::design_bandpass(lo, hi, 2, fs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(MONTAGE.len());
    for (c, name) in MONTAGE.iter().enumerate() {
        let noise = dsp::filter_apply(&background, &white(rng, n + 500));
        let scale = spec.noise_sd * plan.eeg_gain / rms(&noise[500..]).max(1e-12);
        let mut x: Vec<f64> = noise[500..].iter().map(|v| v * scale).collect();
        // band rhythms whose power wanders from trial to trial and channel to channel
        for r in &rhythms {
            let z: f64 = StandardNormal.sample(rng);
            let w = RHYTHM_LEVEL * (RHYTHM_SPREAD * z).exp();
            let y = dsp::filter_apply(r, &white(rng, n + 500));
            let k = w * spec.noise_sd * plan.eeg_gain / rms(&y[500..]).max(1e-12);
            for (v, s) in x.iter_mut().zip(&y[500..]) {
                *v += k * s;
            }
        }
        // mains differs per channel so the common average cannot cancel it
        let mains = spec.mains_amplitude * (0.5 + 0.15 * c as f64);
        let phase = rng.random_range(0.0..TAU);
        for (i, v) in x.iter_mut().enumerate() {
            *v += mains * (TAU * 50.0 * i as f64 / fs + phase).sin();
        }
        for e in spec.class_effects.iter().filter(|e| e.channel == *name) {
            let on = match e.axis {
                Axis::Valence => plan.high_v,
                Axis::Arousal => plan.high_a,
            };
            if !on {
                continue;
            }
            let (lo, hi) = e.band.edges_hz();
            // three tones well inside the band
            for _ in 0..3 {
                let f = rng.random_range(lo + 0.25 * (hi - lo)..hi - 0.25 * (hi - lo));
                let ph = rng.random_range(0.0..TAU);
                let amp = e.amplitude * spec.noise_sd / 3f64.sqrt();
                for (i, v) in x.iter_mut().enumerate() {
                    *v += amp * (TAU * f * i as f64 / fs + ph).sin();
                }
            }
        }
        rows.push(x.into_iter().map(quantize).collect());
    }
    SignalTrace::new(rows, fs, MONTAGE.iter().map(|s| s.to_string()).collect())
}

/// Tonic drift plus skin-conductance responses shaped as a difference of
/// exponentials (rise 1 s, decay 4 s).
fn eda_trace(plan: &TrialPlan, rng: &mut ChaCha8Rng) -> Result<SignalTrace> {
    let fs = plan.spec.sample_rates.eda;
    let n = (plan.spec.duration_s * fs).round() as usize;
    let drift = rng.random_range(-0.01..0.01);
    let rate = plan.spec.scr_rate_hz
        + if plan.high_a {
            plan.spec.scr_effect_hz
        } else {
            0.0
        };
    let mut onsets = Vec::new();
    let mut t = 0.0;
    loop {
        t += -rng.random::<f64>().max(1e-12).ln() / rate;
        if t >= plan.spec.duration_s {
            break;
        }
        onsets.push((t, rng.random_range(0.1..0.5)));
    }
    let noise = Normal::new(0.0, 0.002).expect("valid sd");
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let scr: f64 = onsets
                .iter()
                .filter(|(o, _)| t >= *o)
                .map(|(o, a)| a * ((-(t - o) / 4.0).exp() - (-(t - o) / 1.0).exp()) / 0.47)
                .sum();
            quantize((plan.eda_base + drift * t + scr + noise.sample(rng)).max(0.01))
        })
        .collect();
    SignalTrace::single(x, fs)
}

fn bvp_trace(plan: &TrialPlan, hr: f64, rng: &mut ChaCha8Rng) -> Result<SignalTrace> {
    let fs = plan.spec.sample_rates.bvp;
    let n = (plan.spec.duration_s * fs).round() as usize;
    let ibi = 60.0 / hr;
    let jitter = Normal::new(0.0, 0.02 * ibi).expect("valid sd");
    let mut beats = Vec::new();
    let mut t = rng.random_range(0.1..ibi);
    while t < plan.spec.duration_s + 1.0 {
        beats.push(t);
        t += ibi + jitter.sample(rng);
    }
    let noise = Normal::new(0.0, 0.02).expect("valid sd");
    let wander = rng.random_range(0.0..TAU);
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let pulse: f64 = beats
                .iter()
                .filter(|b| (t - **b).abs() < 0.4)
                .map(|b| (-(t - b).powi(2) / (2.0 * 0.06f64.powi(2))).exp())
                .sum();
            quantize(pulse + 0.1 * (TAU * 0.05 * t + wander).sin() + noise.sample(rng))
        })
        .collect();
    SignalTrace::single(x, fs)
}

fn temp_trace(plan: &TrialPlan, rng: &mut ChaCha8Rng) -> Result<SignalTrace> {
    let fs = plan.spec.sample_rates.temp;
    let n = (plan.spec.duration_s * fs).round() as usize;
    let slope = rng.random_range(-0.005..0.005);
    let noise = Normal::new(0.0, 0.01).expect("valid sd");
    let x = (0..n)
        .map(|i| quantize(plan.temp_base + slope * i as f64 / fs + noise.sample(rng)))
        .collect();
    SignalTrace::single(x, fs)
}

const QUADRANTS: [&str; 4] = ["LVLA", "LVHA", "HVLA", "HVHA"];

/// Builds the dataset in memory together with its ground truth.
pub fn generate(spec: &SynthSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let mut trials = Vec::new();
    let mut truth = Vec::new();
    for p in 0..spec.participants {
        let pid = format!("{:02}", p + 1);
        let mut prng = ChaCha8Rng::seed_from_u64(seeds::derive(
            spec.seed,
            &[seeds::hash_str("participant"), p as u64],
        ));
        let eeg_gain = {
            let z: f64 = StandardNormal.sample(&mut prng);
            (0.3 * z).exp()
        };
        let base_hr = prng.random_range(60.0..80.0);
        let eda_base = prng.random_range(2.0..8.0);
        let temp_base = prng.random_range(32.0..35.0);
        for c in spec.clips_for(p) {
            let clip_id = SynthSpec::clip_id(c);
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                spec.seed,
                &[seeds::hash_str("trial"), p as u64, c as u64],
            ));
            let q = rng.random_range(0..4usize);
            let blob = spec.va_blobs[q];
            let score = |rng: &mut ChaCha8Rng, m: f64, s: f64| -> f64 {
                let z: f64 = StandardNormal.sample(rng);
                quantize((m + s * z).clamp(1.0, 9.0))
            };
            let valence = score(&mut rng, blob.mean.0, blob.sd.0);
            let arousal = score(&mut rng, blob.mean.1, blob.sd.1);
            let assessment = SelfAssessment {
                valence,
                arousal,
                happiness: score(&mut rng, valence, 0.8),
                fear: score(&mut rng, 10.0 - valence, 0.8),
                excitement: score(&mut rng, arousal, 0.8),
            };
            let plan = TrialPlan {
                spec,
                high_v: q >= 2,
                high_a: q % 2 == 1,
                eeg_gain,
                base_hr,
                eda_base,
                temp_base,
            };
            let hr = plan.base_hr + if plan.high_a { spec.hr_effect_bpm } else { 0.0 };
            let is_common = c < spec.common_clips;
            trials.push(Trial {
                participant_id: pid.clone(),
                clip_id: clip_id.clone(),
                eeg: eeg_trace(&plan, &mut rng)?,
                eda: eda_trace(&plan, &mut rng)?,
                bvp: bvp_trace(&plan, hr, &mut rng)?,
                temp: temp_trace(&plan, &mut rng)?,
                assessment,
                is_common_clip: is_common,
            });
            let level = |h: bool| if h { Level::High } else { Level::Low };
            truth.push(TrialTruth {
                participant_id: pid.clone(),
                clip_id,
                quadrant: QUADRANTS[q].to_string(),
                valence: level(plan.high_v),
                arousal: level(plan.high_a),
                valence_score: valence,
                arousal_score: arousal,
                heart_rate_bpm: hr,
                is_common_clip: is_common,
            });
        }
    }
    let used = spec.common_clips
        + spec
            .clip_pool
            .min(spec.participants * (spec.clips - spec.common_clips));
    let catalog: BTreeMap<String, ClipInfo> = (0..used.max(spec.clips))
        .map(|c| {
            (
                SynthSpec::clip_id(c),
                ClipInfo {
                    title: format!("Synthetic clip {}", c + 1),
                    tags: vec![
                        "synthetic".to_string(),
                        if c < spec.common_clips {
                            "common"
                        } else {
                            "rotating"
                        }
                        .to_string(),
                    ],
                },
            )
        })
        .collect();
    let ds = Dataset::new(trials, catalog, spec.sample_rates)?;
    truth.sort_by(|a, b| (&a.participant_id, &a.clip_id).cmp(&(&b.participant_id, &b.clip_id)));
    Ok((
        ds,
        GroundTruth {
            spec: spec.clone(),
            common_clips: (0..spec.common_clips).map(SynthSpec::clip_id).collect(),
            trials: truth,
        },
    ))
}

/// Planted-oscillation amplitude that makes the effects unmistakable; the
/// default spec uses a moderate 1.5.
pub const STRONG_EFFECT_AMPLITUDE: f64 = 4.0;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the dataset tree and `manifest.json` under `root`.
pub fn write(ds: &Dataset, truth: &GroundTruth, root: &Path) -> Result<()> {
    save_dataset(ds, root)?;
    let path = root.join(MANIFEST_FILE);
    let mut body = serde_json::to_string_pretty(truth).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    body.push('\n');
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(root: &Path) -> Result<GroundTruth> {
    let path = root.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}
