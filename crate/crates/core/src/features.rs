//! Feature families for EEG, EDA, BVP and skin temperature, and the fused
//! feature vector built from them.
//!
//! Canonical layout, in order:
//!
//! | block | count | content |
//! |-------|-------|---------|
//! | EEG   | 32    | θ/α/β/γ band power per montage channel, channel-major |
//! | EDA   | 22    | 6 time-domain, 14 band powers over 0–2.4 Hz, 2 zero-crossing rates |
//! | BVP   | 13    | HR/HRV/IBI statistics and tachogram band powers |
//! | Temp  | 4     | mean, mean derivative, 0–0.1 Hz and 0.1–0.2 Hz power |
//!
//! With `eda_bands = 13` the EDA block has 21 entries and the fused vector 70.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SignalTrace, Trial, MONTAGE};
use crate::dsp::{self, Spectrum, WelchParams, Window};
use crate::error::{Error, Result};
use crate::preprocessing::{preprocess_trial, PreprocessConfig};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EegBand {
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl EegBand {
    pub const ALL: [EegBand; 4] = [
        EegBand::Theta,
        EegBand::Alpha,
        EegBand::Beta,
        EegBand::Gamma,
    ];

    pub fn edges_hz(self) -> (f64, f64) {
        match self {
            EegBand::Theta => (3.0, 7.0),
            EegBand::Alpha => (8.0, 13.0),
            EegBand::Beta => (14.0, 29.0),
            EegBand::Gamma => (30.0, 47.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EegBand::Theta => "theta",
            EegBand::Alpha => "alpha",
            EegBand::Beta => "beta",
            EegBand::Gamma => "gamma",
        }
    }
}

impl fmt::Display for EegBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EegBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theta" | "θ" => Ok(EegBand::Theta),
            "alpha" | "α" => Ok(EegBand::Alpha),
            "beta" | "β" => Ok(EegBand::Beta),
            "gamma" | "γ" => Ok(EegBand::Gamma),
            other => Err(Error::param(format!("unknown EEG band {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalFamily {
    Eeg,
    Eda,
    Bvp,
    Temp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Eeg,
    E4,
    Fusion,
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eeg" => Ok(Modality::Eeg),
            "e4" => Ok(Modality::E4),
            "fusion" => Ok(Modality::Fusion),
            other => Err(Error::param(format!("unknown modality {other:?}"))),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Eeg => "eeg",
            Modality::E4 => "e4",
            Modality::Fusion => "fusion",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSlot {
    pub name: String,
    pub family: SignalFamily,
    /// Short definition; BVP slots carry `invalid-pulse` when detection failed.
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<FeatureSlot>,
}

impl FeatureVector {
    fn empty() -> Self {
        FeatureVector {
            values: Vec::new(),
            layout: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, family: SignalFamily, tag: &str, value: f64) {
        self.values
            .push(if value.is_finite() { value } else { 0.0 });
        self.layout.push(FeatureSlot {
            name: name.into(),
            family,
            tag: tag.to_string(),
        });
    }

    fn extend(&mut self, other: FeatureVector) {
        self.values.extend(other.values);
        self.layout.extend(other.layout);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.layout
            .iter()
            .position(|s| s.name == name)
            .map(|i| self.values[i])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.layout.iter().map(|s| s.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub eeg_welch: WelchParams,
    /// EDA, Temp and the BVP tachogram; segments are capped at the trace length.
    pub low_rate_welch: WelchParams,
    pub bandpass_order: usize,
    /// 14 (literal enumeration) or 13 (70-feature total).
    pub eda_bands: usize,
    pub log_eeg: bool,
    pub tachogram_hz: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            eeg_welch: WelchParams::new(256, 0.5, Window::Hann),
            low_rate_welch: WelchParams::new(128, 0.5, Window::Hann),
            bandpass_order: 5,
            eda_bands: 14,
            log_eeg: false,
            tachogram_hz: 4.0,
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population standard deviation.
fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn low_rate_spectrum(x: &[f64], fs: f64, params: WelchParams) -> Result<Spectrum> {
    dsp::welch_psd(x, fs, params.fitted_to(x.len()))
}

/// One band power per (channel, band), channel-major. Each channel is
/// bandpassed to the band before its Welch spectrum is integrated over it.
pub fn eeg_band_features(
    eeg: &SignalTrace,
    channels: &[String],
    bands: &[EegBand],
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let fs = eeg.sample_rate_hz();
    let filters = bands
        .iter()
        .map(|b| {
            let (lo, hi) = b.edges_hz();
            dsp::design_bandpass(lo, hi, cfg.bandpass_order, fs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = FeatureVector::empty();
    for ch in channels {
        let x = eeg
            .channel(ch)
            .ok_or_else(|| Error::param(format!("unknown EEG channel {ch:?}")))?;
        for (band, filter) in bands.iter().zip(&filters) {
            let (lo, hi) = band.edges_hz();
            let y = dsp::filter_apply(filter, x);
            let spec = dsp::welch_psd(&y, fs, cfg.eeg_welch)?;
            let p = dsp::band_power(&spec, lo, hi)?;
            let v = if cfg.log_eeg {
                p.max(f64::MIN_POSITIVE).log10()
            } else {
                p
            };
            out.push(
                format!("eeg_{ch}_{band}"),
                SignalFamily::Eeg,
                "band_power",
                v,
            );
        }
    }
    Ok(out)
}

/// Local extrema with plateaus collapsed. Minima are placed at the last
/// sample of their plateau, maxima at the first.
fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, v) in x.iter().enumerate() {
        match runs.last_mut() {
            Some((_, end)) if x[*end] == *v => *end = i,
            _ => runs.push((i, i)),
        }
    }
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    for w in runs.windows(3) {
        let (prev, cur, next) = (x[w[0].0], x[w[1].0], x[w[2].0]);
        if cur < prev && cur < next {
            minima.push(w[1].1);
        } else if cur > prev && cur > next {
            maxima.push(w[1].0);
        }
    }
    (minima, maxima)
}

pub const EDA_SPECTRAL_MAX_HZ: f64 = 2.4;
const EDA_MIN_DURATION_S: f64 = 8.0;
const SCSR_CUTOFF_HZ: f64 = 0.2;
const SCVSR_CUTOFF_HZ: f64 = 0.08;
const ZCR_LOWPASS_ORDER: usize = 2;

/// EDA block: mean, mean derivative, mean negative derivative, negative
/// derivative fraction, local-minima count, mean rise time (s), `eda_bands`
/// equal-width band powers over [0, 2.4] Hz (truncated at Nyquist), and the
/// zero-crossing rates of the 0.2 Hz and 0.08 Hz lowpassed trace.
pub fn eda_features(eda: &SignalTrace, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let fs = eda.sample_rate_hz();
    if eda.duration_s() < EDA_MIN_DURATION_S {
        return Err(Error::param(format!(
            "EDA trace of {} s is shorter than the {EDA_MIN_DURATION_S} s needed for its slowest band",
            eda.duration_s()
        )));
    }
    if cfg.eda_bands == 0 {
        return Err(Error::param("eda_bands must be positive"));
    }
    let x = eda.first_channel();
    let deriv: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]) * fs).collect();
    let negative: Vec<f64> = deriv.iter().copied().filter(|d| *d < 0.0).collect();
    let (minima, maxima) = extrema(x);
    let rises: Vec<f64> = minima
        .iter()
        .filter_map(|&m| {
            maxima
                .iter()
                .find(|&&p| p > m)
                .map(|&p| (p - m) as f64 / fs)
        })
        .collect();

    let f = SignalFamily::Eda;
    let mut out = FeatureVector::empty();
    out.push("eda_mean", f, "mean", mean(x));
    out.push("eda_mean_derivative", f, "mean_derivative", mean(&deriv));
    out.push(
        "eda_mean_negative_derivative",
        f,
        "mean_negative_derivative",
        mean(&negative),
    );
    out.push(
        "eda_negative_derivative_fraction",
        f,
        "negative_fraction",
        negative.len() as f64 / deriv.len() as f64,
    );
    out.push("eda_local_minima", f, "local_minima", minima.len() as f64);
    out.push("eda_mean_rise_time", f, "rise_time_s", mean(&rises));

    let spec = low_rate_spectrum(x, fs, cfg.low_rate_welch)?;
    let width = EDA_SPECTRAL_MAX_HZ / cfg.eda_bands as f64;
    for i in 0..cfg.eda_bands {
        let lo = i as f64 * width;
        let hi = if i + 1 == cfg.eda_bands {
            EDA_SPECTRAL_MAX_HZ
        } else {
            (i + 1) as f64 * width
        };
        let p = dsp::band_power_clipped(&spec, lo, hi)?;
        out.push(
            format!("eda_band_{i:02}"),
            f,
            &format!("power_{lo:.4}_{hi:.4}_hz"),
            p,
        );
    }
    for (name, cutoff) in [
        ("eda_zcr_scsr", SCSR_CUTOFF_HZ),
        ("eda_zcr_scvsr", SCVSR_CUTOFF_HZ),
    ] {
        // centred first so the zero-state filter has no DC start-up transient
        let lp = dsp::design_lowpass(cutoff, ZCR_LOWPASS_ORDER, fs)?;
        let m = mean(x);
        let centred: Vec<f64> = x.iter().map(|v| v - m).collect();
        let y = dsp::filter_apply(&lp, &centred);
        out.push(
            name,
            f,
            &format!("zcr_lowpass_{cutoff}_hz"),
            dsp::zero_crossing_rate(&y, fs),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbiSeries {
    pub peak_times_s: Vec<f64>,
    pub ibis_s: Vec<f64>,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseDetector {
    /// Rolling window for the median/MAD threshold.
    pub window_s: f64,
    /// Threshold = rolling median + k · rolling MAD.
    pub k_mad: f64,
    /// Minimum peak spacing (0.3 s ⇔ 200 bpm).
    pub refractory_s: f64,
    pub min_peaks: usize,
    pub min_duration_s: f64,
}

impl Default for PulseDetector {
    fn default() -> Self {
        PulseDetector {
            window_s: 2.0,
            k_mad: 1.0,
            refractory_s: 0.3,
            min_peaks: 4,
            min_duration_s: 10.0,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl PulseDetector {
    pub fn detect(&self, bvp: &SignalTrace) -> IbiSeries {
        let x = bvp.first_channel();
        let fs = bvp.sample_rate_hz();
        let invalid = IbiSeries {
            peak_times_s: Vec::new(),
            ibis_s: Vec::new(),
            valid: false,
        };
        if bvp.duration_s() < self.min_duration_s || x.len() < 3 {
            return invalid;
        }
        let half = ((self.window_s * fs / 2.0).round() as usize).max(1);
        let mut kept: Vec<(usize, f64)> = Vec::new();
        for i in 1..x.len() - 1 {
            if !(x[i] > x[i - 1] && x[i] >= x[i + 1]) {
                continue;
            }
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            let mut win = x[lo..hi].to_vec();
            let med = median(&mut win);
            let mut dev: Vec<f64> = win.iter().map(|v| (v - med).abs()).collect();
            let mad = median(&mut dev);
            if x[i] <= med + self.k_mad * mad {
                continue;
            }
            // parabolic refinement of the peak time
            let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
            let denom = a - 2.0 * b + c;
            let offset = if denom != 0.0 {
                0.5 * (a - c) / denom
            } else {
                0.0
            };
            let t = (i as f64 + offset.clamp(-0.5, 0.5)) / fs;
            match kept.last_mut() {
                Some((j, tj)) if t - *tj < self.refractory_s => {
                    if x[i] > x[*j] {
                        *j = i;
                        *tj = t;
                    }
                }
                _ => kept.push((i, t)),
            }
        }
        if kept.len() < self.min_peaks {
            return invalid;
        }
        let peak_times_s: Vec<f64> = kept.iter().map(|(_, t)| *t).collect();
        let ibis_s = peak_times_s.windows(2).map(|w| w[1] - w[0]).collect();
        IbiSeries {
            peak_times_s,
            ibis_s,
            valid: true,
        }
    }
}

pub fn detect_pulses(bvp: &SignalTrace) -> IbiSeries {
    PulseDetector::default().detect(bvp)
}

/// IBI values placed at the closing beat of each interval, linearly
/// interpolated onto a uniform grid.
pub fn tachogram(series: &IbiSeries, rate_hz: f64) -> Vec<f64> {
    let times = &series.peak_times_s[1..];
    let values = &series.ibis_s;
    if times.len() < 2 {
        return values.clone();
    }
    let start = times[0];
    let n = ((times[times.len() - 1] - start) * rate_hz).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let t = start + k as f64 / rate_hz;
        while j + 2 < times.len() && times[j + 1] < t {
            j += 1;
        }
        let (t0, t1) = (times[j], times[j + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        out.push(values[j] + w * (values[j + 1] - values[j]));
    }
    out
}

const BVP_NAMES: [&str; 13] = [
    "bvp_hr_mean",
    "bvp_hr_std",
    "bvp_hrv_mean",
    "bvp_hrv_std",
    "bvp_ibi_mean",
    "bvp_ibi_std",
    "bvp_lf_hf_ratio",
    "bvp_power_0.1_0.2",
    "bvp_power_0.2_0.3",
    "bvp_power_0.3_0.4",
    "bvp_lf_power",
    "bvp_mf_power",
    "bvp_hf_power",
];

/// Tachogram bands (Hz): ratio numerator/denominator, three fixed bands, LF/MF/HF.
const RATIO_BANDS: [(f64, f64); 2] = [(0.04, 0.15), (0.15, 0.5)];
const FIXED_BANDS: [(f64, f64); 3] = [(0.1, 0.2), (0.2, 0.3), (0.3, 0.4)];
const LMH_BANDS: [(f64, f64); 3] = [(0.01, 0.08), (0.08, 0.15), (0.15, 0.5)];

/// Spectral BVP features of a mean-removed tachogram.
fn tachogram_features(tach: &[f64], cfg: &FeatureConfig) -> Result<Option<[f64; 7]>> {
    if tach.len() < WelchParams::MIN_SEGMENT {
        return Ok(None);
    }
    let m = mean(tach);
    let centered: Vec<f64> = tach.iter().map(|v| v - m).collect();
    let spec = low_rate_spectrum(&centered, cfg.tachogram_hz, cfg.low_rate_welch)?;
    let bp = |(lo, hi): (f64, f64)| dsp::band_power_clipped(&spec, lo, hi);
    let num = bp(RATIO_BANDS[0])?;
    let den = bp(RATIO_BANDS[1])?;
    let ratio = if den > 0.0 { num / den } else { 0.0 };
    Ok(Some([
        ratio,
        bp(FIXED_BANDS[0])?,
        bp(FIXED_BANDS[1])?,
        bp(FIXED_BANDS[2])?,
        bp(LMH_BANDS[0])?,
        bp(LMH_BANDS[1])?,
        bp(LMH_BANDS[2])?,
    ]))
}

/// The 13 BVP features. A failed pulse detection yields zeros with every
/// slot tagged `invalid-pulse` so fold sizes stay fixed.
pub fn bvp_features(bvp: &SignalTrace, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let series = detect_pulses(bvp);
    let mut values = [0.0; 13];
    let mut tag = "ok";
    if series.valid {
        let hr: Vec<f64> = series.ibis_s.iter().map(|ibi| 60.0 / ibi).collect();
        let hrv: Vec<f64> = series.ibis_s.windows(2).map(|w| w[1] - w[0]).collect();
        values[0] = mean(&hr);
        values[1] = std_dev(&hr);
        values[2] = mean(&hrv);
        values[3] = std_dev(&hrv);
        values[4] = mean(&series.ibis_s);
        values[5] = std_dev(&series.ibis_s);
        match tachogram_features(&tachogram(&series, cfg.tachogram_hz), cfg)? {
            Some(spectral) => values[6..].copy_from_slice(&spectral),
            None => tag = "short-tachogram",
        }
    } else {
        tag = "invalid-pulse";
    }
    let mut out = FeatureVector::empty();
    for (name, v) in BVP_NAMES.iter().zip(values) {
        out.push(*name, SignalFamily::Bvp, tag, v);
    }
    Ok(out)
}

pub fn temp_features(temp: &SignalTrace, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let x = temp.first_channel();
    let fs = temp.sample_rate_hz();
    if x.len() < WelchParams::MIN_SEGMENT {
        return Err(Error::param("temperature trace too short for a spectrum"));
    }
    let deriv: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]) * fs).collect();
    let spec = low_rate_spectrum(x, fs, cfg.low_rate_welch)?;
    let f = SignalFamily::Temp;
    let mut out = FeatureVector::empty();
    out.push("temp_mean", f, "mean", mean(x));
    out.push("temp_mean_derivative", f, "mean_derivative", mean(&deriv));
    out.push(
        "temp_power_0_0.1",
        f,
        "power_0_0.1_hz",
        dsp::band_power_clipped(&spec, 0.0, 0.1)?,
    );
    out.push(
        "temp_power_0.1_0.2",
        f,
        "power_0.1_0.2_hz",
        dsp::band_power_clipped(&spec, 0.1, 0.2)?,
    );
    Ok(out)
}

pub fn montage() -> Vec<String> {
    MONTAGE.iter().map(|s| s.to_string()).collect()
}

/// Builds the modality's vector: `eeg` → EEG block, `e4` → EDA‖BVP‖Temp,
/// `fusion` → EEG‖EDA‖BVP‖Temp. Channel/band subsets apply to the EEG block
/// only and are rejected for `e4`. `None` means the full montage / all bands.
pub fn assemble_features(
    t: &Trial,
    modality: Modality,
    channels: Option<&[String]>,
    bands: Option<&[EegBand]>,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    if modality == Modality::E4 && (channels.is_some() || bands.is_some()) {
        return Err(Error::param(
            "channel/band subsets only apply to the eeg and fusion modalities",
        ));
    }
    let mut out = FeatureVector::empty();
    if modality != Modality::E4 {
        let all_channels = montage();
        let channels = channels.unwrap_or(&all_channels);
        let bands = bands.unwrap_or(&EegBand::ALL);
        out.extend(eeg_band_features(&t.eeg, channels, bands, cfg)?);
    }
    if modality != Modality::Eeg {
        out.extend(eda_features(&t.eda, cfg)?);
        out.extend(bvp_features(&t.bvp, cfg)?);
        out.extend(temp_features(&t.temp, cfg)?);
    }
    Ok(out)
}

/// Per-trial feature rows sharing one layout, aligned with `Dataset::trials()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub keys: Vec<(String, String)>,
    pub layout: Vec<FeatureSlot>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn n_features(&self) -> usize {
        self.layout.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.layout.iter().position(|s| s.name == name)
    }

    /// Restricts to the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureTable> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::param(format!("no feature column {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            keys: self.keys.clone(),
            layout: idx.iter().map(|&i| self.layout[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
        })
    }

    /// Columns for the given modality view of a full fusion table.
    pub fn view(
        &self,
        modality: Modality,
        channels: &[String],
        bands: &[EegBand],
    ) -> Result<FeatureTable> {
        let mut names = Vec::new();
        if modality != Modality::E4 {
            for ch in channels {
                for b in bands {
                    names.push(format!("eeg_{ch}_{b}"));
                }
            }
        }
        if modality != Modality::Eeg {
            names.extend(
                self.layout
                    .iter()
                    .filter(|s| s.family != SignalFamily::Eeg)
                    .map(|s| s.name.clone()),
            );
        }
        self.select(&names)
    }

    /// Writes `<stem>.csv` (participant,clip,features...) and `<stem>.json`
    /// (layout plus the supplied extraction config).
    pub fn write(&self, dir: &Path, stem: &str, config: &serde_json::Value) -> Result<()> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut text = String::from("participant_id,clip_id");
        for s in &self.layout {
            text.push(',');
            text.push_str(&s.name);
        }
        text.push('\n');
        for ((p, c), row) in self.keys.iter().zip(&self.rows) {
            text.push_str(p);
            text.push(',');
            text.push_str(c);
            for v in row {
                text.push(',');
                text.push_str(&format!("{v}"));
            }
            text.push('\n');
        }
        std::fs::write(&csv_path, text).map_err(|e| Error::io(&csv_path, e))?;
        let sidecar = serde_json::json!({
            "layout": self.layout,
            "config": config,
        });
        let json_path = dir.join(format!("{stem}.json"));
        let mut body = serde_json::to_string_pretty(&sidecar).map_err(|source| Error::Json {
            context: json_path.display().to_string(),
            source,
        })?;
        body.push('\n');
        std::fs::write(&json_path, body).map_err(|e| Error::io(&json_path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
}

/// Preprocesses every trial and extracts the full fusion vector, in parallel
/// across trials. ICA seeds are derived per trial, so the table is
/// independent of scheduling.
pub fn extract_table(ds: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<FeatureTable> {
    let vectors = ds
        .trials()
        .par_iter()
        .map(|t| {
            let trial_seed = seeds::derive(
                seeds::derive_named(seed, "ica"),
                &[
                    seeds::hash_str(&t.participant_id),
                    seeds::hash_str(&t.clip_id),
                ],
            );
            let pre = preprocess_trial(t, &cfg.preprocess, trial_seed)?;
            assemble_features(&pre, Modality::Fusion, None, None, &cfg.features).map_err(
                |e| match e {
                    Error::Parameter(msg) => Error::validation(t.id(), msg),
                    other => other,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = vectors
        .first()
        .map(|v| v.layout.clone())
        .unwrap_or_default();
    // BVP tags vary per trial; the table layout keeps the names/families only
    let layout = layout
        .into_iter()
        .map(|mut s| {
            if s.family == SignalFamily::Bvp {
                s.tag = "hrv".to_string();
            }
            s
        })
        .collect();
    Ok(FeatureTable {
        keys: ds
            .trials()
            .iter()
            .map(|t| (t.participant_id.clone(), t.clip_id.clone()))
            .collect(),
        layout,
        rows: vectors.into_iter().map(|v| v.values).collect(),
    })
}
