//! Trial conditioning: duration trimming, mains notch, common average
//! reference and FastICA with optional ocular-component removal.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{SignalTrace, Trial};
use crate::dsp::{self, WelchParams, Window};
use crate::error::{Error, Result};

/// Drops `round(head_s·fs)` leading and `round(tail_s·fs)` trailing samples
/// from every trace of the trial, each at its own sample rate.
pub fn trim_trial(t: &Trial, head_s: f64, tail_s: f64) -> Result<Trial> {
    if head_s < 0.0 || tail_s < 0.0 {
        return Err(Error::param("trim durations must be nonnegative"));
    }
    let trim = |name: &str, trace: &SignalTrace| -> Result<SignalTrace> {
        if trace.duration_s() <= head_s + tail_s {
            return Err(Error::validation(
                t.id(),
                format!(
                    "{name} trace lasts {} s, too short to trim {head_s} s + {tail_s} s",
                    trace.duration_s()
                ),
            ));
        }
        let fs = trace.sample_rate_hz();
        let head = (head_s * fs).round() as usize;
        let tail = (tail_s * fs).round() as usize;
        let n = trace.len();
        if head + tail >= n {
            return Err(Error::validation(
                t.id(),
                format!("{name} trace has {n} samples, cannot drop {head} + {tail}"),
            ));
        }
        let rows = trace
            .samples()
            .iter()
            .map(|row| row[head..n - tail].to_vec())
            .collect();
        trace.with_samples(rows)
    };
    Ok(Trial {
        eeg: trim("eeg", &t.eeg)?,
        eda: trim("eda", &t.eda)?,
        bvp: trim("bvp", &t.bvp)?,
        temp: trim("temp", &t.temp)?,
        ..t.clone()
    })
}

/// Subtracts the instantaneous across-channel mean from every channel.
pub fn common_average_reference(eeg: &SignalTrace) -> Result<SignalTrace> {
    let c = eeg.n_channels();
    if c < 2 {
        return Err(Error::param(
            "common average reference needs at least 2 channels",
        ));
    }
    let n = eeg.len();
    let rows = eeg.samples();
    let mut out = vec![vec![0.0; n]; c];
    for t in 0..n {
        let mean = rows.iter().map(|r| r[t]).sum::<f64>() / c as f64;
        for ch in 0..c {
            out[ch][t] = rows[ch][t] - mean;
        }
    }
    eeg.with_samples(out)
}

/// Notch-filters every channel of a trace.
pub fn notch_trace(trace: &SignalTrace, f0_hz: f64, q: f64) -> Result<SignalTrace> {
    let filter = dsp::design_notch(f0_hz, q, trace.sample_rate_hz())?;
    let rows = trace
        .samples()
        .iter()
        .map(|row| dsp::filter_apply(&filter, row))
        .collect();
    trace.with_samples(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaDecomposition {
    /// components × channels, maps centered channel data to sources.
    pub unmixing: DMatrix<f64>,
    /// channels × components, pseudo-inverse of `unmixing`.
    pub mixing: DMatrix<f64>,
    /// components × time.
    pub sources: DMatrix<f64>,
    /// Per-channel mean removed before decomposition.
    pub channel_means: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
}

impl IcaDecomposition {
    pub fn n_components(&self) -> usize {
        self.unmixing.nrows()
    }

    pub fn source(&self, k: usize) -> Vec<f64> {
        self.sources.row(k).iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcaParams {
    pub n_components: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl IcaParams {
    pub fn new(n_components: usize, seed: u64) -> Self {
        IcaParams {
            n_components,
            seed,
            max_iter: 200,
            tol: 1e-4,
        }
    }
}

fn to_matrix(trace: &SignalTrace) -> DMatrix<f64> {
    let (c, n) = (trace.n_channels(), trace.len());
    DMatrix::from_fn(c, n, |i, j| trace.samples()[i][j])
}

/// `(W Wᵀ)^{-1/2} W`
fn symmetric_decorrelation(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(1e-300).sqrt()));
    &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * w
}

/// Symmetric FastICA with the `tanh` contrast. Data are centered and whitened
/// by eigen-decomposition of the sample covariance (keeping the
/// `n_components` largest eigenvalues), then the unmixing rotation is found
/// by the fixed-point iteration
/// `W ← E[g(WZ) Zᵀ] − diag(E[g'(WZ)]) W` followed by symmetric decorrelation.
pub fn fast_ica(eeg: &SignalTrace, params: IcaParams) -> Result<IcaDecomposition> {
    let c = eeg.n_channels();
    let m = params.n_components;
    let n = eeg.len();
    if m == 0 || m > c {
        return Err(Error::param(format!(
            "n_components must lie in [1, {c}], got {m}"
        )));
    }
    if n <= c {
        return Err(Error::param(format!(
            "ICA needs more samples ({n}) than channels ({c})"
        )));
    }
    let mut x = to_matrix(eeg);
    let means: Vec<f64> = (0..c).map(|i| x.row(i).mean()).collect();
    for (i, mu) in means.iter().enumerate() {
        x.row_mut(i).add_scalar_mut(-mu);
    }
    let cov = &x * x.transpose() / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let smallest_kept = eig.eigenvalues[order[m - 1]];
    if !(top > 0.0) || smallest_kept <= top * 1e-10 {
        return Err(Error::numerical(format!(
            "covariance is rank-deficient for {m} components (eigenvalue {smallest_kept:e}); \
             try fewer components"
        )));
    }
    // whitening K = D^{-1/2} Eᵀ (m × c) and its pseudo-inverse E D^{1/2} (c × m)
    let mut whiten = DMatrix::zeros(m, c);
    let mut dewhiten = DMatrix::zeros(c, m);
    for (row, &k) in order.iter().take(m).enumerate() {
        let l = eig.eigenvalues[k];
        for ch in 0..c {
            let e = eig.eigenvectors[(ch, k)];
            whiten[(row, ch)] = e / l.sqrt();
            dewhiten[(ch, row)] = e * l.sqrt();
        }
    }
    let z = &whiten * &x;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&init);
    let mut converged = false;
    let mut iterations = 0;
    let zt = z.transpose();
    for it in 1..=params.max_iter {
        iterations = it;
        let mut g = &w * &z;
        let mut g_prime_mean = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for v in g.row_mut(i).iter_mut() {
                let t = v.tanh();
                *v = t;
                acc += 1.0 - t * t;
            }
            g_prime_mean[i] = acc / n as f64;
        }
        let mut w_new = &g * &zt / n as f64;
        for i in 0..m {
            for j in 0..m {
                w_new[(i, j)] -= g_prime_mean[i] * w[(i, j)];
            }
        }
        let w_new = symmetric_decorrelation(&w_new);
        let lim = (0..m)
            .map(|i| (w_new.row(i).dot(&w.row(i)).abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < params.tol {
            converged = true;
            break;
        }
    }

    let unmixing = &w * &whiten;
    let mixing = &dewhiten * w.transpose();
    let sources = &w * &z;
    Ok(IcaDecomposition {
        unmixing,
        mixing,
        sources,
        channel_means: means,
        converged,
        iterations,
        sample_rate_hz: eeg.sample_rate_hz(),
        channel_names: eeg.channel_names().to_vec(),
    })
}

fn abs_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).abs()
    }
}

/// Fractional ranks in [0, 1], ties averaged; a single value ranks 1.
fn normalized_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg / (n - 1) as f64;
        }
        i = j + 1;
    }
    ranks
}

const EOG_LOW_HZ: f64 = 4.0;

/// Ranks components by how EOG-like they look. For each component the two
/// criteria are (a) |corr| with the mean of Fp1 and Fp2 and (b) the fraction
/// of its power below 4 Hz. Each criterion is weighted by its fractional rank
/// among the components, and the score is `(rank_a·a + rank_b·b) / 2`, in
/// [0, 1]. Sorted by descending score, ties by component index.
pub fn eog_component_scores(d: &IcaDecomposition, eeg: &SignalTrace) -> Vec<(usize, f64)> {
    let m = d.n_components();
    let frontal: Option<Vec<f64>> = match (eeg.channel("Fp1"), eeg.channel("Fp2")) {
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()),
        (Some(a), None) | (None, Some(a)) => Some(a.to_vec()),
        (None, None) => None,
    };
    let fs = d.sample_rate_hz;
    let mut corr = Vec::with_capacity(m);
    let mut low = Vec::with_capacity(m);
    for k in 0..m {
        let s = d.source(k);
        corr.push(frontal.as_ref().map_or(0.0, |f| abs_correlation(&s, f)));
        let seg = ((4.0 * fs).round() as usize)
            .max(WelchParams::MIN_SEGMENT)
            .min(s.len());
        let frac = dsp::welch_psd(&s, fs, WelchParams::new(seg, 0.5, Window::Hann))
            .ok()
            .and_then(|spec| {
                let total = spec.total_power();
                let lowp = dsp::band_power_clipped(&spec, 0.0, EOG_LOW_HZ).ok()?;
                (total > 0.0).then(|| lowp / total)
            })
            .unwrap_or(0.0);
        low.push(frac.clamp(0.0, 1.0));
    }
    let rc = normalized_ranks(&corr);
    let rl = normalized_ranks(&low);
    let mut scores: Vec<(usize, f64)> = (0..m)
        .map(|k| (k, 0.5 * (rc[k] * corr[k] + rl[k] * low[k])))
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scores
}

/// Back-projects the sources with the selected rows zeroed and restores the
/// channel means.
pub fn remove_components(d: &IcaDecomposition, indices: &BTreeSet<usize>) -> Result<SignalTrace> {
    let m = d.n_components();
    if let Some(bad) = indices.iter().find(|&&k| k >= m) {
        return Err(Error::param(format!(
            "component index {bad} out of range (have {m})"
        )));
    }
    let mut s = d.sources.clone();
    for &k in indices {
        s.row_mut(k).fill(0.0);
    }
    let x = &d.mixing * s;
    let rows = (0..x.nrows())
        .map(|i| x.row(i).iter().map(|v| v + d.channel_means[i]).collect())
        .collect();
    SignalTrace::new(rows, d.sample_rate_hz, d.channel_names.clone())
}

/// What to do with ICA components after decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcaPolicy {
    /// Skip ICA entirely.
    None,
    /// Remove up to `max` top-scored components whose EOG score reaches `threshold`.
    Auto { max: usize, threshold: f64 },
    /// Remove exactly these components.
    Manual(Vec<usize>),
}

impl IcaPolicy {
    pub const AUTO_THRESHOLD: f64 = 0.6;
}

impl std::str::FromStr for IcaPolicy {
    type Err = Error;

    /// `none`, `auto:<n>` or a comma-separated index list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(IcaPolicy::None);
        }
        if let Some(n) = s.strip_prefix("auto:") {
            let max = n
                .parse()
                .map_err(|_| Error::param(format!("bad ICA policy {s:?}")))?;
            return Ok(IcaPolicy::Auto {
                max,
                threshold: Self::AUTO_THRESHOLD,
            });
        }
        let idx: std::result::Result<Vec<usize>, _> =
            s.split(',').map(|p| p.trim().parse::<usize>()).collect();
        idx.map(IcaPolicy::Manual)
            .map_err(|_| Error::param(format!("bad ICA policy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub head_s: f64,
    pub tail_s: f64,
    pub notch_hz: f64,
    pub notch_q: f64,
    pub ica: IcaPolicy,
    pub ica_max_iter: usize,
    pub ica_tol: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            head_s: 2.0,
            tail_s: 2.0,
            notch_hz: 50.0,
            notch_q: 30.0,
            ica: IcaPolicy::None,
            ica_max_iter: 200,
            ica_tol: 1e-4,
        }
    }
}

/// Fixed chain: trim → notch → CAR → ICA (per policy). After CAR the channel
/// covariance has rank `channels − 1`, so ICA runs with that many components.
pub fn preprocess_trial(t: &Trial, cfg: &PreprocessConfig, seed: u64) -> Result<Trial> {
    let trimmed = trim_trial(t, cfg.head_s, cfg.tail_s)?;
    let notched = notch_trace(&trimmed.eeg, cfg.notch_hz, cfg.notch_q)?;
    let car = common_average_reference(&notched)?;
    let eeg = match &cfg.ica {
        IcaPolicy::None => car,
        policy => {
            let params = IcaParams {
                n_components: car.n_channels() - 1,
                seed,
                max_iter: cfg.ica_max_iter,
                tol: cfg.ica_tol,
            };
            let d = fast_ica(&car, params)?;
            let remove: BTreeSet<usize> = match policy {
                IcaPolicy::Auto { max, threshold } => eog_component_scores(&d, &car)
                    .into_iter()
                    .take(*max)
                    .filter(|(_, score)| score >= threshold)
                    .map(|(k, _)| k)
                    .collect(),
                IcaPolicy::Manual(idx) => idx.iter().copied().collect(),
                IcaPolicy::None => unreachable!(),
            };
            if remove.is_empty() {
                car
            } else {
                remove_components(&d, &remove)?
            }
        }
    };
    Ok(Trial { eeg, ..trimmed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::tiny_trial;
    use crate::dataset::MONTAGE;
    use rand::Rng;
    use std::f64::consts::PI;

    fn trace(rows: Vec<Vec<f64>>, fs: f64) -> SignalTrace {
        let names = MONTAGE
            .iter()
            .take(rows.len())
            .map(|s| s.to_string())
            .collect();
        SignalTrace::new(rows, fs, names).unwrap()
    }

    fn long_trial(seconds: f64) -> Trial {
        let mut t = tiny_trial("1", "1", 8);
        let mk = |fs: f64, ch: usize| {
            let n = (seconds * fs).round() as usize;
            (0..ch)
                .map(|c| (0..n).map(|i| (i + c) as f64).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        t.eeg = trace(mk(250.0, 8), 250.0);
        t.eda = SignalTrace::single(mk(4.0, 1).remove(0), 4.0).unwrap();
        t.bvp = SignalTrace::single(mk(64.0, 1).remove(0), 64.0).unwrap();
        t.temp = SignalTrace::single(mk(4.0, 1).remove(0), 4.0).unwrap();
        t
    }

    #[test]
    fn trim_sixty_to_fifty_six_seconds() {
        let t = long_trial(60.0);
        let out = trim_trial(&t, 2.0, 2.0).unwrap();
        assert_eq!(out.eeg.len(), 14_000);
        assert_eq!(out.eda.len(), 224);
        assert_eq!(out.bvp.len(), 56 * 64);
        assert_eq!(out.eeg.samples()[0][0], 500.0);
        assert_eq!(out.eeg.sample_rate_hz(), 250.0);
        assert_eq!(out.eeg.channel_names(), t.eeg.channel_names());
        assert!((out.eeg.duration_s() - 56.0).abs() < 1e-12);
    }

    #[test]
    fn trim_zero_is_identity_and_short_trials_fail() {
        let t = long_trial(3.0);
        assert_eq!(trim_trial(&t, 0.0, 0.0).unwrap(), t);
        let err = trim_trial(&t, 2.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("eeg"), "{err}");
    }

    #[test]
    fn car_examples() {
        let same = trace(vec![vec![1.0, -2.0, 3.5]; 8], 250.0);
        let out = common_average_reference(&same).unwrap();
        assert!(out.samples().iter().flatten().all(|v| *v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..1000).map(|_| rng.random_range(-50.0..50.0)).collect())
            .collect();
        let x = trace(rows, 250.0);
        let once = common_average_reference(&x).unwrap();
        for t in 0..1000 {
            let m: f64 = once.samples().iter().map(|r| r[t]).sum::<f64>() / 8.0;
            assert!(m.abs() < 1e-9);
        }
        let twice = common_average_reference(&once).unwrap();
        for (a, b) in once
            .samples()
            .iter()
            .flatten()
            .zip(twice.samples().iter().flatten())
        {
            assert!((a - b).abs() < 1e-12);
        }
        let single = trace(vec![vec![1.0; 10]], 250.0);
        assert!(common_average_reference(&single).is_err());
    }

    fn uniform_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn mix(sources: &[Vec<f64>], a: &[[f64; 2]; 2]) -> Vec<Vec<f64>> {
        (0..2)
            .map(|i| {
                (0..sources[0].len())
                    .map(|t| a[i][0] * sources[0][t] + a[i][1] * sources[1][t])
                    .collect()
            })
            .collect()
    }

    #[test]
    fn recovers_sine_and_noise_mixture() {
        let n = 5000;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s0: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 3.0 * i as f64 / 250.0).sin())
            .collect();
        let s1 = uniform_noise(&mut rng, n);
        let x = trace(
            mix(&[s0.clone(), s1.clone()], &[[1.0, 0.6], [0.4, 1.0]]),
            250.0,
        );
        let d = fast_ica(&x, IcaParams::new(2, 7)).unwrap();
        assert!(d.converged);
        let truth = [s0, s1];
        let mut used = [false; 2];
        for k in 0..2 {
            let src = d.source(k);
            let (best, corr) = (0..2)
                .map(|j| (j, abs_correlation(&src, &truth[j])))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(corr >= 0.95, "component {k}: {corr}");
            assert!(!used[best]);
            used[best] = true;
        }
    }

    #[test]
    fn sources_are_white_and_unmixing_inverts_mixing() {
        let n = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| uniform_noise(&mut rng, n)).collect();
        let x = trace(rows, 100.0);
        let d = fast_ica(&x, IcaParams::new(4, 1)).unwrap();
        let cov = &d.sources * d.sources.transpose() / n as f64;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[(i, j)] - expect).abs() <= 1e-3,
                    "cov[{i},{j}]={}",
                    cov[(i, j)]
                );
            }
        }
        let eye = &d.unmixing * &d.mixing;
        assert!((eye - DMatrix::identity(4, 4)).amax() < 1e-6);
    }

    #[test]
    fn identity_mixing_of_white_sources() {
        let n = 6000;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s0 = uniform_noise(&mut rng, n);
        let s1: Vec<f64> = (0..n)
            .map(|i| if (i / 17) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let x = trace(vec![s0.clone(), s1.clone()], 100.0);
        let d = fast_ica(&x, IcaParams::new(2, 2)).unwrap();
        let c00 = abs_correlation(&d.source(0), &s0).max(abs_correlation(&d.source(1), &s0));
        let c11 = abs_correlation(&d.source(0), &s1).max(abs_correlation(&d.source(1), &s1));
        assert!(c00 > 0.99 && c11 > 0.99, "{c00} {c11}");
    }

    #[test]
    fn ica_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..3).map(|_| uniform_noise(&mut rng, 2000)).collect();
        let x = trace(rows, 100.0);
        let a = fast_ica(&x, IcaParams::new(3, 99)).unwrap();
        let b = fast_ica(&x, IcaParams::new(3, 99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rank_deficient_input_suggests_fewer_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| uniform_noise(&mut rng, 3000)).collect();
        let car = common_average_reference(&trace(rows, 250.0)).unwrap();
        let err = fast_ica(&car, IcaParams::new(8, 0)).unwrap_err();
        assert!(err.to_string().contains("fewer components"), "{err}");
        assert!(fast_ica(&car, IcaParams::new(7, 0)).is_ok());
    }

    #[test]
    fn remove_nothing_all_and_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|c| {
                (0..2000)
                    .map(|_| rng.random_range(-1.0..1.0) + c as f64)
                    .collect()
            })
            .collect();
        let x = trace(rows, 100.0);
        let d = fast_ica(&x, IcaParams::new(3, 5)).unwrap();
        let back = remove_components(&d, &BTreeSet::new()).unwrap();
        for (a, b) in back
            .samples()
            .iter()
            .flatten()
            .zip(x.samples().iter().flatten())
        {
            assert!((a - b).abs() < 1e-6);
        }
        // with every source removed only the channel means remain
        let all: BTreeSet<usize> = (0..3).collect();
        let gone = remove_components(&d, &all).unwrap();
        for (c, row) in gone.samples().iter().enumerate() {
            assert!(row.iter().all(|v| (v - d.channel_means[c]).abs() < 1e-9));
        }
        assert!(remove_components(&d, &BTreeSet::from([3])).is_err());
    }

    #[test]
    fn remove_all_of_centered_input_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rows: Vec<Vec<f64>> = (0..3).map(|_| uniform_noise(&mut rng, 1000)).collect();
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| {
                let m = r.iter().sum::<f64>() / r.len() as f64;
                r.into_iter().map(|v| v - m).collect()
            })
            .collect();
        let d = fast_ica(&trace(rows, 100.0), IcaParams::new(3, 5)).unwrap();
        let gone = remove_components(&d, &(0..3).collect()).unwrap();
        assert!(gone.samples().iter().flatten().all(|v| v.abs() < 1e-9));
    }

    /// 8 independent sources (blink train, 20 Hz tone, alpha, noise) with the
    /// blink loaded mostly onto Fp1/Fp2. Returns (mixed trace, blink, tone).
    fn blink_scene(seed: u64) -> (SignalTrace, Vec<f64>, Vec<f64>) {
        let fs = 250.0;
        let n = 30 * 250;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blink: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let phase = (t * 0.3).fract() / 0.3;
                let d = phase - 0.5;
                (-(d * d) / (2.0 * 0.08f64.powi(2))).exp()
            })
            .collect();
        let tone: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 20.0 * i as f64 / fs).sin())
            .collect();
        let alpha: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 10.0 * i as f64 / fs + 0.3).sin())
            .collect();
        let mut sources = vec![blink.clone(), tone.clone(), alpha];
        while sources.len() < 8 {
            sources.push(uniform_noise(&mut rng, n));
        }
        let rows = (0..8)
            .map(|ch| {
                let w: Vec<f64> = (0..8)
                    .map(|k| match (k, ch) {
                        (0, 0) | (0, 1) => 8.0,
                        (0, _) => rng.random_range(0.0..0.3),
                        _ => rng.random_range(-1.0..1.0),
                    })
                    .collect();
                (0..n)
                    .map(|t| (0..8).map(|k| w[k] * sources[k][t]).sum())
                    .collect()
            })
            .collect();
        (trace(rows, fs), blink, tone)
    }

    #[test]
    fn blink_component_ranks_first_and_removal_cleans_frontal() {
        let (x, blink, tone) = blink_scene(17);
        let d = fast_ica(&x, IcaParams::new(8, 17)).unwrap();
        let scores = eog_component_scores(&d, &x);
        let (top, score) = scores[0];
        assert!(score >= 0.8, "top score {score}");
        assert!(abs_correlation(&d.source(top), &blink) > 0.95);
        let tone_k = (0..8)
            .max_by(|&a, &b| {
                abs_correlation(&d.source(a), &tone)
                    .total_cmp(&abs_correlation(&d.source(b), &tone))
            })
            .unwrap();
        let tone_score = scores.iter().find(|(k, _)| *k == tone_k).unwrap().1;
        assert!(tone_score <= 0.3, "tone score {tone_score}");

        let clean = remove_components(&d, &BTreeSet::from([top])).unwrap();
        for ch in ["Fp1", "Fp2"] {
            let before = abs_correlation(x.channel(ch).unwrap(), &blink);
            let after = abs_correlation(clean.channel(ch).unwrap(), &blink);
            assert!(before > 0.8 && after < 0.2, "{ch}: {before} -> {after}");
        }
    }

    #[test]
    fn equal_components_score_uniformly() {
        let s = vec![0.5; 4];
        assert_eq!(normalized_ranks(&s), vec![0.5; 4]);
        assert_eq!(normalized_ranks(&[3.0]), vec![1.0]);
        assert_eq!(normalized_ranks(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("none".parse::<IcaPolicy>().unwrap(), IcaPolicy::None);
        assert_eq!(
            "auto:1".parse::<IcaPolicy>().unwrap(),
            IcaPolicy::Auto {
                max: 1,
                threshold: 0.6
            }
        );
        assert_eq!(
            "0, 3".parse::<IcaPolicy>().unwrap(),
            IcaPolicy::Manual(vec![0, 3])
        );
        assert!("auto:x".parse::<IcaPolicy>().is_err());
    }

    #[test]
    fn preprocess_chain_runs_with_and_without_ica() {
        let mut t = long_trial(30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| uniform_noise(&mut rng, 30 * 250)).collect();
        t.eeg = trace(rows, 250.0);
        let cfg = PreprocessConfig::default();
        let plain = preprocess_trial(&t, &cfg, 0).unwrap();
        assert_eq!(plain.eeg.len(), 26 * 250);
        let with_ica = PreprocessConfig {
            ica: IcaPolicy::Auto {
                max: 1,
                threshold: 0.6,
            },
            ..cfg
        };
        let out = preprocess_trial(&t, &with_ica, 0).unwrap();
        assert_eq!(out.eeg.len(), 26 * 250);
    }
}
