//! Deterministic signal-processing kernels: IIR notch and Butterworth design
//! as biquad cascades, causal single-pass filtering, Welch PSD, band power by
//! trapezoidal integration, and zero-crossing rate.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z_inv2 = z_inv * z_inv;
        let num = self.b0 + self.b1 * z_inv + self.b2 * z_inv2;
        let den = 1.0 + self.a1 * z_inv + self.a2 * z_inv2;
        num / den
    }

    /// Roots of `z^2 + a1 z + a2`.
    fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    sections: Vec<Biquad>,
    sample_rate_hz: f64,
}

impl BiquadCascade {
    /// Rejects any section with a pole on or outside the unit circle.
    pub fn new(sections: Vec<Biquad>, sample_rate_hz: f64) -> Result<Self> {
        let cascade = BiquadCascade {
            sections,
            sample_rate_hz,
        };
        let max = cascade.max_pole_magnitude();
        if !(max < 1.0) {
            return Err(Error::numerical(format!(
                "unstable filter design: pole magnitude {max}"
            )));
        }
        Ok(cascade)
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn gain_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.response(freq_hz).norm().log10()
    }

    fn scale(&mut self, gain: f64) {
        let per_section = gain.powf(1.0 / self.sections.len() as f64);
        for s in &mut self.sections {
            s.b0 *= per_section;
            s.b1 *= per_section;
            s.b2 *= per_section;
        }
    }
}

fn check_rate(fs_hz: f64) -> Result<()> {
    if fs_hz > 0.0 && fs_hz.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "sample rate must be positive, got {fs_hz}"
        )))
    }
}

/// Second-order IIR notch at `f0_hz` with quality factor `q` (same
/// construction as SciPy's `iirnotch`). The DC gain is exactly one.
pub fn design_notch(f0_hz: f64, q: f64, fs_hz: f64) -> Result<BiquadCascade> {
    check_rate(fs_hz)?;
    let nyquist = fs_hz / 2.0;
    if !(f0_hz > 0.0 && f0_hz < nyquist) {
        return Err(Error::param(format!(
            "notch frequency {f0_hz} Hz must lie in (0, {nyquist}) Hz"
        )));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::param(format!("notch Q must be positive, got {q}")));
    }
    let w0 = f0_hz / nyquist;
    let bw = w0 / q;
    let beta = (bw * PI / 2.0).tan();
    let gain = 1.0 / (1.0 + beta);
    let cos_w0 = (w0 * PI).cos();
    let section = Biquad {
        b0: gain,
        b1: -2.0 * gain * cos_w0,
        b2: gain,
        a1: -2.0 * gain * cos_w0,
        a2: 2.0 * gain - 1.0,
    };
    BiquadCascade::new(vec![section], fs_hz)
}

fn prewarp(f_hz: f64, fs_hz: f64) -> f64 {
    2.0 * fs_hz * (PI * f_hz / fs_hz).tan()
}

fn bilinear(s: Complex64, fs_hz: f64) -> Complex64 {
    let k = 2.0 * fs_hz;
    (k + s) / (k - s)
}

/// Butterworth analog prototype poles on the left half of the unit circle.
fn butterworth_prototype(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

/// Groups digital poles into conjugate (or real) pairs, deterministic order.
fn pair_poles(poles: Vec<Complex64>) -> Vec<(Complex64, Complex64)> {
    const IMAG_EPS: f64 = 1e-12;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > IMAG_EPS).collect();
    complex.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let mut real: Vec<Complex64> = poles
        .iter()
        .copied()
        .filter(|p| p.im.abs() <= IMAG_EPS)
        .map(|p| Complex64::new(p.re, 0.0))
        .collect();
    real.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    let mut pairs: Vec<(Complex64, Complex64)> =
        complex.into_iter().map(|p| (p, p.conj())).collect();
    for chunk in real.chunks(2) {
        match chunk {
            [a, b] => pairs.push((*a, *b)),
            [a] => pairs.push((*a, Complex64::new(0.0, 0.0))),
            _ => unreachable!(),
        }
    }
    pairs
}

fn denominator(p: Complex64, q: Complex64) -> (f64, f64) {
    (-(p + q).re, (p * q).re)
}

/// Butterworth bandpass of the given prototype order (2·order poles),
/// bilinear-transformed with pre-warped band edges so the −3 dB points land
/// exactly on `lo_hz` and `hi_hz`.
pub fn design_bandpass(lo_hz: f64, hi_hz: f64, order: usize, fs_hz: f64) -> Result<BiquadCascade> {
    check_rate(fs_hz)?;
    let nyquist = fs_hz / 2.0;
    if !(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < nyquist) {
        return Err(Error::param(format!(
            "bandpass edges must satisfy 0 < lo < hi < {nyquist} Hz, got ({lo_hz}, {hi_hz})"
        )));
    }
    if order == 0 {
        return Err(Error::param("filter order must be at least 1"));
    }
    let w_lo = prewarp(lo_hz, fs_hz);
    let w_hi = prewarp(hi_hz, fs_hz);
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;

    let mut digital = Vec::with_capacity(2 * order);
    for p in butterworth_prototype(order) {
        let half = p * bw / 2.0;
        let root = (half * half - w0_sq).sqrt();
        digital.push(bilinear(half + root, fs_hz));
        digital.push(bilinear(half - root, fs_hz));
    }
    let sections = pair_poles(digital)
        .into_iter()
        .map(|(p, q)| {
            let (a1, a2) = denominator(p, q);
            // one zero at z = 1 and one at z = -1 per section
            Biquad {
                b0: 1.0,
                b1: 0.0,
                b2: -1.0,
                a1,
                a2,
            }
        })
        .collect();
    let mut cascade = BiquadCascade::new(sections, fs_hz)?;
    let center_hz = (w0_sq.sqrt() / (2.0 * fs_hz)).atan() * fs_hz / PI;
    let g = cascade.response(center_hz).norm();
    cascade.scale(1.0 / g);
    Ok(cascade)
}

/// Butterworth lowpass with unit DC gain.
pub fn design_lowpass(cutoff_hz: f64, order: usize, fs_hz: f64) -> Result<BiquadCascade> {
    check_rate(fs_hz)?;
    let nyquist = fs_hz / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::param(format!(
            "lowpass cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz"
        )));
    }
    if order == 0 {
        return Err(Error::param("filter order must be at least 1"));
    }
    let wc = prewarp(cutoff_hz, fs_hz);
    let digital: Vec<Complex64> = butterworth_prototype(order)
        .into_iter()
        .map(|p| bilinear(p * wc, fs_hz))
        .collect();
    let sections = pair_poles(digital)
        .into_iter()
        .map(|(p, q)| {
            if q == Complex64::new(0.0, 0.0) {
                // first-order section: zero at z = -1, single real pole
                Biquad {
                    b0: 1.0,
                    b1: 1.0,
                    b2: 0.0,
                    a1: -p.re,
                    a2: 0.0,
                }
            } else {
                let (a1, a2) = denominator(p, q);
                Biquad {
                    b0: 1.0,
                    b1: 2.0,
                    b2: 1.0,
                    a1,
                    a2,
                }
            }
        })
        .collect();
    let mut cascade = BiquadCascade::new(sections, fs_hz)?;
    let g = cascade.response(0.0).norm();
    cascade.scale(1.0 / g);
    Ok(cascade)
}

/// Causal direct-form II transposed filtering from zero initial state.
pub fn filter_apply(filter: &BiquadCascade, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in filter.sections() {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let input = *v;
            let out = s.b0 * input + z1;
            z1 = s.b1 * input - s.a1 * out + z2;
            z2 = s.b2 * input - s.a2 * out;
            *v = out;
        }
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic (FFT-bin) form of the taper.
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hann" | "hanning" => Ok(Window::Hann),
            "rect" | "rectangular" | "boxcar" => Ok(Window::Rectangular),
            other => Err(Error::param(format!("unknown window {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchParams {
    pub seg_len: usize,
    pub overlap: f64,
    pub window: Window,
}

impl WelchParams {
    pub const MIN_SEGMENT: usize = 8;

    pub fn new(seg_len: usize, overlap: f64, window: Window) -> Self {
        WelchParams {
            seg_len,
            overlap,
            window,
        }
    }

    /// Caps the segment at the signal length, for short low-rate traces.
    pub fn fitted_to(self, len: usize) -> Self {
        WelchParams {
            seg_len: self.seg_len.min(len),
            ..self
        }
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    freqs_hz: Vec<f64>,
    psd: Vec<f64>,
}

impl Spectrum {
    pub fn new(freqs_hz: Vec<f64>, psd: Vec<f64>) -> Result<Self> {
        if freqs_hz.len() != psd.len() || freqs_hz.len() < 2 {
            return Err(Error::param(
                "spectrum needs matching freq/psd vectors of length >= 2",
            ));
        }
        if freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("spectrum frequencies must ascend"));
        }
        if psd.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::param("psd values must be nonnegative"));
        }
        Ok(Spectrum { freqs_hz, psd })
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn psd(&self) -> &[f64] {
        &self.psd
    }

    pub fn nyquist_hz(&self) -> f64 {
        *self.freqs_hz.last().unwrap()
    }

    pub fn total_power(&self) -> f64 {
        integrate(
            &self.freqs_hz,
            &self.psd,
            self.freqs_hz[0],
            self.nyquist_hz(),
        )
    }
}

/// Welch estimate: averaged, windowed, one-sided periodograms scaled to a
/// density. No per-segment detrending, so a constant lands in the DC bin.
/// Odd segment lengths are zero-padded by one sample so the last bin sits
/// exactly at Nyquist.
pub fn welch_psd(x: &[f64], fs_hz: f64, params: WelchParams) -> Result<Spectrum> {
    check_rate(fs_hz)?;
    let WelchParams {
        seg_len,
        overlap,
        window,
    } = params;
    if seg_len < WelchParams::MIN_SEGMENT {
        return Err(Error::param(format!(
            "segment length {seg_len} below minimum {}",
            WelchParams::MIN_SEGMENT
        )));
    }
    if seg_len > x.len() {
        return Err(Error::param(format!(
            "segment length {seg_len} exceeds signal length {}",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::param(format!(
            "overlap {overlap} must lie in [0, 1)"
        )));
    }
    let noverlap = ((overlap * seg_len as f64).floor() as usize).min(seg_len - 1);
    let step = seg_len - noverlap;
    let n_segments = (x.len() - seg_len) / step + 1;
    let nfft = seg_len + seg_len % 2;
    let taper = window.coefficients(seg_len);
    let taper_energy: f64 = taper.iter().map(|w| w * w).sum();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let n_bins = nfft / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for seg in 0..n_segments {
        let start = seg * step;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < seg_len {
                Complex64::new(x[start + i] * taper[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }
    let scale = 1.0 / (fs_hz * taper_energy * n_segments as f64);
    let psd: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || k == n_bins - 1 { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let freqs = (0..n_bins)
        .map(|k| k as f64 * fs_hz / nfft as f64)
        .collect();
    Spectrum::new(freqs, psd)
}

/// Exact integral of the piecewise-linear interpolant of `(f, p)` over [lo, hi].
fn integrate(f: &[f64], p: &[f64], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..f.len() - 1 {
        let (f0, f1) = (f[i], f[i + 1]);
        let a = lo.max(f0);
        let b = hi.min(f1);
        if b <= a {
            continue;
        }
        let slope = (p[i + 1] - p[i]) / (f1 - f0);
        let pa = p[i] + slope * (a - f0);
        let pb = p[i] + slope * (b - f0);
        total += 0.5 * (b - a) * (pa + pb);
    }
    total
}

/// Trapezoidal integral of the density over [lo, hi] Hz.
pub fn band_power(s: &Spectrum, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    let nyquist = s.nyquist_hz();
    if !(lo_hz >= s.freqs_hz[0] && lo_hz < hi_hz && hi_hz <= nyquist * (1.0 + 1e-12)) {
        return Err(Error::param(format!(
            "band [{lo_hz}, {hi_hz}] Hz outside spectrum [{}, {nyquist}] Hz",
            s.freqs_hz[0]
        )));
    }
    Ok(integrate(&s.freqs_hz, &s.psd, lo_hz, hi_hz.min(nyquist)))
}

/// Like [`band_power`] but bands reaching past Nyquist are truncated there,
/// and bands entirely above it contribute zero. Used for the low-rate E4
/// traces whose nominal bands can exceed the sampling limit.
pub fn band_power_clipped(s: &Spectrum, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    let nyquist = s.nyquist_hz();
    if lo_hz >= nyquist {
        return Ok(0.0);
    }
    band_power(s, lo_hz, hi_hz.min(nyquist))
}

/// Strict sign changes of the mean-removed signal per second of duration
/// `(n - 1) / fs`. Exact zeros carry the previous sign.
pub fn zero_crossing_rate(x: &[f64], fs_hz: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut last_sign = 0i8;
    let mut crossings = 0usize;
    for v in x {
        let d = v - mean;
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                crossings += 1;
            }
            last_sign = sign;
        }
    }
    crossings as f64 * fs_hz / (x.len() - 1) as f64
}
