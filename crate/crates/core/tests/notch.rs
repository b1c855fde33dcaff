use std::f64::consts::PI;

use affectbench::dataset::SignalTrace;
use affectbench::preprocessing::notch_trace;

/// Amplitude of the `f` Hz component by least-squares projection onto
/// sine and cosine.
fn amplitude_at(x: &[f64], f: f64, fs: f64) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let w = 2.0 * PI * f * i as f64 / fs;
        s += v * w.sin();
        c += v * w.cos();
    }
    2.0 * (s * s + c * c).sqrt() / x.len() as f64
}

#[test]
fn mains_notch_steady_state_rejection() {
    let fs = 250.0;
    let n = 30 * 250;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * PI * 10.0 * t).sin() + 2.0 * (2.0 * PI * 50.0 * t + 0.3).sin()
        })
        .collect();
    let y = notch_trace(&SignalTrace::single(x.clone(), fs).unwrap(), 50.0, 30.0).unwrap();
    let y = &y.samples()[0];

    let whole = 20.0 * (amplitude_at(y, 50.0, fs) / amplitude_at(&x, 50.0, fs)).log10();
    // the filter needs about a second to settle
    let skip = fs as usize;
    let steady =
        20.0 * (amplitude_at(&y[skip..], 50.0, fs) / amplitude_at(&x[skip..], 50.0, fs)).log10();
    println!("50 Hz attenuation: whole trace {whole:.1} dB, steady state {steady:.1} dB");
    assert!(
        steady <= -30.0,
        "steady-state rejection only {steady:.1} dB"
    );

    let keep = amplitude_at(&y[skip..], 10.0, fs) / amplitude_at(&x[skip..], 10.0, fs);
    assert!((keep - 1.0).abs() < 0.01, "10 Hz gain {keep}");
}
