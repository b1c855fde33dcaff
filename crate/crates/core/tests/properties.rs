use affectbench::dsp::{design_bandpass, filter_apply, zero_crossing_rate};
use affectbench::labeling::kmeans_fit;
use affectbench::svm::{metrics, MinMaxScaler};
use proptest::prelude::*;

fn rows(max_rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3f64..1e3, cols), 1..max_rows)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scaler_maps_training_rows_into_unit_box(x in rows(20, 4)) {
        let s = MinMaxScaler::fit(&x).unwrap();
        let t = s.transform(&x).unwrap();
        for &v in t.iter().flatten() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{v}");
        }
    }

    #[test]
    fn metrics_accuracy_is_agreement_fraction(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..50)) {
        let yt: Vec<i8> = pairs.iter().map(|p| if p.0 { 1 } else { -1 }).collect();
        let yp: Vec<i8> = pairs.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
        let m = metrics(&yt, &yp).unwrap();
        let agree = pairs.iter().filter(|p| p.0 == p.1).count() as f64 / pairs.len() as f64;
        prop_assert!((m.accuracy - agree).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&m.f1));
    }

    #[test]
    fn filtering_is_linear(a in prop::collection::vec(-10f64..10.0, 64..200), k in -5f64..5.0) {
        let f = design_bandpass(8.0, 13.0, 4, 250.0).unwrap();
        let scaled: Vec<f64> = a.iter().map(|v| k * v).collect();
        let ya = filter_apply(&f, &a);
        let ys = filter_apply(&f, &scaled);
        for (p, q) in ya.iter().zip(&ys) {
            prop_assert!((k * p - q).abs() <= 1e-9 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn zero_crossing_rate_is_bounded(x in prop::collection::vec(-1f64..1.0, 2..300)) {
        let fs = 4.0;
        let z = zero_crossing_rate(&x, fs);
        prop_assert!(z >= 0.0);
        prop_assert!(z <= fs + 1e-12);
    }

    #[test]
    fn kmeans_inertia_matches_its_assignment(x in rows(15, 2), seed in 0u64..1000) {
        prop_assume!(x.len() >= 3);
        let m = kmeans_fit(&x, 2, seed, 3).unwrap();
        // inertia is the SSE of the returned assignment to the returned centroids
        let sse: f64 = x.iter().zip(&m.assignments).map(|(p, &a)| {
            p.iter().zip(&m.centroids[a]).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
        }).sum();
        prop_assert!((sse - m.inertia).abs() <= 1e-9 * (1.0 + sse));
    }
}
