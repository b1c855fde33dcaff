//! Nested leave-one-clip-out cross-validation with an F1-driven grid search,
//! and the channel-subset and frequency-band studies built on it.
//!
//! Outer folds hold out every trial of one common clip and train on all other
//! trials, non-common clips included. Inner folds for the grid search rotate
//! over the remaining common clips only.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{validate_cv_readiness, Dataset};
use crate::error::{Error, Result};
use crate::features::{EegBand, FeatureTable, Modality};
use crate::labeling::{self, Axis, BinaryLabels, ClusterModel, LabelScheme, Level};
use crate::seeds;
use crate::svm::{
    self, default_gamma, KernelKind, KernelSpec, Matrix, MinMaxScaler, Penalty, TrainParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kernels: Vec<KernelKind>,
    pub c: Vec<f64>,
    pub degree: Vec<u32>,
    pub coef0: Vec<f64>,
    pub penalty: Vec<Penalty>,
}

impl GridSpec {
    /// kernel ∈ {linear, poly, rbf, sigmoid}, C ∈ {1, 10, 100},
    /// degree ∈ {3, 4, 5}, coef0 ∈ {0, 0.01, 0.1}, penalty ∈ {L1, L2}.
    pub fn full() -> Self {
        GridSpec {
            kernels: KernelKind::ALL.to_vec(),
            c: vec![1.0, 10.0, 100.0],
            degree: vec![3, 4, 5],
            coef0: vec![0.0, 0.01, 0.1],
            penalty: vec![Penalty::L1, Penalty::L2],
        }
    }

    /// A single linear L2 point, for quick runs.
    pub fn single(kernel: KernelKind, c: f64) -> Self {
        GridSpec {
            kernels: vec![kernel],
            c: vec![c],
            degree: vec![3],
            coef0: vec![0.0],
            penalty: vec![Penalty::L2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty()
            || self.c.is_empty()
            || self.degree.is_empty()
            || self.coef0.is_empty()
            || self.penalty.is_empty()
        {
            return Err(Error::param("every grid axis needs at least one value"));
        }
        Ok(())
    }

    /// Canonical enumeration with unused axes pruned: kernels in the given
    /// order, then C, then degree (poly), coef0 (poly, sigmoid) and penalty
    /// (linear; other kernels always use L2).
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &kernel in &self.kernels {
            for &c in &self.c {
                let degrees: Vec<Option<u32>> = if kernel.uses_degree() {
                    self.degree.iter().map(|d| Some(*d)).collect()
                } else {
                    vec![None]
                };
                let coefs: Vec<Option<f64>> = if kernel.uses_coef0() {
                    self.coef0.iter().map(|c| Some(*c)).collect()
                } else {
                    vec![None]
                };
                let penalties: Vec<Penalty> = if kernel == KernelKind::Linear {
                    self.penalty.clone()
                } else {
                    vec![Penalty::L2]
                };
                for &degree in &degrees {
                    for &coef0 in &coefs {
                        for &penalty in &penalties {
                            out.push(GridPoint {
                                kernel,
                                c,
                                degree,
                                coef0,
                                penalty,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub kernel: KernelKind,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coef0: Option<f64>,
    pub penalty: Penalty,
}

impl GridPoint {
    /// Training parameters with gamma resolved from the (scaled) training rows.
    pub fn params(&self, train: &[Vec<f64>], seed: u64) -> TrainParams {
        let gamma = default_gamma(train);
        let kernel = match self.kernel {
            KernelKind::Linear => KernelSpec::linear(),
            KernelKind::Poly => {
                KernelSpec::poly(self.degree.unwrap_or(3), gamma, self.coef0.unwrap_or(0.0))
            }
            KernelKind::Rbf => KernelSpec::rbf(gamma),
            KernelKind::Sigmoid => KernelSpec::sigmoid(gamma, self.coef0.unwrap_or(0.0)),
        };
        TrainParams {
            seed,
            ..TrainParams::new(kernel, self.c, self.penalty)
        }
    }
}

/// Rows for cross-validation: features, ±1 targets and the clip of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CvData {
    pub x: Matrix,
    pub y: Vec<i8>,
    pub clips: Vec<String>,
    pub participants: Vec<String>,
    /// Clips seen by every participant; these define the folds.
    pub common_clips: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_clip: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per common clip. Depends only on clip ids.
pub fn folds_for(clips: &[String], common: &[String]) -> Vec<Fold> {
    common
        .iter()
        .map(|c| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..clips.len()).partition(|&i| &clips[i] == c);
            Fold {
                test_clip: c.clone(),
                train,
                test,
            }
        })
        .collect()
}

/// Leave-one-clip-out folds over the dataset's common clips, indexing
/// `ds.trials()`.
pub fn loco_folds(ds: &Dataset) -> Result<Vec<Fold>> {
    let common = validate_cv_readiness(ds)?;
    let clips: Vec<String> = ds.trials().iter().map(|t| t.clip_id.clone()).collect();
    Ok(folds_for(&clips, &common))
}

fn rows(x: &[Vec<f64>], idx: &[usize]) -> Matrix {
    idx.iter().map(|&i| x[i].clone()).collect()
}

fn targets(y: &[i8], idx: &[usize]) -> Vec<i8> {
    idx.iter().map(|&i| y[i]).collect()
}

fn single_class(y: &[i8]) -> Option<i8> {
    let first = *y.first()?;
    y.iter().all(|v| *v == first).then_some(first)
}

/// Fits a scaler on `train`, trains, and predicts `test`. A single-class
/// training set predicts that class for every test row.
fn fit_predict(
    x: &[Vec<f64>],
    y: &[i8],
    train: &[usize],
    test: &[usize],
    point: &GridPoint,
    seed: u64,
) -> Result<(Vec<i8>, Option<svm::SVMModel>)> {
    let ytr = targets(y, train);
    if let Some(only) = single_class(&ytr) {
        return Ok((vec![only; test.len()], None));
    }
    let scaler = MinMaxScaler::fit(&rows(x, train))?;
    let xtr = scaler.transform(&rows(x, train))?;
    let xte = scaler.transform(&rows(x, test))?;
    let mut model = svm::svm_train(&xtr, &ytr, &point.params(&xtr, seed))?;
    let (pred, _) = model.predict(&xte)?;
    model.scaler = Some(scaler);
    Ok((pred, Some(model)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridChoice {
    pub point: GridPoint,
    pub index: usize,
    /// Mean inner-fold F1; `None` when the grid has one point.
    pub score: Option<f64>,
    pub warnings: Vec<String>,
}

/// Inner leave-one-clip-out over the common clips inside `train`; each
/// point is scored by mean F1 and the first best point in enumeration order
/// wins. Inner training sets contain only the other common clips.
pub fn grid_search(
    data: &CvData,
    train: &[usize],
    grid: &[GridPoint],
    seed: u64,
) -> Result<GridChoice> {
    if grid.is_empty() {
        return Err(Error::param("empty hyperparameter grid"));
    }
    if grid.len() == 1 {
        return Ok(GridChoice {
            point: grid[0],
            index: 0,
            score: None,
            warnings: Vec::new(),
        });
    }
    let train_set: BTreeSet<usize> = train.iter().copied().collect();
    let inner_clips: Vec<&String> = data
        .common_clips
        .iter()
        .filter(|c| train.iter().any(|&i| &data.clips[i] == *c))
        .collect();
    if inner_clips.len() < 2 {
        return Err(Error::param(
            "grid search needs at least two common clips in the training set",
        ));
    }
    let inner: Vec<(Vec<usize>, Vec<usize>)> = inner_clips
        .iter()
        .map(|c| {
            let test: Vec<usize> = train_set
                .iter()
                .copied()
                .filter(|&i| &data.clips[i] == *c)
                .collect();
            let tr: Vec<usize> = train_set
                .iter()
                .copied()
                .filter(|&i| &data.clips[i] != *c && inner_clips.contains(&&data.clips[i]))
                .collect();
            (tr, test)
        })
        .collect();
    let scored: Vec<(f64, Vec<String>)> = grid
        .par_iter()
        .enumerate()
        .map(|(g, point)| {
            let mut total = 0.0;
            for (f, (tr, te)) in inner.iter().enumerate() {
                if single_class(&targets(&data.y, tr)).is_some() {
                    let msg = format!(
                        "grid point {g}: inner fold {f} has single-class training data; scored 0"
                    );
                    return Ok((0.0, vec![msg]));
                }
                let (pred, _) = fit_predict(
                    &data.x,
                    &data.y,
                    tr,
                    te,
                    point,
                    seeds::derive(seed, &[g as u64, f as u64]),
                )?;
                total += svm::metrics(&targets(&data.y, te), &pred)?.f1;
            }
            Ok((total / inner.len() as f64, Vec::new()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut index = 0;
    for (g, (s, _)) in scored.iter().enumerate() {
        if *s > scored[index].0 {
            index = g;
        }
    }
    let mut warnings: Vec<String> = scored.iter().flat_map(|(_, w)| w.clone()).collect();
    warnings.truncate(20);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(GridChoice {
        point: grid[index],
        index,
        score: Some(scored[index].0),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub held_out_clip: String,
    pub chosen: GridPoint,
    pub inner_f1: Option<f64>,
    pub test_accuracy: f64,
    pub test_f1: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// (participant, true, predicted) per test row.
    pub predictions: Vec<(String, i8, i8)>,
    /// Fitted on the fold's training rows; absent when training was single-class.
    pub scaler: Option<MinMaxScaler>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub target: Axis,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    pub class_ratio: String,
    pub n_features: usize,
    pub warnings: Vec<String>,
    /// Which rows the inner folds train on.
    pub inner_training: String,
}

/// Nested leave-one-clip-out CV on prepared rows.
pub fn cross_validate(data: &CvData, target: Axis, grid: &GridSpec, seed: u64) -> Result<CVReport> {
    grid.validate()?;
    if data.x.len() != data.y.len() || data.x.len() != data.clips.len() {
        return Err(Error::param("rows, targets and clip ids differ in length"));
    }
    if single_class(&data.y).is_some() {
        return Err(Error::param(format!(
            "{target} labels contain a single class; nothing to classify"
        )));
    }
    let points = grid.points();
    let folds = folds_for(&data.clips, &data.common_clips);
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let fold_seed = seeds::derive(seed, &[f as u64]);
            let mut warnings = Vec::new();
            let choice = if single_class(&targets(&data.y, &fold.train)).is_some() {
                warnings.push(format!(
                    "fold {}: single-class training data; predicting that class",
                    fold.test_clip
                ));
                GridChoice {
                    point: points[0],
                    index: 0,
                    score: None,
                    warnings: Vec::new(),
                }
            } else {
                grid_search(
                    data,
                    &fold.train,
                    &points,
                    seeds::derive_named(fold_seed, "grid"),
                )?
            };
            warnings.extend(choice.warnings.iter().cloned());
            let (pred, model) = fit_predict(
                &data.x,
                &data.y,
                &fold.train,
                &fold.test,
                &choice.point,
                seeds::derive_named(fold_seed, "final"),
            )?;
            let truth = targets(&data.y, &fold.test);
            let m = svm::metrics(&truth, &pred)?;
            Ok((
                FoldResult {
                    held_out_clip: fold.test_clip.clone(),
                    chosen: choice.point,
                    inner_f1: choice.score,
                    test_accuracy: m.accuracy,
                    test_f1: m.f1,
                    n_train: fold.train.len(),
                    n_test: fold.test.len(),
                    predictions: fold
                        .test
                        .iter()
                        .zip(truth.iter().zip(&pred))
                        .map(|(&i, (&t, &p))| (data.participants[i].clone(), t, p))
                        .collect(),
                    scaler: model.and_then(|m| m.scaler),
                },
                warnings,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = results.len() as f64;
    let low = data.y.iter().filter(|v| **v == -1).count();
    let high = data.y.len() - low;
    Ok(CVReport {
        target,
        mean_accuracy: results.iter().map(|(r, _)| r.test_accuracy).sum::<f64>() / n,
        mean_f1: results.iter().map(|(r, _)| r.test_f1).sum::<f64>() / n,
        class_ratio: format!("{:.2}:1", low as f64 / high as f64),
        n_features: data.x.first().map_or(0, |r| r.len()),
        warnings: results.iter().flat_map(|(_, w)| w.clone()).collect(),
        folds: results.into_iter().map(|(r, _)| r).collect(),
        inner_training: "common clips only".to_string(),
    })
}

/// Grid search over all rows, then one model trained on every row with the
/// chosen point. The returned model carries its scaler.
pub fn train_final(
    data: &CvData,
    grid: &GridSpec,
    seed: u64,
) -> Result<(GridChoice, svm::SVMModel)> {
    grid.validate()?;
    if single_class(&data.y).is_some() {
        return Err(Error::param(
            "labels contain a single class; nothing to train",
        ));
    }
    let all: Vec<usize> = (0..data.x.len()).collect();
    let choice = grid_search(
        data,
        &all,
        &grid.points(),
        seeds::derive_named(seed, "grid"),
    )?;
    let (_, model) = fit_predict(
        &data.x,
        &data.y,
        &all,
        &[],
        &choice.point,
        seeds::derive_named(seed, "final"),
    )?;
    let model = model.ok_or_else(|| Error::numerical("final model could not be trained"))?;
    Ok((choice, model))
}

/// Ground-truth labels for every trial, in dataset order. `threshold` only
/// matters for the threshold scheme.
pub fn make_labels(
    ds: &Dataset,
    scheme: LabelScheme,
    threshold: f64,
    seed: u64,
) -> Result<(BinaryLabels, Option<ClusterModel>)> {
    let va: Vec<(f64, f64)> = ds
        .trials()
        .iter()
        .map(|t| (t.assessment.valence, t.assessment.arousal))
        .collect();
    match scheme {
        LabelScheme::Threshold => Ok((labeling::label_by_threshold(&va, threshold), None)),
        LabelScheme::KmeansQuadrant => {
            let (l, m) = labeling::label_by_quadrant(&va, seeds::derive_named(seed, "quadrant"))?;
            Ok((l, Some(m)))
        }
    }
}

/// Which feature columns a run uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureView {
    pub modality: Modality,
    pub channels: Vec<String>,
    pub bands: Vec<EegBand>,
}

impl FeatureView {
    pub fn full(modality: Modality) -> Self {
        FeatureView {
            modality,
            channels: crate::features::montage(),
            bands: EegBand::ALL.to_vec(),
        }
    }
}

/// Builds CV rows from a feature table aligned with `ds.trials()`.
pub fn cv_data(
    ds: &Dataset,
    table: &FeatureTable,
    view: &FeatureView,
    labels: &BinaryLabels,
    target: Axis,
) -> Result<CvData> {
    if table.rows.len() != ds.len() || labels.len() != ds.len() {
        return Err(Error::param(
            "feature table, labels and dataset differ in length",
        ));
    }
    let sub = table.view(view.modality, &view.channels, &view.bands)?;
    Ok(CvData {
        x: sub.rows,
        y: labels
            .axis(target)
            .iter()
            .map(|l| if *l == Level::High { 1 } else { -1 })
            .collect(),
        clips: ds.trials().iter().map(|t| t.clip_id.clone()).collect(),
        participants: ds
            .trials()
            .iter()
            .map(|t| t.participant_id.clone())
            .collect(),
        common_clips: validate_cv_readiness(ds)?,
    })
}

pub fn run_cv(
    ds: &Dataset,
    table: &FeatureTable,
    view: &FeatureView,
    labels: &BinaryLabels,
    target: Axis,
    grid: &GridSpec,
    seed: u64,
) -> Result<CVReport> {
    let data = cv_data(ds, table, view, labels, target)?;
    cross_validate(&data, target, grid, seed)
}

/// The nine channel sets compared in the channel study.
pub fn channel_sets() -> Vec<Vec<String>> {
    [
        &["Fp1", "Fp2", "Fz"][..],
        &["Fp1", "Fp2", "Cz"],
        &["Fp1", "Fp2", "Pz"],
        &["Fp1", "Fp2", "Oz"],
        &["T3", "T4", "Fz"],
        &["T3", "T4", "Cz"],
        &["T3", "T4", "Pz"],
        &["T3", "T4", "Oz"],
        &["Fz", "Cz", "Pz", "Oz"],
    ]
    .iter()
    .map(|s| s.iter().map(|c| c.to_string()).collect())
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub name: String,
    pub view: FeatureView,
    pub report: CVReport,
}

/// EEG-only CV restricted to each of the nine channel sets, all bands.
pub fn channel_study(
    ds: &Dataset,
    table: &FeatureTable,
    labels: &BinaryLabels,
    target: Axis,
    grid: &GridSpec,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    channel_sets()
        .into_iter()
        .map(|channels| {
            let view = FeatureView {
                modality: Modality::Eeg,
                channels,
                bands: EegBand::ALL.to_vec(),
            };
            let report = run_cv(ds, table, &view, labels, target, grid, seed)?;
            Ok(StudyRow {
                name: view.channels.join(","),
                view,
                report,
            })
        })
        .collect()
}

/// EEG-only CV on each band separately, all eight channels.
pub fn band_study(
    ds: &Dataset,
    table: &FeatureTable,
    labels: &BinaryLabels,
    target: Axis,
    grid: &GridSpec,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    EegBand::ALL
        .iter()
        .map(|&band| {
            let view = FeatureView {
                modality: Modality::Eeg,
                channels: crate::features::montage(),
                bands: vec![band],
            };
            let report = run_cv(ds, table, &view, labels, target, grid, seed)?;
            Ok(StudyRow {
                name: band.to_string(),
                view,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_grid_has_45_points_in_canonical_order() {
        let pts = GridSpec::full().points();
        assert_eq!(pts.len(), 6 + 27 + 3 + 9);
        assert_eq!(pts[0].kernel, KernelKind::Linear);
        assert_eq!(pts[0].penalty, Penalty::L1);
        assert_eq!(pts[1].penalty, Penalty::L2);
        assert!(pts
            .iter()
            .filter(|p| p.kernel != KernelKind::Linear)
            .all(|p| p.penalty == Penalty::L2));
        assert!(pts
            .iter()
            .filter(|p| p.kernel == KernelKind::Rbf)
            .all(|p| p.degree.is_none() && p.coef0.is_none()));
        for (i, a) in pts.iter().enumerate() {
            assert!(pts[i + 1..].iter().all(|b| b != a));
        }
    }

    fn clip_rows(n_clips: usize, per_clip: usize, common: usize) -> (Vec<String>, Vec<String>) {
        let clips: Vec<String> = (0..n_clips * per_clip)
            .map(|i| format!("C{}", i / per_clip))
            .collect();
        let common: Vec<String> = (0..common).map(|c| format!("C{c}")).collect();
        (clips, common)
    }

    #[test]
    fn folds_partition_common_trials() {
        let (clips, common) = clip_rows(6, 4, 4);
        let folds = folds_for(&clips, &common);
        assert_eq!(folds.len(), 4);
        let mut seen = BTreeSet::new();
        for f in &folds {
            assert_eq!(f.test.len(), 4);
            assert_eq!(f.train.len() + f.test.len(), clips.len());
            for i in &f.test {
                assert!(seen.insert(*i));
                assert!(!f.train.contains(i));
            }
        }
        assert_eq!(seen.len(), 16);
    }

    /// Concentric rings: inner disc class −1, outer ring class +1.
    fn rings(seed: u64) -> CvData {
        let (clips, common) = clip_rows(5, 24, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..clips.len() {
            let outer = i % 2 == 0;
            let r = if outer {
                rng.random_range(2.0..2.5)
            } else {
                rng.random_range(0.0..0.8)
            };
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            x.push(vec![r * th.cos(), r * th.sin()]);
            y.push(if outer { 1 } else { -1 });
        }
        CvData {
            participants: (0..clips.len()).map(|i| format!("P{}", i % 24)).collect(),
            x,
            y,
            clips,
            common_clips: common,
        }
    }

    #[test]
    fn rings_choose_rbf() {
        let data = rings(1);
        let grid = GridSpec {
            kernels: vec![KernelKind::Linear, KernelKind::Rbf],
            c: vec![1.0, 10.0],
            degree: vec![3],
            coef0: vec![0.0],
            penalty: vec![Penalty::L2],
        };
        let train: Vec<usize> = (0..data.x.len()).collect();
        let choice = grid_search(&data, &train, &grid.points(), 0).unwrap();
        assert_eq!(choice.point.kernel, KernelKind::Rbf);
        let one = GridSpec::single(KernelKind::Sigmoid, 3.0).points();
        assert_eq!(grid_search(&data, &train, &one, 0).unwrap().point, one[0]);
    }

    #[test]
    fn report_means_and_leakage() {
        let data = rings(2);
        let grid = GridSpec {
            kernels: vec![KernelKind::Rbf],
            c: vec![1.0, 10.0],
            degree: vec![3],
            coef0: vec![0.0],
            penalty: vec![Penalty::L2],
        };
        let r = cross_validate(&data, Axis::Valence, &grid, 5).unwrap();
        assert_eq!(r.folds.len(), 5);
        let acc = r.folds.iter().map(|f| f.test_accuracy).sum::<f64>() / 5.0;
        assert!((acc - r.mean_accuracy).abs() < 1e-12);
        assert!(r.mean_accuracy >= 0.95);
        assert_eq!(r.class_ratio, "1.00:1");
        // perturbing held-out rows leaves that fold's choice unchanged
        let fold = &folds_for(&data.clips, &data.common_clips)[0];
        let mut probe = data.clone();
        for &i in &fold.test {
            probe.x[i] = vec![1e3, -1e3];
        }
        let points = grid.points();
        let a = grid_search(&data, &fold.train, &points, 9).unwrap();
        let b = grid_search(&probe, &fold.train, &points, 9).unwrap();
        assert_eq!(a, b);
        let again = cross_validate(&data, Axis::Valence, &grid, 5).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn single_class_labels_are_rejected() {
        let mut data = rings(3);
        data.y.iter_mut().for_each(|v| *v = 1);
        assert!(cross_validate(&data, Axis::Arousal, &GridSpec::full(), 0).is_err());
    }

    #[test]
    fn nine_channel_sets() {
        let sets = channel_sets();
        assert_eq!(sets.len(), 9);
        let montage = crate::features::montage();
        assert!(sets.iter().flatten().all(|c| montage.contains(c)));
    }
}
