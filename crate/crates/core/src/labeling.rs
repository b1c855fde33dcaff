//! Clustering (k-means, full-covariance GMM), cluster validation
//! (Davies-Bouldin, elbow), stimulus selection from self-assessments, and the
//! two ground-truth labeling schemes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    Kmeans,
    Gmm,
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(ClusterMethod::Kmeans),
            "gmm" => Ok(ClusterMethod::Gmm),
            other => Err(Error::param(format!("unknown clustering method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub method: ClusterMethod,
    pub k: usize,
    pub centroids: Vec<Point>,
    /// GMM only.
    pub covariances: Option<Vec<Vec<Vec<f64>>>>,
    /// GMM only; sums to 1.
    pub weights: Option<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// GMM only: final log-likelihood and its per-iteration history.
    pub log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub log_likelihood_trace: Vec<f64>,
    /// Number of empty-cluster reseeds performed in the winning k-means run.
    pub empty_repairs: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points(points: &[Point]) -> Result<usize> {
    let d = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::param("no points to cluster"))?;
    if d == 0 {
        return Err(Error::param("points have zero dimensions"));
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::param("points have inconsistent dimensions"));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("points contain non-finite values"));
    }
    Ok(d)
}

fn centroid_of(points: &[Point], members: impl Iterator<Item = usize>, d: usize) -> (Point, usize) {
    let mut c = vec![0.0; d];
    let mut n = 0;
    for i in members {
        for (cj, x) in c.iter_mut().zip(&points[i]) {
            *cj += x;
        }
        n += 1;
    }
    if n > 0 {
        c.iter_mut().for_each(|v| *v /= n as f64);
    }
    (c, n)
}

fn inertia(points: &[Point], centroids: &[Point], assign: &[usize]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

fn kmeans_pp_init(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if r < *w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[next].clone();
        for (di, p) in d2.iter_mut().zip(points) {
            *di = di.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Nearest centroid; ties keep the current cluster if it is among the
/// nearest, otherwise the lowest index.
fn nearest(p: &[f64], centroids: &[Point], current: Option<usize>) -> usize {
    let dists: Vec<f64> = centroids.iter().map(|c| sq_dist(p, c)).collect();
    let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
    match current {
        Some(c) if dists[c] <= best => c,
        _ => dists.iter().position(|d| *d <= best).unwrap_or(0),
    }
}

struct KmeansRun {
    centroids: Vec<Point>,
    assign: Vec<usize>,
    inertia: f64,
    repairs: usize,
}

const KMEANS_MAX_ITER: usize = 300;

fn kmeans_single(points: &[Point], k: usize, d: usize, seed: u64) -> KmeansRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(points, k, &mut rng);
    let mut assign: Vec<usize> = points
        .iter()
        .map(|p| nearest(p, &centroids, None))
        .collect();
    let mut repairs = 0;
    for _ in 0..KMEANS_MAX_ITER {
        // update, repairing empty clusters with the worst-fitted point
        for j in 0..k {
            let (c, n) = centroid_of(points, (0..points.len()).filter(|&i| assign[i] == j), d);
            if n > 0 {
                centroids[j] = c;
            }
        }
        for j in 0..k {
            if assign.contains(&j) {
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| assign.iter().filter(|&&a| a == assign[i]).count() > 1)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centroids[assign[a]])
                        .total_cmp(&sq_dist(&points[b], &centroids[assign[b]]))
                        .then(b.cmp(&a))
                });
            if let Some(i) = far {
                let old = assign[i];
                assign[i] = j;
                centroids[j] = points[i].clone();
                let (c, _) =
                    centroid_of(points, (0..points.len()).filter(|&m| assign[m] == old), d);
                centroids[old] = c;
                repairs += 1;
            }
        }
        let next: Vec<usize> = points
            .iter()
            .zip(&assign)
            .map(|(p, &a)| nearest(p, &centroids, Some(a)))
            .collect();
        if next == assign {
            if !hartigan_pass(points, &mut centroids, &mut assign, d) {
                break;
            }
        } else {
            assign = next;
        }
    }
    let inertia = inertia(points, &centroids, &assign);
    KmeansRun {
        centroids,
        assign,
        inertia,
        repairs,
    }
}

/// One sweep of Hartigan single-point moves: move a point when the exact
/// change in total SSE is negative. Returns whether anything moved.
fn hartigan_pass(
    points: &[Point],
    centroids: &mut [Point],
    assign: &mut [usize],
    d: usize,
) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assign.iter() {
        sizes[a] += 1;
    }
    let mut moved = false;
    for i in 0..points.len() {
        let a = assign[i];
        if sizes[a] <= 1 {
            continue;
        }
        let na = sizes[a] as f64;
        let remove_gain = na / (na - 1.0) * sq_dist(&points[i], &centroids[a]);
        let mut best: Option<(usize, f64)> = None;
        for b in (0..k).filter(|&b| b != a) {
            let nb = sizes[b] as f64;
            let add_cost = nb / (nb + 1.0) * sq_dist(&points[i], &centroids[b]);
            let delta = add_cost - remove_gain;
            if delta < -1e-12 * remove_gain.max(1e-300) && best.is_none_or(|(_, bd)| delta < bd) {
                best = Some((b, delta));
            }
        }
        if let Some((b, _)) = best {
            assign[i] = b;
            sizes[a] -= 1;
            sizes[b] += 1;
            for j in [a, b] {
                centroids[j] =
                    centroid_of(points, (0..points.len()).filter(|&m| assign[m] == j), d).0;
            }
            moved = true;
        }
    }
    moved
}

/// Lloyd k-means with k-means++ seeding, best inertia over `restarts` runs.
/// Each restart draws its own derived seed, so the result depends only on
/// `seed`.
pub fn kmeans_fit(points: &[Point], k: usize, seed: u64, restarts: usize) -> Result<ClusterModel> {
    let d = check_points(points)?;
    if k == 0 || k > points.len() {
        return Err(Error::param(format!(
            "k = {k} must be between 1 and the number of points ({})",
            points.len()
        )));
    }
    let best = (0..restarts.max(1))
        .map(|r| kmeans_single(points, k, d, seeds::derive(seed, &[r as u64])))
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(ClusterModel {
        method: ClusterMethod::Kmeans,
        k,
        centroids: best.centroids,
        covariances: None,
        weights: None,
        assignments: best.assign,
        inertia: best.inertia,
        log_likelihood: None,
        log_likelihood_trace: Vec::new(),
        empty_repairs: best.repairs,
    })
}

pub const KMEANS_RESTARTS: usize = 10;
pub const GMM_REG: f64 = 1e-6;

/// Per-component Gaussian log densities via Cholesky.
fn log_densities(
    points: &[Point],
    means: &[DVector<f64>],
    covs: &[DMatrix<f64>],
) -> Result<Vec<Vec<f64>>> {
    let d = means[0].len() as f64;
    let mut out = vec![Vec::with_capacity(means.len()); points.len()];
    for (mean, cov) in means.iter().zip(covs) {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("GMM covariance is singular despite regularization"))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let norm = -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det);
        for (row, p) in out.iter_mut().zip(points) {
            let diff = DVector::from_column_slice(p) - mean;
            let z = l
                .solve_lower_triangular(&diff)
                .ok_or_else(|| Error::numerical("GMM covariance is singular"))?;
            row.push(norm - 0.5 * z.norm_squared());
        }
    }
    Ok(out)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// EM for a full-covariance Gaussian mixture, initialized from k-means.
/// `reg` is added to every covariance diagonal at each M-step, so the
/// sequence being maximized is the correspondingly penalized likelihood.
pub fn gmm_fit(
    points: &[Point],
    k: usize,
    seed: u64,
    max_iter: usize,
    reg: f64,
) -> Result<ClusterModel> {
    let d = check_points(points)?;
    if reg <= 0.0 {
        return Err(Error::param("GMM regularization must be positive"));
    }
    let init = kmeans_fit(
        points,
        k,
        seeds::derive_named(seed, "gmm-init"),
        KMEANS_RESTARTS,
    )?;
    let n = points.len();
    let mut resp = vec![vec![0.0; k]; n];
    for (r, &a) in resp.iter_mut().zip(&init.assignments) {
        r[a] = 1.0;
    }
    let mut trace = Vec::new();
    let mut params;
    let mut iter = 0;
    loop {
        // M-step
        let mut weights = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        let mut covs = Vec::with_capacity(k);
        for j in 0..k {
            let nk: f64 = resp.iter().map(|r| r[j]).sum::<f64>().max(1e-300);
            let mut mu = DVector::zeros(d);
            for (r, p) in resp.iter().zip(points) {
                mu += DVector::from_column_slice(p) * r[j];
            }
            mu /= nk;
            let mut cov = DMatrix::identity(d, d) * reg;
            for (r, p) in resp.iter().zip(points) {
                let diff = DVector::from_column_slice(p) - &mu;
                cov += &diff * diff.transpose() * (r[j] / nk);
            }
            weights.push(nk / n as f64);
            means.push(mu);
            covs.push(cov);
        }
        // E-step
        let dens = log_densities(points, &means, &covs)?;
        let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let mut ll = 0.0;
        for (r, row) in resp.iter_mut().zip(&dens) {
            let joint: Vec<f64> = row.iter().zip(&log_w).map(|(a, b)| a + b).collect();
            let lse = log_sum_exp(&joint);
            ll += lse;
            for (rj, j) in r.iter_mut().zip(&joint) {
                *rj = (j - lse).exp();
            }
        }
        let prev = trace.last().copied();
        trace.push(ll);
        params = (weights, means, covs);
        iter += 1;
        let converged = prev.is_some_and(|p: f64| (ll - p).abs() <= 1e-10 * ll.abs().max(1.0));
        if converged || iter >= max_iter.max(1) {
            break;
        }
    }
    let (weights, means, covs) = params;
    let assignments: Vec<usize> = resp
        .iter()
        .map(|r| {
            (0..k)
                .max_by(|&a, &b| r[a].total_cmp(&r[b]).then(b.cmp(&a)))
                .unwrap_or(0)
        })
        .collect();
    let centroids: Vec<Point> = means.iter().map(|m| m.iter().copied().collect()).collect();
    let inertia = inertia(points, &centroids, &assignments);
    Ok(ClusterModel {
        method: ClusterMethod::Gmm,
        k,
        covariances: Some(
            covs.iter()
                .map(|c| {
                    (0..d)
                        .map(|i| (0..d).map(|j| c[(i, j)]).collect())
                        .collect()
                })
                .collect(),
        ),
        weights: Some(weights),
        centroids,
        assignments,
        inertia,
        log_likelihood: trace.last().copied(),
        log_likelihood_trace: trace,
        empty_repairs: 0,
    })
}

/// DB = (1/k)·Σᵢ maxⱼ≠ᵢ (σᵢ+σⱼ)/d(cᵢ,cⱼ) with σ the mean member-to-centroid
/// distance. Cluster indices need not be contiguous.
pub fn davies_bouldin(points: &[Point], assignments: &[usize]) -> Result<f64> {
    let d = check_points(points)?;
    if assignments.len() != points.len() {
        return Err(Error::param("assignment count differs from point count"));
    }
    let labels: std::collections::BTreeSet<usize> = assignments.iter().copied().collect();
    if labels.len() < 2 {
        return Err(Error::param(
            "Davies-Bouldin needs at least two non-empty clusters",
        ));
    }
    let stats: Vec<(Point, f64)> = labels
        .iter()
        .map(|&l| {
            let members: Vec<usize> = (0..points.len()).filter(|&i| assignments[i] == l).collect();
            let (c, n) = centroid_of(points, members.iter().copied(), d);
            let s = members
                .iter()
                .map(|&i| sq_dist(&points[i], &c).sqrt())
                .sum::<f64>()
                / n as f64;
            (c, s)
        })
        .collect();
    let k = stats.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in (0..k).filter(|&j| j != i) {
            let sep = sq_dist(&stats[i].0, &stats[j].0).sqrt();
            let scatter = stats[i].1 + stats[j].1;
            let r = if sep > 0.0 {
                scatter / sep
            } else if scatter == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Argmin of the DB scores; ties go to the smaller k.
pub fn select_k_by_db(scores: &BTreeMap<usize, f64>) -> Option<usize> {
    scores
        .iter()
        .fold(None, |best: Option<(usize, f64)>, (&k, &v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}

/// Knee of an SSE curve. Among interior k with a positive second difference,
/// picks the one whose incoming drop is largest relative to its outgoing drop
/// (ties to the smaller k). `None` when the curve is affine or has fewer than
/// three consecutive k values.
pub fn elbow_knee(sse: &BTreeMap<usize, f64>) -> Option<usize> {
    let scale = sse.values().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let eps = 1e-9 * scale;
    let mut best: Option<(usize, f64)> = None;
    for (&k, &s) in sse {
        let (Some(&prev), Some(&next)) = (sse.get(&(k.wrapping_sub(1))), sse.get(&(k + 1))) else {
            continue;
        };
        if k == 0 || prev - 2.0 * s + next <= eps {
            continue;
        }
        let out_drop = s - next;
        let ratio = if out_drop > eps {
            (prev - s) / out_drop
        } else {
            f64::INFINITY
        };
        if best.is_none_or(|(_, b)| ratio > b) {
            best = Some((k, ratio));
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepEntry {
    pub k: usize,
    pub db: Option<f64>,
    pub sse: f64,
}

/// Fits every k in `ks` and records DB index (None for k = 1) and SSE.
pub fn cluster_sweep(
    points: &[Point],
    ks: &[usize],
    method: ClusterMethod,
    seed: u64,
) -> Result<Vec<KSweepEntry>> {
    ks.iter()
        .map(|&k| {
            let sub = seeds::derive(seed, &[k as u64]);
            let m = match method {
                ClusterMethod::Kmeans => kmeans_fit(points, k, sub, KMEANS_RESTARTS)?,
                ClusterMethod::Gmm => gmm_fit(points, k, sub, 200, GMM_REG)?,
            };
            let db = if k >= 2 {
                davies_bouldin(points, &m.assignments).ok()
            } else {
                None
            };
            Ok(KSweepEntry {
                k,
                db,
                sse: m.inertia,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedPoint {
    pub clip_id: String,
    pub happiness: f64,
    pub fear: f64,
    pub excitement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedClip {
    pub clip_id: String,
    pub distance: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRanking {
    /// Per cluster, clips by ascending centroid distance.
    pub clusters: Vec<Vec<RankedClip>>,
    pub selected: Vec<String>,
    pub model: ClusterModel,
    /// Rater points dropped by the majority-cluster filter.
    pub dropped_points: usize,
    pub warnings: Vec<String>,
}

/// Stimulus selection: cluster raw (H, F, E) ratings, keep each clip's
/// majority-cluster ratings, average them into one representative per clip,
/// and keep the `per_cluster` clips nearest each centroid.
pub fn select_stimuli(
    ratings: &[RatedPoint],
    k: usize,
    per_cluster: usize,
    seed: u64,
) -> Result<StimulusRanking> {
    let points: Vec<Point> = ratings
        .iter()
        .map(|r| vec![r.happiness, r.fear, r.excitement])
        .collect();
    let model = kmeans_fit(&points, k, seed, KMEANS_RESTARTS)?;
    let mut by_clip: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in ratings.iter().enumerate() {
        by_clip.entry(r.clip_id.as_str()).or_default().push(i);
    }
    let mut clusters: Vec<Vec<RankedClip>> = vec![Vec::new(); k];
    let mut dropped = 0;
    for (clip, idx) in &by_clip {
        let mut counts = vec![0usize; k];
        for &i in idx {
            counts[model.assignments[i]] += 1;
        }
        let top = *counts.iter().max().expect("k >= 1");
        let tied: Vec<usize> = (0..k).filter(|&c| counts[c] == top).collect();
        // mode tie: the cluster holding the clip's point nearest any centroid
        let modal = if tied.len() == 1 {
            tied[0]
        } else {
            idx.iter()
                .filter(|&&i| tied.contains(&model.assignments[i]))
                .min_by(|&&a, &&b| {
                    let da = sq_dist(&points[a], &model.centroids[model.assignments[a]]);
                    let db = sq_dist(&points[b], &model.centroids[model.assignments[b]]);
                    da.total_cmp(&db)
                        .then(model.assignments[a].cmp(&model.assignments[b]))
                })
                .map(|&i| model.assignments[i])
                .expect("tied cluster has members")
        };
        let keep: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| model.assignments[i] == modal)
            .collect();
        dropped += idx.len() - keep.len();
        let (rep, _) = centroid_of(&points, keep.into_iter(), 3);
        clusters[modal].push(RankedClip {
            clip_id: clip.to_string(),
            distance: sq_dist(&rep, &model.centroids[modal]).sqrt(),
            selected: false,
        });
    }
    let mut warnings = Vec::new();
    let mut selected = Vec::new();
    for (c, list) in clusters.iter_mut().enumerate() {
        list.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.clip_id.cmp(&b.clip_id))
        });
        if list.len() < per_cluster {
            let msg = format!(
                "cluster {c} has only {} clips (< {per_cluster}); keeping all",
                list.len()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        for item in list.iter_mut().take(per_cluster) {
            item.selected = true;
            selected.push(item.clip_id.clone());
        }
    }
    Ok(StimulusRanking {
        clusters,
        selected,
        model,
        dropped_points: dropped,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    High,
}

impl Level {
    pub fn class(self) -> usize {
        match self {
            Level::Low => 0,
            Level::High => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelScheme {
    Threshold,
    KmeansQuadrant,
}

impl FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "threshold" => Ok(LabelScheme::Threshold),
            "kmeans" | "kmeans-quadrant" | "quadrant" => Ok(LabelScheme::KmeansQuadrant),
            other => Err(Error::param(format!("unknown labeling scheme {other:?}"))),
        }
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelScheme::Threshold => "threshold",
            LabelScheme::KmeansQuadrant => "kmeans-quadrant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Valence,
    Arousal,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "valence" | "v" => Ok(Axis::Valence),
            "arousal" | "a" => Ok(Axis::Arousal),
            other => Err(Error::param(format!("unknown axis {other:?}"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Valence => "valence",
            Axis::Arousal => "arousal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLabels {
    pub valence: Vec<Level>,
    pub arousal: Vec<Level>,
    pub provenance: LabelScheme,
}

impl BinaryLabels {
    pub fn axis(&self, axis: Axis) -> &[Level] {
        match axis {
            Axis::Valence => &self.valence,
            Axis::Arousal => &self.arousal,
        }
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }

    /// (low count, high count) for the axis.
    pub fn counts(&self, axis: Axis) -> (usize, usize) {
        let high = self
            .axis(axis)
            .iter()
            .filter(|l| **l == Level::High)
            .count();
        (self.len() - high, high)
    }

    /// "low/high:1" with two decimals, e.g. "1.50:1".
    pub fn class_ratio(&self, axis: Axis) -> String {
        let (low, high) = self.counts(axis);
        if high == 0 {
            "inf:1".to_string()
        } else {
            format!("{:.2}:1", low as f64 / high as f64)
        }
    }
}

pub const DEFAULT_THRESHOLD: f64 = 4.5;

/// Score < threshold → low, score ≥ threshold → high.
pub fn label_by_threshold(va: &[(f64, f64)], threshold: f64) -> BinaryLabels {
    let level = |s: f64| {
        if s < threshold {
            Level::Low
        } else {
            Level::High
        }
    };
    BinaryLabels {
        valence: va.iter().map(|&(v, _)| level(v)).collect(),
        arousal: va.iter().map(|&(_, a)| level(a)).collect(),
        provenance: LabelScheme::Threshold,
    }
}

/// Marks the two clusters with the largest coordinate as high. `None` when
/// the 2nd and 3rd largest tie, leaving the split ambiguous.
fn top_two(values: &[f64]) -> Option<[bool; 4]> {
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    if values[order[1]] <= values[order[2]] {
        return None;
    }
    let mut high = [false; 4];
    high[order[0]] = true;
    high[order[1]] = true;
    Some(high)
}

/// k = 4 k-means on (V, A). The two clusters with the largest centroid
/// arousal are high-arousal, likewise for valence; the four clusters must
/// land in four distinct quadrants.
pub fn label_by_quadrant(va: &[(f64, f64)], seed: u64) -> Result<(BinaryLabels, ClusterModel)> {
    if va.len() < 4 {
        return Err(Error::param("quadrant labeling needs at least 4 samples"));
    }
    let points: Vec<Point> = va.iter().map(|&(v, a)| vec![v, a]).collect();
    let model = kmeans_fit(&points, 4, seed, KMEANS_RESTARTS)?;
    let degenerate = || {
        Error::numerical(
            "k-means quadrant mapping is not one-to-one for this data; use threshold labeling instead",
        )
    };
    let v: Vec<f64> = model.centroids.iter().map(|c| c[0]).collect();
    let a: Vec<f64> = model.centroids.iter().map(|c| c[1]).collect();
    let high_v = top_two(&v).ok_or_else(degenerate)?;
    let high_a = top_two(&a).ok_or_else(degenerate)?;
    let quadrants: std::collections::BTreeSet<(bool, bool)> =
        (0..4).map(|c| (high_v[c], high_a[c])).collect();
    if quadrants.len() != 4 {
        return Err(degenerate());
    }
    let to_level = |h: bool| if h { Level::High } else { Level::Low };
    let labels = BinaryLabels {
        valence: model
            .assignments
            .iter()
            .map(|&c| to_level(high_v[c]))
            .collect(),
        arousal: model
            .assignments
            .iter()
            .map(|&c| to_level(high_a[c]))
            .collect(),
        provenance: LabelScheme::KmeansQuadrant,
    };
    Ok((labels, model))
}

/// Quadrant name of a (valence, arousal) level pair.
pub fn quadrant_name(v: Level, a: Level) -> &'static str {
    match (v, a) {
        (Level::Low, Level::Low) => "LVLA",
        (Level::Low, Level::High) => "LVHA",
        (Level::High, Level::Low) => "HVLA",
        (Level::High, Level::High) => "HVHA",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(centres: &[(f64, f64)], per: usize, sd: f64, seed: u64) -> (Vec<Point>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (c, &(x, y)) in centres.iter().enumerate() {
            for _ in 0..per {
                pts.push(vec![x + noise.sample(&mut rng), y + noise.sample(&mut rng)]);
                truth.push(c);
            }
        }
        (pts, truth)
    }

    /// Best inertia over every assignment of the points to k labelled groups.
    fn exhaustive_inertia(points: &[Point], k: usize) -> f64 {
        let n = points.len();
        let mut assign = vec![0usize; n];
        let mut best = f64::INFINITY;
        loop {
            let mut total = 0.0;
            for j in 0..k {
                let (c, m) =
                    centroid_of(points, (0..n).filter(|&i| assign[i] == j), points[0].len());
                if m > 0 {
                    total += (0..n)
                        .filter(|&i| assign[i] == j)
                        .map(|i| sq_dist(&points[i], &c))
                        .sum::<f64>();
                }
            }
            best = best.min(total);
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                assign[pos] += 1;
                if assign[pos] < k {
                    break;
                }
                assign[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn k1_centroid_is_mean() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
        let m = kmeans_fit(&pts, 1, 0, 3).unwrap();
        assert!((m.centroids[0][0] - 3.0).abs() < 1e-12);
        assert!((m.centroids[0][1] - 3.0).abs() < 1e-12);
        assert!(kmeans_fit(&pts, 4, 0, 1).is_err());
    }

    #[test]
    fn square_corners_match_exhaustive_optimum() {
        let (pts, _) = blobs(
            &[(0.0, 0.0), (0.0, 5.0), (5.0, 0.0), (5.0, 5.0)],
            3,
            0.05,
            3,
        );
        let m = kmeans_fit(&pts, 4, 11, KMEANS_RESTARTS).unwrap();
        for corner in [[0.0, 0.0], [0.0, 5.0], [5.0, 0.0], [5.0, 5.0]] {
            assert!(m.centroids.iter().any(|c| sq_dist(c, &corner).sqrt() < 0.1));
        }
        let oracle = exhaustive_inertia(&pts, 4);
        assert!((m.inertia - oracle).abs() <= 1e-9 * oracle.max(1e-12));
    }

    #[test]
    fn duplicates_trigger_a_repair() {
        let pts = vec![vec![1.0, 1.0]; 6];
        let m = kmeans_fit(&pts, 2, 5, 1).unwrap();
        assert!(m.empty_repairs >= 1);
        assert_eq!(m.inertia, 0.0);
        assert!(m.assignments.contains(&0) && m.assignments.contains(&1));
    }

    #[test]
    fn assignments_are_nearest_centroid() {
        let (pts, _) = blobs(&[(0.0, 0.0), (3.0, 1.0), (1.0, 4.0)], 30, 1.2, 8);
        let m = kmeans_fit(&pts, 3, 2, 4).unwrap();
        for (p, &a) in pts.iter().zip(&m.assignments) {
            let best = m
                .centroids
                .iter()
                .map(|c| sq_dist(p, c))
                .fold(f64::INFINITY, f64::min);
            assert!(sq_dist(p, &m.centroids[a]) <= best + 1e-12);
        }
    }

    #[test]
    fn gmm_single_gaussian() {
        let (pts, _) = blobs(&[(2.0, -1.0)], 500, 1.0, 4);
        let m = gmm_fit(&pts, 1, 0, 100, GMM_REG).unwrap();
        let n = pts.len() as f64;
        let mean_x = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        assert!((m.centroids[0][0] - mean_x).abs() < 1e-9);
        let var_x = pts.iter().map(|p| (p[0] - mean_x).powi(2)).sum::<f64>() / n;
        let cov = m.covariances.as_ref().unwrap();
        assert!((cov[0][0][0] - var_x - GMM_REG).abs() < 1e-9);
        assert_eq!(m.weights.as_ref().unwrap(), &vec![1.0]);
    }

    #[test]
    fn gmm_two_gaussians_and_monotone_likelihood() {
        let (pts, truth) = blobs(&[(0.0, 0.0), (6.0, 6.0)], 200, 1.0, 9);
        let m = gmm_fit(&pts, 2, 1, 200, GMM_REG).unwrap();
        let agree = m
            .assignments
            .iter()
            .zip(&truth)
            .filter(|(a, t)| a == t)
            .count() as f64
            / truth.len() as f64;
        assert!(agree.max(1.0 - agree) >= 0.98);
        let w: f64 = m.weights.as_ref().unwrap().iter().sum();
        assert!((w - 1.0).abs() < 1e-9);
        for pair in m.log_likelihood_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-8, "{pair:?}");
        }
    }

    #[test]
    fn davies_bouldin_examples() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ];
        assert!((davies_bouldin(&pts, &[0, 0, 1, 1]).unwrap() - 0.1).abs() < 1e-12);
        let two = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(davies_bouldin(&two, &[0, 1]).unwrap(), 0.0);
        assert!(davies_bouldin(&pts, &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn davies_bouldin_is_rigid_motion_invariant() {
        let (pts, truth) = blobs(&[(0.0, 0.0), (4.0, 1.0), (1.0, 5.0)], 10, 0.8, 2);
        let base = davies_bouldin(&pts, &truth).unwrap();
        let (s, c) = 0.7f64.sin_cos();
        let moved: Vec<Point> = pts
            .iter()
            .map(|p| vec![c * p[0] - s * p[1] + 13.0, s * p[0] + c * p[1] - 7.0])
            .collect();
        assert!((davies_bouldin(&moved, &truth).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn k_selection_by_db() {
        let t3: BTreeMap<usize, f64> = [
            (2, 1.1771),
            (3, 0.8729),
            (4, 0.8866),
            (5, 0.8956),
            (6, 0.8842),
        ]
        .into();
        assert_eq!(select_k_by_db(&t3), Some(3));
        let t5: BTreeMap<usize, f64> = [
            (2, 0.8216),
            (3, 1.0010),
            (4, 0.8095),
            (5, 0.8556),
            (6, 0.8255),
        ]
        .into();
        assert_eq!(select_k_by_db(&t5), Some(4));
        assert_eq!(select_k_by_db(&[(2, 1.0), (3, 1.0)].into()), Some(2));
    }

    #[test]
    fn elbow_examples() {
        let sse: BTreeMap<usize, f64> =
            [(1, 100.0), (2, 40.0), (3, 15.0), (4, 12.0), (5, 10.0)].into();
        assert_eq!(elbow_knee(&sse), Some(3));
        let linear: BTreeMap<usize, f64> = (1..8).map(|k| (k, 50.0 - 5.0 * k as f64)).collect();
        assert_eq!(elbow_knee(&linear), None);
        assert_eq!(elbow_knee(&[(1, 3.0), (2, 1.0)].into()), None);
    }

    #[test]
    fn threshold_labels() {
        let l = label_by_threshold(
            &[(4.28, 5.0), (1.0, 9.0), (9.0, 1.0), (4.5, 4.4999)],
            DEFAULT_THRESHOLD,
        );
        assert_eq!(
            l.valence,
            vec![Level::Low, Level::Low, Level::High, Level::High]
        );
        assert_eq!(
            l.arousal,
            vec![Level::High, Level::High, Level::Low, Level::Low]
        );
        assert_eq!(l.class_ratio(Axis::Valence), "1.00:1");
    }

    #[test]
    fn quadrant_corners() {
        let (pts, truth) = blobs(
            &[(3.0, 3.0), (3.0, 6.0), (6.0, 3.0), (6.0, 6.0)],
            25,
            0.3,
            6,
        );
        let va: Vec<(f64, f64)> = pts.iter().map(|p| (p[0], p[1])).collect();
        let (labels, _) = label_by_quadrant(&va, 3).unwrap();
        let expected = ["LVLA", "LVHA", "HVLA", "HVHA"];
        let hits = labels
            .valence
            .iter()
            .zip(&labels.arousal)
            .zip(&truth)
            .filter(|((v, a), t)| quadrant_name(**v, **a) == expected[**t])
            .count();
        assert!(hits as f64 / truth.len() as f64 >= 0.98);
        assert!(label_by_quadrant(&[(5.0, 5.0); 10], 0).is_err());
    }

    #[test]
    fn identical_ratings_select_without_filtering() {
        let mut ratings = Vec::new();
        for (i, (h, f, e)) in [
            (1.0, 1.0, 1.0),
            (1.5, 1.0, 1.2),
            (8.0, 2.0, 7.0),
            (7.5, 2.5, 7.0),
            (2.0, 8.0, 8.0),
            (2.5, 8.5, 7.5),
        ]
        .iter()
        .enumerate()
        {
            for _ in 0..3 {
                ratings.push(RatedPoint {
                    clip_id: format!("c{i}"),
                    happiness: *h,
                    fear: *f,
                    excitement: *e,
                });
            }
        }
        let r = select_stimuli(&ratings, 3, 1, 4).unwrap();
        assert_eq!(r.dropped_points, 0);
        assert_eq!(r.selected.len(), 3);
        assert!(r.clusters.iter().all(|c| c.len() == 2));
        let r = select_stimuli(&ratings, 3, 5, 4).unwrap();
        assert_eq!(r.selected.len(), 6);
        assert_eq!(r.warnings.len(), 3);
    }
}
