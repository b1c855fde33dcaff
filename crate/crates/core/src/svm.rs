//! Min-max scaling, a kernel SVM trained by SMO on the dual, an
//! L1-regularized linear SVM trained by coordinate descent, and binary
//! classification metrics.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<f64>>;

fn columns(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map_or(0, |r| r.len());
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::param("ragged feature matrix"));
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    /// Column-wise min/max of the given (training) rows only.
    pub fn fit(train: &[Vec<f64>]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::param("cannot fit a scaler on zero rows"));
        }
        let d = columns(train)?;
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in train {
            for (j, v) in row.iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.min[j] == self.max[j]
    }

    /// (x − min)/(max − min), unclamped; constant columns map to 0.
    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Matrix> {
        x.iter()
            .map(|row| {
                if row.len() != self.n_features() {
                    return Err(Error::param(format!(
                        "scaler fitted on {} features, got {}",
                        self.n_features(),
                        row.len()
                    )));
                }
                Ok(row
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let span = self.max[j] - self.min[j];
                        if span > 0.0 {
                            (v - self.min[j]) / span
                        } else {
                            0.0
                        }
                    })
                    .collect())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Poly,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Linear,
        KernelKind::Poly,
        KernelKind::Rbf,
        KernelKind::Sigmoid,
    ];

    pub fn uses_degree(self) -> bool {
        self == KernelKind::Poly
    }

    pub fn uses_coef0(self) -> bool {
        matches!(self, KernelKind::Poly | KernelKind::Sigmoid)
    }

    pub fn uses_gamma(self) -> bool {
        self != KernelKind::Linear
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Linear => "linear",
            KernelKind::Poly => "poly",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "poly" => Ok(KernelKind::Poly),
            "rbf" => Ok(KernelKind::Rbf),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            other => Err(Error::param(format!("unknown kernel {other:?}"))),
        }
    }
}

/// Kernel with only the parameters its kind uses; unused ones are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coef0: Option<f64>,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            degree: None,
            gamma: None,
            coef0: None,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            degree: None,
            gamma: Some(gamma),
            coef0: None,
        }
    }

    pub fn poly(degree: u32, gamma: f64, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Poly,
            degree: Some(degree),
            gamma: Some(gamma),
            coef0: Some(coef0),
        }
    }

    pub fn sigmoid(gamma: f64, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Sigmoid,
            degree: None,
            gamma: Some(gamma),
            coef0: Some(coef0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.kind;
        let ok = k.uses_degree() == self.degree.is_some()
            && k.uses_gamma() == self.gamma.is_some()
            && k.uses_coef0() == self.coef0.is_some();
        if !ok {
            return Err(Error::param(format!(
                "kernel parameters do not match kind {k}"
            )));
        }
        if self.gamma.is_some_and(|g| g <= 0.0 || !g.is_finite()) {
            return Err(Error::param("gamma must be positive"));
        }
        Ok(())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot = || a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let gamma = self.gamma.unwrap_or(1.0);
        let coef0 = self.coef0.unwrap_or(0.0);
        match self.kind {
            KernelKind::Linear => dot(),
            KernelKind::Poly => (gamma * dot() + coef0).powi(self.degree.unwrap_or(3) as i32),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            KernelKind::Sigmoid => (gamma * dot() + coef0).tanh(),
        }
    }
}

/// 1/(n_features · variance of all entries); 1 when the variance is zero.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(0, |r| r.len());
    let n = (x.len() * d) as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L2,
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Penalty::L1 => "L1",
            Penalty::L2 => "L2",
        })
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L1" => Ok(Penalty::L1),
            "L2" => Ok(Penalty::L2),
            other => Err(Error::param(format!("unknown penalty {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SVMModel {
    pub kernel: KernelSpec,
    pub penalty: Penalty,
    pub c: f64,
    /// L2: the support vectors. L1: a single row holding the primal weights.
    pub support_vectors: Matrix,
    /// αᵢ·yᵢ per support vector (L2); `[1.0]` for the L1 weight row.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
    /// L2: dual objective Σα − ½αᵀQα. L1: primal ‖w‖₁ + C·Σ squared hinge.
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scaler: Option<MinMaxScaler>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub penalty: Penalty,
    pub tol: f64,
    pub seed: u64,
}

impl TrainParams {
    pub fn new(kernel: KernelSpec, c: f64, penalty: Penalty) -> Self {
        TrainParams {
            kernel,
            c,
            penalty,
            tol: 1e-3,
            seed: 0,
        }
    }
}

/// Trains on already-scaled rows with labels ±1.
pub fn svm_train(x: &[Vec<f64>], y: &[i8], p: &TrainParams) -> Result<SVMModel> {
    if x.len() != y.len() {
        return Err(Error::param("feature and label counts differ"));
    }
    columns(x)?;
    if y.iter().any(|v| *v != 1 && *v != -1) {
        return Err(Error::param("labels must be +1 or -1"));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::param("training labels contain a single class"));
    }
    if !(p.c > 0.0 && p.c.is_finite()) {
        return Err(Error::param("C must be positive"));
    }
    p.kernel.validate()?;
    match p.penalty {
        Penalty::L2 => Ok(smo(x, y, p)),
        Penalty::L1 if p.kernel.kind == KernelKind::Linear => Ok(l1_linear(x, y, p)),
        Penalty::L1 => Err(Error::param(format!(
            "L1 penalty is only defined for the linear kernel, not {}",
            p.kernel.kind
        ))),
    }
}

const TAU: f64 = 1e-12;

/// SMO with maximal-violating-pair working sets on a precomputed kernel.
fn smo(x: &[Vec<f64>], y: &[i8], p: &TrainParams) -> SVMModel {
    let n = x.len();
    let c = p.c;
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = yf[i] * yf[j] * p.kernel.eval(&x[i], &x[j]);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(100_000);
    let mut iterations = 0;
    let mut converged = false;
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let (mut m_up, mut m_low);
    loop {
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        m_up = f64::NEG_INFINITY;
        m_low = f64::INFINITY;
        for t in 0..n {
            let v = -yf[t] * grad[t];
            if up(alpha[t], yf[t]) && v > m_up {
                m_up = v;
                i = t;
            }
            if low(alpha[t], yf[t]) && v < m_low {
                m_low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m_up - m_low < p.tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qii = q[i * n + i];
        let qjj = q[j * n + j];
        let qij = q[i * n + j];
        if yf[i] != yf[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[i * n + t] * di + q[j * n + t] * dj;
        }
    }
    // bias from free vectors, else the midpoint of the feasible interval
    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .map(|t| -yf[t] * grad[t])
        .collect();
    let bias = if free.is_empty() {
        let (m_up, m_low) = if m_up.is_finite() && m_low.is_finite() {
            (m_up, m_low)
        } else {
            (0.0, 0.0)
        };
        0.5 * (m_up + m_low)
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    let objective = (0..n)
        .map(|t| alpha[t] - 0.5 * alpha[t] * (grad[t] + 1.0))
        .sum();
    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    SVMModel {
        kernel: p.kernel,
        penalty: Penalty::L2,
        c,
        support_vectors: sv.iter().map(|&t| x[t].clone()).collect(),
        dual_coefs: sv.iter().map(|&t| alpha[t] * yf[t]).collect(),
        bias,
        converged,
        iterations,
        objective,
        scaler: None,
    }
}

const L1_MAX_OUTER: usize = 1000;
const LINE_SEARCH_SIGMA: f64 = 0.01;

/// Coordinate descent with a one-dimensional Newton step and backtracking
/// line search on ‖w‖₁ + C·Σ max(0, 1 − yᵢ(wᵀxᵢ + b))². The bias is not
/// penalized. `seed` fixes the coordinate visiting order.
fn l1_linear(x: &[Vec<f64>], y: &[i8], p: &TrainParams) -> SVMModel {
    let n = x.len();
    let d = x[0].len();
    let c = p.c;
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    // coordinate d is the bias, with a constant 1 feature
    let feat = |i: usize, j: usize| if j == d { 1.0 } else { x[i][j] };
    let mut w = vec![0.0; d + 1];
    let mut margin = vec![1.0; n]; // 1 − yᵢ(wᵀxᵢ + b)
    let mut order: Vec<usize> = (0..=d).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..L1_MAX_OUTER {
        iterations += 1;
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &j in &order {
            let mut g = 0.0;
            let mut h = 0.0;
            for i in 0..n {
                if margin[i] > 0.0 {
                    let xij = feat(i, j);
                    g -= 2.0 * c * yf[i] * xij * margin[i];
                    h += 2.0 * c * xij * xij;
                }
            }
            h = h.max(1e-12);
            let penalized = j < d;
            let (dir, violation) = if penalized {
                let (gp, gn) = (g + 1.0, g - 1.0);
                let v = if w[j] > 0.0 {
                    gp.abs()
                } else if w[j] < 0.0 {
                    gn.abs()
                } else {
                    gn.max(-gp).max(0.0)
                };
                let dir = if gp < h * w[j] {
                    -gp / h
                } else if gn > h * w[j] {
                    -gn / h
                } else {
                    -w[j]
                };
                (dir, v)
            } else {
                (-g / h, g.abs())
            };
            max_violation = max_violation.max(violation);
            if dir.abs() < 1e-15 {
                continue;
            }
            let reg = |wj: f64| if penalized { wj.abs() } else { 0.0 };
            let predicted = g * dir + reg(w[j] + dir) - reg(w[j]);
            let mut step = 1.0;
            for _ in 0..30 {
                let delta = step * dir;
                let mut loss_change = 0.0;
                for i in 0..n {
                    let new = margin[i] - delta * yf[i] * feat(i, j);
                    loss_change += new.max(0.0).powi(2) - margin[i].max(0.0).powi(2);
                }
                let change = c * loss_change + reg(w[j] + delta) - reg(w[j]);
                if change <= LINE_SEARCH_SIGMA * step * predicted {
                    w[j] += delta;
                    for i in 0..n {
                        margin[i] -= delta * yf[i] * feat(i, j);
                    }
                    break;
                }
                step *= 0.5;
            }
        }
        if max_violation <= p.tol {
            converged = true;
            break;
        }
    }
    let objective = w[..d].iter().map(|v| v.abs()).sum::<f64>()
        + c * margin.iter().map(|m| m.max(0.0).powi(2)).sum::<f64>();
    SVMModel {
        kernel: KernelSpec::linear(),
        penalty: Penalty::L1,
        c,
        support_vectors: vec![w[..d].to_vec()],
        dual_coefs: vec![1.0],
        bias: w[d],
        converged,
        iterations,
        objective,
        scaler: None,
    }
}

impl SVMModel {
    pub fn n_features(&self) -> Option<usize> {
        self.support_vectors.first().map(|r| r.len())
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Labels (+1 when the decision value is ≥ 0) and decision values for
    /// already-scaled rows.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<(Vec<i8>, Vec<f64>)> {
        if let Some(d) = self.n_features() {
            if let Some(row) = x.iter().find(|r| r.len() != d) {
                return Err(Error::param(format!(
                    "model expects {d} features, got {}",
                    row.len()
                )));
            }
        }
        let values: Vec<f64> = x.iter().map(|r| self.decision_value(r)).collect();
        let labels = values
            .iter()
            .map(|&v| if v >= 0.0 { 1 } else { -1 })
            .collect();
        Ok((labels, values))
    }

    /// Applies the stored scaler (if any) before predicting.
    pub fn predict_unscaled(&self, x: &[Vec<f64>]) -> Result<(Vec<i8>, Vec<f64>)> {
        match &self.scaler {
            Some(s) => self.predict(&s.transform(x)?),
            None => self.predict(x),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut body = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        body.push('\n');
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SVMModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: SVMModel = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        m.kernel.validate()?;
        if m.support_vectors.len() != m.dual_coefs.len() {
            return Err(Error::validation(
                path.display().to_string(),
                "support vector and coefficient counts differ",
            ));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Accuracy and F1 of the +1 ("high") class. Precision/recall with an empty
/// denominator are 0, and so is F1 when both are 0.
pub fn metrics(y_true: &[i8], y_pred: &[i8]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::param("label vectors differ in length"));
    }
    if y_true.is_empty() {
        return Err(Error::param("no labels to score"));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;
    let mut correct = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        correct += usize::from(t == p);
        match (t, p) {
            (1, 1) => tp += 1,
            (-1, 1) => fp += 1,
            (1, -1) => fneg += 1,
            _ => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        accuracy: correct as f64 / y_true.len() as f64,
        f1,
        precision,
        recall,
    })
}
