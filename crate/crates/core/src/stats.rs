//! One-way repeated-measures ANOVA with Greenhouse-Geisser correction and
//! Bonferroni-adjusted paired t-tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation across subjects.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: String,
    pub b: String,
    pub mean_diff: f64,
    pub t: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    /// The difference vector had zero variance.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_value: f64,
    pub df_factor_uncorrected: f64,
    pub df_error_uncorrected: f64,
    pub epsilon_gg: f64,
    /// Corrected: uncorrected × ε̂.
    pub df_factor: f64,
    pub df_error: f64,
    pub p_value: f64,
    pub conditions: Vec<ConditionSummary>,
    pub posthoc: Vec<PairComparison>,
    pub n_subjects: usize,
}

impl AnovaResult {
    /// "F(a, b)=c, p<0.05 (p=…)" in the usual reporting style.
    pub fn summary(&self) -> String {
        let sig = if self.p_value < 0.001 {
            "p<0.001"
        } else if self.p_value < 0.05 {
            "p<0.05"
        } else {
            "n.s."
        };
        format!(
            "F({:.3}, {:.3})={:.3}, {sig} (p={:.6}, ε={:.4})",
            self.df_factor, self.df_error, self.f_value, self.p_value, self.epsilon_gg
        )
    }
}

/// Validates a subjects × conditions matrix and returns (n, k).
fn shape(scores: &[Vec<f64>]) -> Result<(usize, usize)> {
    let n = scores.len();
    let k = scores.first().map_or(0, |r| r.len());
    if scores.iter().any(|r| r.len() != k) {
        return Err(Error::param("score matrix is incomplete (ragged rows)"));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("score matrix has missing or non-finite cells"));
    }
    if k < 2 {
        return Err(Error::param("need at least two conditions"));
    }
    if n < 3 {
        return Err(Error::param("need at least three subjects"));
    }
    Ok((n, k))
}

fn column_means(scores: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = scores.len() as f64;
    (0..k)
        .map(|j| scores.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect()
}

/// ε̂ = tr(S*)² / ((k−1)·tr(S*²)) with S* the double-centred condition
/// covariance. Exactly 1 for k = 2; clamped to [1/(k−1), 1].
pub fn greenhouse_geisser_epsilon(scores: &[Vec<f64>]) -> Result<f64> {
    let (n, k) = shape(scores)?;
    if k == 2 {
        return Ok(1.0);
    }
    let means = column_means(scores, k);
    let mut s = vec![vec![0.0; k]; k];
    for row in scores {
        for a in 0..k {
            for b in 0..k {
                s[a][b] += (row[a] - means[a]) * (row[b] - means[b]) / (n - 1) as f64;
            }
        }
    }
    let row_mean: Vec<f64> = s.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / k as f64;
    let mut tr = 0.0;
    let mut tr2 = 0.0;
    for a in 0..k {
        for b in 0..k {
            let c = s[a][b] - row_mean[a] - row_mean[b] + grand;
            if a == b {
                tr += c;
            }
            tr2 += c * c;
        }
    }
    if tr2 <= 0.0 {
        return Ok(1.0);
    }
    let lower = 1.0 / (k - 1) as f64;
    Ok((tr * tr / ((k - 1) as f64 * tr2)).clamp(lower, 1.0))
}

fn f_sf(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if f.is_infinite() {
        return Ok(0.0);
    }
    let dist = FisherSnedecor::new(d1, d2)
        .map_err(|e| Error::numerical(format!("F distribution: {e}")))?;
    Ok(dist.sf(f).clamp(0.0, 1.0))
}

fn t_two_sided(t: f64, df: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::numerical(format!("t distribution: {e}")))?;
    Ok((2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
}

/// Within-subject F test over the conditions, with p from the F
/// distribution at the Greenhouse-Geisser corrected degrees of freedom.
/// `names` labels the columns; post-hoc comparisons are included.
pub fn rm_anova_gg(scores: &[Vec<f64>], names: &[String]) -> Result<AnovaResult> {
    let (n, k) = shape(scores)?;
    if names.len() != k {
        return Err(Error::param("one name per condition is required"));
    }
    let means = column_means(scores, k);
    let grand = means.iter().sum::<f64>() / k as f64;
    let subject_means: Vec<f64> = scores
        .iter()
        .map(|r| r.iter().sum::<f64>() / k as f64)
        .collect();
    let ss_cond = n as f64 * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_subj = k as f64
        * subject_means
            .iter()
            .map(|m| (m - grand).powi(2))
            .sum::<f64>();
    let ss_total: f64 = scores.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_err = (ss_total - ss_cond - ss_subj).max(0.0);
    let df1 = (k - 1) as f64;
    let df2 = ((k - 1) * (n - 1)) as f64;
    // a relative floor keeps round-off from producing spurious huge F values
    let noise = 1e-12 * ss_total.max(f64::MIN_POSITIVE);
    let f_value = if ss_err > noise {
        (ss_cond / df1) / (ss_err / df2)
    } else if ss_cond > noise {
        f64::INFINITY
    } else {
        0.0
    };
    let eps = greenhouse_geisser_epsilon(scores)?;
    let p_value = if f_value == 0.0 {
        1.0
    } else {
        f_sf(f_value, eps * df1, eps * df2)?
    };
    let conditions = (0..k)
        .map(|j| {
            let sd = (scores
                .iter()
                .map(|r| (r[j] - means[j]).powi(2))
                .sum::<f64>()
                / (n - 1) as f64)
                .sqrt();
            ConditionSummary {
                name: names[j].clone(),
                mean: means[j],
                sd,
            }
        })
        .collect();
    Ok(AnovaResult {
        f_value,
        df_factor_uncorrected: df1,
        df_error_uncorrected: df2,
        epsilon_gg: eps,
        df_factor: eps * df1,
        df_error: eps * df2,
        p_value,
        conditions,
        posthoc: bonferroni_posthoc(scores, names)?,
        n_subjects: n,
    })
}

/// Paired t-test for every condition pair; p × number of pairs, capped at 1.
pub fn bonferroni_posthoc(scores: &[Vec<f64>], names: &[String]) -> Result<Vec<PairComparison>> {
    let (n, k) = shape(scores)?;
    if names.len() != k {
        return Err(Error::param("one name per condition is required"));
    }
    let pairs = k * (k - 1) / 2;
    let mut out = Vec::with_capacity(pairs);
    for a in 0..k {
        for b in a + 1..k {
            let d: Vec<f64> = scores.iter().map(|r| r[a] - r[b]).collect();
            let mean = d.iter().sum::<f64>() / n as f64;
            let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let scale = d
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(f64::MIN_POSITIVE);
            let (t, p_raw, degenerate) = if var.sqrt() > 1e-12 * scale {
                let t = mean / (var / n as f64).sqrt();
                (t, t_two_sided(t, (n - 1) as f64)?, false)
            } else if mean.abs() > 1e-12 * scale {
                (mean.signum() * f64::INFINITY, 0.0, true)
            } else {
                (0.0, 1.0, true)
            };
            out.push(PairComparison {
                a: names[a].clone(),
                b: names[b].clone(),
                mean_diff: mean,
                t,
                p_raw,
                p_adjusted: (p_raw * pairs as f64).min(1.0),
                degenerate,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    // reference values computed independently with numpy/scipy
    // (eigenvalues of the orthonormal-contrast covariance, scipy.stats.f.sf,
    // scipy.stats.ttest_rel) and frozen here
    const TOY: [[f64; 3]; 4] = [
        [3.0, 5.0, 9.0],
        [2.0, 6.0, 7.0],
        [4.0, 4.0, 8.0],
        [5.0, 8.0, 12.0],
    ];
    const TOY_F: f64 = 26.8536585365854;
    const TOY_EPS: f64 = 0.9086486486486487;
    const TOY_P: f64 = 0.0016248026101651364;
    const TOY_T: [(f64, f64); 3] = [
        (-2.6349301969610397, 0.07799432643022612),
        (-8.520563361656317, 0.0033957770638589776),
        (-4.333333333333333, 0.02266903948970152),
    ];

    fn toy() -> Vec<Vec<f64>> {
        TOY.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn toy_matrix_matches_reference() {
        let r = rm_anova_gg(&toy(), &names(3)).unwrap();
        assert!((r.f_value - TOY_F).abs() < 1e-9);
        assert!((r.epsilon_gg - TOY_EPS).abs() < 1e-12);
        assert!((r.p_value - TOY_P).abs() < 1e-8);
        assert_eq!(
            (r.df_factor_uncorrected, r.df_error_uncorrected),
            (2.0, 6.0)
        );
        assert!((r.df_error - 6.0 * TOY_EPS).abs() < 1e-12);
        for (pc, (t, p)) in r.posthoc.iter().zip(TOY_T) {
            assert!((pc.t - t).abs() < 1e-9);
            assert!((pc.p_raw - p).abs() < 1e-8);
            assert!((pc.p_adjusted - (3.0 * p).min(1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn reported_shape_is_consistent() {
        // k = 3, n = 9 gives uncorrected dfs (2, 16); the reported
        // F(1.994, 15.953) = 15.791 corresponds to ε ≈ 0.997
        let eps: f64 = 15.953 / 16.0;
        assert!((2.0 * eps - 1.994).abs() < 1e-3);
        assert!((f_sf(15.791, 1.994, 15.953).unwrap() - 0.0001665746962159819).abs() < 1e-9);
    }

    #[test]
    fn two_conditions_are_spherical() {
        let s = vec![
            vec![1.0, 2.0],
            vec![2.0, 2.5],
            vec![0.5, 3.0],
            vec![1.2, 1.9],
        ];
        assert_eq!(greenhouse_geisser_epsilon(&s).unwrap(), 1.0);
    }

    #[test]
    fn invariances() {
        let base = rm_anova_gg(&toy(), &names(3)).unwrap();
        let shifted: Vec<Vec<f64>> = toy()
            .iter()
            .map(|r| r.iter().map(|v| v + 17.5).collect())
            .collect();
        let s = rm_anova_gg(&shifted, &names(3)).unwrap();
        assert!((s.f_value - base.f_value).abs() < 1e-9);
        assert!((s.epsilon_gg - base.epsilon_gg).abs() < 1e-9);
        assert!((s.p_value - base.p_value).abs() < 1e-9);
        let mut permuted = toy();
        permuted.reverse();
        let p = rm_anova_gg(&permuted, &names(3)).unwrap();
        assert!((p.f_value - base.f_value).abs() < 1e-9);
        assert!((p.p_value - base.p_value).abs() < 1e-12);
    }

    #[test]
    fn identical_conditions_and_degenerate_pairs() {
        let same = vec![
            vec![0.7, 0.7, 0.7],
            vec![0.6, 0.6, 0.6],
            vec![0.9, 0.9, 0.9],
        ];
        let r = rm_anova_gg(&same, &names(3)).unwrap();
        assert_eq!(r.f_value, 0.0);
        assert!(r.posthoc.iter().all(|p| p.p_adjusted == 1.0 && p.t == 0.0));
        let offset = vec![vec![0.5, 0.6], vec![0.7, 0.8], vec![0.2, 0.3]];
        let pc = &bonferroni_posthoc(&offset, &names(2)).unwrap()[0];
        assert!(pc.degenerate && pc.p_raw == 0.0);
        assert!(rm_anova_gg(&[vec![1.0, 2.0], vec![1.0]], &names(2)).is_err());
        assert!(rm_anova_gg(&[vec![1.0, 2.0], vec![1.0, 3.0]], &names(2)).is_err());
    }

    #[test]
    fn bonferroni_caps_at_one() {
        let s = vec![
            vec![1.0, 1.1, 3.0],
            vec![2.0, 1.8, 2.0],
            vec![1.5, 1.6, 0.2],
            vec![0.9, 1.0, 1.0],
        ];
        let r = bonferroni_posthoc(&s, &names(3)).unwrap();
        for pc in r {
            assert!((pc.p_adjusted - (pc.p_raw * 3.0).min(1.0)).abs() < 1e-15);
        }
    }
}
