use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::correlation::fisher_z;
use super::table::AnalysisRecord;
use super::tdist::student_t_two_sided_p;
use crate::candidates::CandidateKind;
use crate::data::DatasetStats;
use crate::error::{Error, Result};
use crate::metrics::Metric;

/// `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Residual standard error, `sqrt(RSS / (n - p))`.
    pub rmse: f64,
    pub n_obs: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }
}

const RANK_TOLERANCE: f64 = 1e-10;

/// Least squares via Householder QR with standard errors from the unbiased
/// residual variance.
pub fn ols(rows: &[Vec<f64>], y: &[f64], names: &[String]) -> Result<RegressionResult> {
    let n = rows.len();
    let p = names.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n <= p {
        return Err(Error::invalid(format!("{n} observations for {p} parameters")));
    }
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::DimensionMismatch { expected: p, got: rows.iter().map(|r| r.len()).find(|&l| l != p).unwrap_or(p) });
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("regression input must be finite"));
    }
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let col_scale = (0..p).map(|j| x.column(j).norm()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    if (0..p).any(|j| r[(j, j)].abs() <= RANK_TOLERANCE * col_scale) {
        return Err(Error::numerical("design matrix is rank deficient"));
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::numerical("triangular solve failed"))?;
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::numerical("triangular inverse failed"))?;
    let residuals: Vec<f64> = (&yv - &x * &beta).iter().copied().collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let df = (n - p) as f64;
    let sigma2 = rss / df;
    let coefficients = (0..p)
        .map(|j| {
            let var = sigma2 * rinv.row(j).norm_squared();
            let se = var.sqrt();
            let estimate = beta[j];
            let (t_stat, p_value) = if se > 0.0 {
                let t = estimate / se;
                (t, student_t_two_sided_p(t, df))
            } else if estimate == 0.0 {
                (0.0, 1.0)
            } else {
                (estimate.signum() * f64::INFINITY, 0.0)
            };
            Coefficient {
                name: names[j].clone(),
                estimate,
                std_error: se,
                t_stat,
                p_value,
                stars: stars(p_value).to_string(),
            }
        })
        .collect();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).max(0.0) } else { 0.0 };
    let adj_r_squared = if tss > 0.0 { 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df } else { 0.0 };
    Ok(RegressionResult { coefficients, r_squared, adj_r_squared, rmse: sigma2.sqrt(), n_obs: n, residuals })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub candidate: CandidateKind,
    pub dataset: String,
    pub classifier: String,
    #[serde(default = "default_metric")]
    pub metric: Metric,
}

fn default_metric() -> Metric {
    Metric::ExactMatch
}

impl Default for Baselines {
    fn default() -> Self {
        Self {
            candidate: CandidateKind::HP,
            dataset: "emotions".to_string(),
            classifier: "ecc".to_string(),
            metric: default_metric(),
        }
    }
}

/// Non-baseline levels in sorted order. A missing baseline falls back to
/// the first level.
fn dummy_levels<T: Ord + Clone + std::fmt::Display>(levels: BTreeSet<T>, baseline: &T, factor: &str) -> Vec<T> {
    let base = if levels.contains(baseline) {
        baseline.clone()
    } else {
        let first = levels.iter().next().cloned().expect("at least one level");
        if levels.len() > 1 {
            log::warn!("{factor} baseline '{baseline}' absent; using '{first}'");
        }
        first
    };
    levels.into_iter().filter(|l| *l != base).collect()
}

fn z_response(records: &[&AnalysisRecord]) -> Result<Vec<f64>> {
    records.iter().map(|r| fisher_z(r.correlation).map(|f| f.z)).collect()
}

/// Additive dummy-coded model of Fisher-z correlations on candidate,
/// dataset and classifier. Factors with one level contribute no columns.
pub fn ols_fixed_effects(records: &[AnalysisRecord], baselines: &Baselines) -> Result<RegressionResult> {
    if records.is_empty() {
        return Err(Error::invalid("no records to regress"));
    }
    let refs: Vec<&AnalysisRecord> = records.iter().collect();
    let cands = dummy_levels(records.iter().map(|r| r.candidate).collect(), &baselines.candidate, "candidate");
    let dsets = dummy_levels(records.iter().map(|r| r.dataset.clone()).collect(), &baselines.dataset, "dataset");
    let clfs =
        dummy_levels(records.iter().map(|r| r.classifier.clone()).collect(), &baselines.classifier, "classifier");
    let mut names = vec!["(Intercept)".to_string()];
    names.extend(cands.iter().map(|c| format!("candidate:{c}")));
    names.extend(dsets.iter().map(|d| format!("dataset:{d}")));
    names.extend(clfs.iter().map(|c| format!("classifier:{c}")));
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            let mut row = vec![1.0];
            row.extend(cands.iter().map(|c| (r.candidate == *c) as u8 as f64));
            row.extend(dsets.iter().map(|d| (r.dataset == *d) as u8 as f64));
            row.extend(clfs.iter().map(|c| (r.classifier == *c) as u8 as f64));
            row
        })
        .collect();
    ols(&rows, &z_response(&refs)?, &names)
}

pub const ROBUSTNESS_GRADIENTS: [&str; 4] = ["LabelCount", "LabelComb", "LabelCard", "FeatureCount"];

/// Per candidate: Fisher-z correlations on the four dataset gradients plus
/// classifier and metric dummies.
pub fn robustness_regression(
    records: &[AnalysisRecord],
    stats: &BTreeMap<String, DatasetStats>,
    baselines: &Baselines,
) -> Result<Vec<(CandidateKind, RegressionResult)>> {
    let kinds: BTreeSet<CandidateKind> = records.iter().map(|r| r.candidate).collect();
    let mut out = Vec::new();
    for kind in kinds {
        let subset: Vec<&AnalysisRecord> = records.iter().filter(|r| r.candidate == kind).collect();
        let clfs =
            dummy_levels(subset.iter().map(|r| r.classifier.clone()).collect(), &baselines.classifier, "classifier");
        let metrics = dummy_levels(subset.iter().map(|r| r.metric).collect(), &baselines.metric, "metric");
        let mut names = vec!["(Intercept)".to_string()];
        names.extend(ROBUSTNESS_GRADIENTS.iter().map(|s| s.to_string()));
        names.extend(clfs.iter().map(|c| format!("classifier:{c}")));
        names.extend(metrics.iter().map(|m| format!("metric:{m}")));
        let rows = subset
            .iter()
            .map(|r| {
                let s = stats
                    .get(&r.dataset)
                    .ok_or_else(|| Error::Unknown { kind: "dataset", name: r.dataset.clone() })?;
                let mut row = vec![
                    1.0,
                    s.labels as f64,
                    s.distinct_combinations as f64,
                    s.label_cardinality,
                    s.features as f64,
                ];
                row.extend(clfs.iter().map(|c| (r.classifier == *c) as u8 as f64));
                row.extend(metrics.iter().map(|m| (r.metric == *m) as u8 as f64));
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((kind, ols(&rows, &z_response(&subset)?, &names)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("b{j}")).collect()
    }

    #[test]
    fn two_group_difference() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, (i >= 4) as u8 as f64]).collect();
        let y = [1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 4.0, 5.0];
        let r = ols(&rows, &y, &names(2)).unwrap();
        assert!((r.coefficients[0].estimate - 2.0).abs() < 1e-12);
        assert!((r.coefficients[1].estimate - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_fit() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, (i % 2) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 + 2.0 * r[1] - r[2]).collect();
        let r = ols(&rows, &y, &names(3)).unwrap();
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        for (got, want) in r.estimates().iter().zip([0.5, 2.0, -1.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn failures() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
        assert!(ols(&rows, &[1.0, 2.0, 3.0], &names(2)).is_err());
        assert!(ols(&rows[..2], &[1.0, 2.0], &names(2)).is_err());
    }

    #[test]
    fn zero_response() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let r = ols(&rows, &[0.0; 6], &names(2)).unwrap();
        assert_eq!(r.r_squared, 0.0);
        assert!(r.coefficients.iter().all(|c| c.estimate == 0.0 && c.p_value == 1.0));
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.009), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.1), "");
    }
}
