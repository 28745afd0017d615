use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::{fisher_z, pearson};
use super::kendall::kendall_tau;
use crate::candidates::CandidateKind;
use crate::data::{fmt6, TableRow};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::seeding::{derive_seed, stream_rng};

/// One (dataset, classifier, metric, candidate) correlation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub dataset: String,
    pub classifier: String,
    pub metric: Metric,
    pub candidate: CandidateKind,
    pub correlation: f64,
    pub n: usize,
}

impl TableRow for AnalysisRecord {
    fn header() -> Vec<&'static str> {
        vec!["dataset", "classifier", "metric", "candidate", "correlation", "n"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.dataset.clone(),
            self.classifier.clone(),
            self.metric.to_string(),
            self.candidate.to_string(),
            fmt6(self.correlation),
            self.n.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Kendall,
    Pearson,
}

impl CorrelationMethod {
    pub fn compute(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            CorrelationMethod::Kendall => kendall_tau(a, b),
            CorrelationMethod::Pearson => pearson(a, b),
        }
    }
}

/// Aligned per-instance scores and realized accuracies for one
/// (dataset, classifier, metric) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGroup {
    pub dataset: String,
    pub classifier: String,
    pub metric: Metric,
    pub scores: Vec<(CandidateKind, Vec<f64>)>,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: 1000, seed: 0 }
    }
}

pub const MIN_GROUP_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    #[serde(flatten)]
    pub record: AnalysisRecord,
    pub z: f64,
    /// Two-sided bootstrap p-value for the correlation being non-zero.
    pub p_value: f64,
    pub diff_vs_hp: f64,
    pub diff_p_value: f64,
    /// `+`/`++`/`+++` (or `-`...) when the difference from HP is significant
    /// at 0.1/0.05/0.01.
    pub marker: String,
}

impl TableRow for CorrelationRow {
    fn header() -> Vec<&'static str> {
        vec![
            "dataset",
            "classifier",
            "metric",
            "candidate",
            "correlation",
            "n",
            "z",
            "p_value",
            "diff_vs_hp",
            "diff_p_value",
            "marker",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let mut f = self.record.fields();
        f.extend([fmt6(self.z), fmt6(self.p_value), fmt6(self.diff_vs_hp), fmt6(self.diff_p_value), self.marker.clone()]);
        f
    }
}

/// Two-sided percentile p-value of a bootstrap distribution around 0, with
/// the +1 correction so it is never exactly 0.
fn bootstrap_p(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let le = values.iter().filter(|v| **v <= 0.0).count();
    let ge = values.iter().filter(|v| **v >= 0.0).count();
    (2.0 * (le.min(ge) + 1) as f64 / (values.len() + 1) as f64).min(1.0)
}

pub fn significance_marker(diff: f64, p: f64) -> String {
    let level = if p < 0.01 {
        3
    } else if p < 0.05 {
        2
    } else if p < 0.1 {
        1
    } else {
        0
    };
    if level == 0 || diff == 0.0 {
        return String::new();
    }
    let c = if diff > 0.0 { "+" } else { "-" };
    c.repeat(level)
}

/// Correlation of every candidate with realized accuracy per group, with
/// bootstrap significance for the correlation and for its difference from
/// HP (paired resampling of instances).
pub fn correlation_table(
    groups: &[InstanceGroup],
    method: CorrelationMethod,
    bootstrap: &BootstrapConfig,
) -> Result<Vec<CorrelationRow>> {
    let mut rows = Vec::new();
    for g in groups {
        rows.extend(group_rows(g, method, bootstrap)?);
    }
    Ok(rows)
}

fn group_rows(g: &InstanceGroup, method: CorrelationMethod, bootstrap: &BootstrapConfig) -> Result<Vec<CorrelationRow>> {
    let n = g.accuracies.len();
    let label = format!("{}/{}/{}", g.dataset, g.classifier, g.metric);
    if n < MIN_GROUP_SIZE {
        return Err(Error::invalid(format!("group {label} has {n} instances; at least {MIN_GROUP_SIZE} required")));
    }
    for (kind, s) in &g.scores {
        if s.len() != n {
            return Err(Error::invalid(format!("group {label}: {kind} has {} scores for {n} instances", s.len())));
        }
    }
    let observed = g
        .scores
        .iter()
        .map(|(kind, s)| {
            method
                .compute(s, &g.accuracies)
                .map_err(|e| Error::invalid(format!("group {label}, candidate {kind}: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let hp = g.scores.iter().position(|(k, _)| *k == CandidateKind::HP);

    let seed = derive_seed(bootstrap.seed, &label);
    // Replicates where a resample is constant yield NaN and are dropped.
    let draws: Vec<Vec<f64>> = (0..bootstrap.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let acc: Vec<f64> = idx.iter().map(|&i| g.accuracies[i]).collect();
            g.scores
                .iter()
                .map(|(_, s)| {
                    let sv: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
                    method.compute(&sv, &acc).unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect();

    let mut out = Vec::with_capacity(g.scores.len());
    for (c, (kind, _)) in g.scores.iter().enumerate() {
        let own: Vec<f64> = draws.iter().map(|d| d[c]).filter(|v| !v.is_nan()).collect();
        let (diff, diff_p) = match hp {
            Some(h) if h != c => {
                let diffs: Vec<f64> =
                    draws.iter().map(|d| d[c] - d[h]).filter(|v| !v.is_nan()).collect();
                (observed[c] - observed[h], bootstrap_p(&diffs))
            }
            _ => (0.0, 1.0),
        };
        out.push(CorrelationRow {
            record: AnalysisRecord {
                dataset: g.dataset.clone(),
                classifier: g.classifier.clone(),
                metric: g.metric,
                candidate: *kind,
                correlation: observed[c],
                n,
            },
            z: fisher_z(observed[c])?.z,
            p_value: bootstrap_p(&own),
            diff_vs_hp: diff,
            diff_p_value: diff_p,
            marker: significance_marker(diff, diff_p),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopKPoint {
    pub k: usize,
    pub mean_accuracy: f64,
}

impl TableRow for TopKPoint {
    fn header() -> Vec<&'static str> {
        vec!["k", "mean_accuracy"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.k.to_string(), fmt6(self.mean_accuracy)]
    }
}

/// Mean accuracy of the `k` highest-scoring instances for every `k`; ties
/// in score keep instance order.
pub fn topk_accuracy_curve(scores: &[f64], accuracies: &[f64]) -> Result<Vec<TopKPoint>> {
    if scores.is_empty() {
        return Err(Error::invalid("top-k curve of an empty input"));
    }
    if scores.len() != accuracies.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), got: accuracies.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("top-k scores contain NaN"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut total = 0.0;
    Ok(order
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            total += accuracies[j];
            TopKPoint { k: i + 1, mean_accuracy: total / (i + 1) as f64 }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_examples() {
        let c = topk_accuracy_curve(&[0.3], &[0.7]).unwrap();
        assert_eq!(c, vec![TopKPoint { k: 1, mean_accuracy: 0.7 }]);
        let s = [0.1, 0.9, 0.4, 0.9, 0.2];
        let a = [1.0, 0.0, 0.5, 1.0, 0.0];
        let c = topk_accuracy_curve(&s, &a).unwrap();
        let want = [0.0, 0.5, 0.5, 0.375, 0.5];
        for (p, w) in c.iter().zip(want) {
            assert!((p.mean_accuracy - w).abs() < 1e-15);
        }
        assert!(topk_accuracy_curve(&[], &[]).is_err());
    }

    #[test]
    fn markers() {
        assert_eq!(significance_marker(0.2, 0.001), "+++");
        assert_eq!(significance_marker(-0.2, 0.03), "--");
        assert_eq!(significance_marker(0.2, 0.07), "+");
        assert_eq!(significance_marker(0.2, 0.5), "");
        assert_eq!(significance_marker(0.0, 0.0), "");
    }

    #[test]
    fn small_or_constant_groups_fail() {
        let g = InstanceGroup {
            dataset: "d".into(),
            classifier: "ecc".into(),
            metric: Metric::ExactMatch,
            scores: vec![(CandidateKind::HP, vec![0.5; 5])],
            accuracies: vec![1.0; 5],
        };
        let cfg = BootstrapConfig { replicates: 10, seed: 0 };
        assert!(correlation_table(&[g.clone()], CorrelationMethod::Kendall, &cfg).is_err());
        let big = InstanceGroup {
            scores: vec![(CandidateKind::HP, (0..20).map(|i| i as f64).collect())],
            accuracies: vec![1.0; 20],
            ..g
        };
        assert!(correlation_table(&[big], CorrelationMethod::Kendall, &cfg).is_err());
    }
}
