//! Mapping confidence scores to predicted expected accuracy.
//!
//! Exact match is a Bernoulli outcome and Hamming similarity a binomial one
//! with `L` trials, both fitted by ridge logistic regression. Jaccard
//! similarity is modelled through a four-class multinomial over the
//! TP/TN/FP/FN counts and reconstructed as `p_TP / (p_TP + p_FP + p_FN)`.
//!
//! The linear predictor holds one unpenalized bias per dataset, unpenalized
//! classifier offsets against a baseline classifier, and a penalized slope
//! for every (candidate, dataset) pair.

mod fit;
mod intervals;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::candidates::{score_vector, CandidateKind};
use crate::error::{Error, Result};
use crate::labelset::{Labelset, LabelsetDistribution};
use crate::metrics::{best_prediction, expected_accuracy, similarity, Metric};

pub use fit::{
    cross_validate_lambda, fit_binomial_calibrator, fit_calibrator, fit_multinomial_calibrator, jaccard_from_classes,
    predict_expected_accuracy, replicate_experiment, CalibrationModel, LambdaSelection, ReplicateConfig,
    ReplicateResult, DEFAULT_LAMBDA_GRID,
};
pub use intervals::{bin_index, interval_table, reliability_curve, IntervalRow, ReliabilityPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u32,
    pub tn: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
}

impl ConfusionCounts {
    pub fn total(&self) -> u32 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Order used for multinomial classes: TP, TN, FP, FN.
    pub fn as_array(&self) -> [f64; 4] {
        [self.tp as f64, self.tn as f64, self.fp as f64, self.fn_ as f64]
    }

    pub fn jaccard(&self) -> f64 {
        let denom = self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            self.tp as f64 / denom as f64
        }
    }
}

pub fn confusion_counts(truth: &Labelset, predicted: &Labelset) -> Result<ConfusionCounts> {
    if truth.label_count() != predicted.label_count() {
        return Err(Error::LabelMismatch { expected: truth.label_count(), got: predicted.label_count() });
    }
    let mut c = ConfusionCounts { tp: 0, tn: 0, fp: 0, fn_: 0 };
    for j in 0..truth.label_count() {
        match (truth.get(j), predicted.get(j)) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Which candidate scores enter the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpec {
    Single(CandidateKind),
    /// All seven candidates jointly.
    Mix,
}

impl FeatureSpec {
    pub fn kinds(&self) -> Vec<CandidateKind> {
        match self {
            FeatureSpec::Single(k) => vec![*k],
            FeatureSpec::Mix => CandidateKind::ALL.to_vec(),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            FeatureSpec::Single(k) => k.to_string(),
            FeatureSpec::Mix => "MIX".to_string(),
        }
    }
}

impl std::str::FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("mix") {
            Ok(FeatureSpec::Mix)
        } else {
            Ok(FeatureSpec::Single(s.parse()?))
        }
    }
}

/// One test instance as seen by a calibrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub dataset: String,
    pub classifier: String,
    /// Candidate scores in [`CandidateKind::ALL`] order.
    pub scores: [f64; 7],
    pub label_count: usize,
    /// Confusion counts of the metric-optimal prediction against the truth.
    pub counts: ConfusionCounts,
    /// Accuracy the prediction achieved: its expected accuracy under the
    /// true joint when that is known, otherwise the observed similarity.
    pub realized: f64,
}

/// Calibration samples for one (dataset, classifier, metric).
pub fn build_samples(
    dataset: &str,
    classifier: &str,
    metric: Metric,
    predicted: &[LabelsetDistribution],
    truths: &[Labelset],
    true_joints: Option<&[LabelsetDistribution]>,
) -> Result<Vec<CalibrationSample>> {
    if predicted.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), got: predicted.len() });
    }
    if let Some(j) = true_joints {
        if j.len() != truths.len() {
            return Err(Error::DimensionMismatch { expected: truths.len(), got: j.len() });
        }
    }
    predicted
        .iter()
        .zip(truths)
        .enumerate()
        .map(|(i, (d, y))| {
            let (yhat, _) = best_prediction(d, metric);
            let realized = match true_joints {
                Some(j) => expected_accuracy(&j[i], &yhat, metric)?.value,
                None => similarity(metric, y, &yhat)?,
            };
            Ok(CalibrationSample {
                dataset: dataset.to_string(),
                classifier: classifier.to_string(),
                scores: score_vector(d)?,
                label_count: y.label_count(),
                counts: confusion_counts(y, &yhat)?,
                realized,
            })
        })
        .collect()
}

pub const BASELINE_CLASSIFIER: &str = "ecc";

/// Factor levels and column layout of the calibration design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDesign {
    pub datasets: Vec<String>,
    pub classifiers: Vec<String>,
    pub classifier_baseline: String,
    pub kinds: Vec<CandidateKind>,
}

impl CalibrationDesign {
    pub fn from_samples(samples: &[CalibrationSample], spec: FeatureSpec) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("no calibration samples"));
        }
        let datasets: Vec<String> =
            samples.iter().map(|s| s.dataset.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let classifiers: Vec<String> =
            samples.iter().map(|s| s.classifier.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let classifier_baseline = if classifiers.iter().any(|c| c == BASELINE_CLASSIFIER) {
            BASELINE_CLASSIFIER.to_string()
        } else {
            classifiers[0].clone()
        };
        Ok(Self { datasets, classifiers, classifier_baseline, kinds: spec.kinds() })
    }

    fn offset_levels(&self) -> impl Iterator<Item = &String> {
        self.classifiers.iter().filter(move |c| **c != self.classifier_baseline)
    }

    pub fn cols(&self) -> usize {
        self.datasets.len() + self.classifiers.len() - 1 + self.kinds.len() * self.datasets.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.datasets.iter().map(|d| format!("bias:{d}")).collect();
        names.extend(self.offset_levels().map(|c| format!("classifier:{c}")));
        for k in &self.kinds {
            names.extend(self.datasets.iter().map(|d| format!("{k}:{d}")));
        }
        names
    }

    /// Only the score slopes are penalized.
    pub fn penalized(&self) -> Vec<bool> {
        let fixed = self.datasets.len() + self.classifiers.len() - 1;
        (0..self.cols()).map(|c| c >= fixed).collect()
    }

    pub fn row(&self, scores: &[f64; 7], dataset: &str, classifier: &str) -> Result<Vec<f64>> {
        let d = self
            .datasets
            .iter()
            .position(|x| x == dataset)
            .ok_or_else(|| Error::Unknown { kind: "dataset level", name: dataset.to_string() })?;
        if !self.classifiers.iter().any(|c| c == classifier) {
            return Err(Error::Unknown { kind: "classifier level", name: classifier.to_string() });
        }
        let mut row = vec![0.0; self.cols()];
        row[d] = 1.0;
        let mut col = self.datasets.len();
        for c in self.offset_levels() {
            row[col] = (c == classifier) as u8 as f64;
            col += 1;
        }
        for k in &self.kinds {
            row[col + d] = scores[k.position()];
            col += self.datasets.len();
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(v: &[u8]) -> Labelset {
        Labelset::from_slice(v).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let c = confusion_counts(&ls(&[1, 1, 0]), &ls(&[1, 0, 0])).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, tn: 1, fp: 0, fn_: 1 });
        assert_eq!(c.jaccard(), 0.5);
        let same = confusion_counts(&ls(&[0, 1, 1]), &ls(&[0, 1, 1])).unwrap();
        assert_eq!((same.fp, same.fn_, same.jaccard()), (0, 0, 1.0));
        let c = confusion_counts(&ls(&[0, 0, 0]), &ls(&[1, 1, 1])).unwrap();
        assert_eq!((c.tp, c.fp, c.jaccard()), (0, 3, 0.0));
        assert_eq!(confusion_counts(&ls(&[0, 0]), &ls(&[0, 0])).unwrap().jaccard(), 1.0);
        assert!(confusion_counts(&ls(&[0]), &ls(&[0, 1])).is_err());
    }

    #[test]
    fn design_layout() {
        let s = |d: &str, c: &str| CalibrationSample {
            dataset: d.into(),
            classifier: c.into(),
            scores: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
            label_count: 3,
            counts: ConfusionCounts { tp: 1, tn: 1, fp: 1, fn_: 0 },
            realized: 0.5,
        };
        let samples = vec![s("a", "ecc"), s("b", "independent")];
        let d = CalibrationDesign::from_samples(&samples, FeatureSpec::Single(CandidateKind::SE)).unwrap();
        assert_eq!(d.column_names(), vec!["bias:a", "bias:b", "classifier:independent", "SE:a", "SE:b"]);
        assert_eq!(d.row(&samples[1].scores, "b", "independent").unwrap(), vec![0.0, 1.0, 1.0, 0.0, 0.3]);
        assert_eq!(d.penalized(), vec![false, false, false, true, true]);
        assert!(d.row(&samples[0].scores, "c", "ecc").is_err());
        assert!(d.row(&samples[0].scores, "a", "chain").is_err());
    }
}
