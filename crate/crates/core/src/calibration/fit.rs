use rayon::prelude::*;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CalibrationDesign, CalibrationSample, FeatureSpec};
use crate::data::split_indices;
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::optim::{
    binomial_nll, dot, minimize, multinomial_nll, sigmoid, softmax_row, BinomialProblem, Design, MultinomialProblem,
    NewtonConfig,
};
use crate::seeding::{derive_seed, stream_rng};

/// Multinomial class order is TP, TN, FP, FN; TN is the reference.
const CLASSES: usize = 4;
const REFERENCE: usize = 1;

pub const DEFAULT_LAMBDA_GRID: [f64; 8] = [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub metric: Metric,
    pub feature_spec: FeatureSpec,
    pub design: CalibrationDesign,
    pub lambda: f64,
    /// One block per design column for EM/HS; for JS, blocks for the TP, FP
    /// and FN classes in that order (TN is the reference).
    pub weights: Vec<f64>,
    pub column_names: Vec<String>,
}

enum Outcomes {
    Binomial { successes: Vec<f64>, trials: Vec<f64> },
    Multinomial(Vec<Vec<f64>>),
}

impl Outcomes {
    fn new(samples: &[CalibrationSample], metric: Metric) -> Self {
        match metric {
            Metric::ExactMatch => Outcomes::Binomial {
                successes: samples.iter().map(|s| (s.counts.fp + s.counts.fn_ == 0) as u8 as f64).collect(),
                trials: vec![1.0; samples.len()],
            },
            Metric::HammingSimilarity => Outcomes::Binomial {
                successes: samples.iter().map(|s| (s.counts.tp + s.counts.tn) as f64).collect(),
                trials: samples.iter().map(|s| s.counts.total() as f64).collect(),
            },
            Metric::JaccardSimilarity => {
                Outcomes::Multinomial(samples.iter().map(|s| s.counts.as_array().to_vec()).collect())
            }
        }
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            Outcomes::Binomial { successes, trials } => Outcomes::Binomial {
                successes: idx.iter().map(|&i| successes[i]).collect(),
                trials: idx.iter().map(|&i| trials[i]).collect(),
            },
            Outcomes::Multinomial(c) => Outcomes::Multinomial(idx.iter().map(|&i| c[i].clone()).collect()),
        }
    }

    fn dim(&self, cols: usize) -> usize {
        match self {
            Outcomes::Binomial { .. } => cols,
            Outcomes::Multinomial(_) => cols * (CLASSES - 1),
        }
    }

    fn fit(&self, x: &Design, penalized: &[bool], lambda: f64, init: Option<&[f64]>) -> Result<Vec<f64>> {
        let cfg = NewtonConfig::default();
        let start = init.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; self.dim(x.cols())]);
        let fit = match self {
            Outcomes::Binomial { successes, trials } => {
                minimize(&BinomialProblem::new(x, successes, trials, penalized, lambda)?, start, &cfg)?
            }
            Outcomes::Multinomial(counts) => {
                minimize(&MultinomialProblem::new(x, counts, CLASSES, REFERENCE, penalized, lambda)?, start, &cfg)?
            }
        };
        if !fit.converged {
            log::debug!("calibrator at lambda {lambda} stopped with gradient norm {:.3e}", fit.gradient_norm);
        }
        Ok(fit.weights)
    }

    fn mean_nll(&self, x: &Design, w: &[f64]) -> f64 {
        match self {
            Outcomes::Binomial { successes, trials } => binomial_nll(x, successes, trials, w),
            Outcomes::Multinomial(counts) => multinomial_nll(x, counts, CLASSES, REFERENCE, w),
        }
    }
}

fn design_matrix(design: &CalibrationDesign, samples: &[CalibrationSample]) -> Result<Design> {
    let rows = samples
        .iter()
        .map(|s| design.row(&s.scores, &s.dataset, &s.classifier))
        .collect::<Result<Vec<_>>>()?;
    Design::from_rows(&rows)
}

fn check_samples(samples: &[CalibrationSample]) -> Result<()> {
    for s in samples {
        if s.scores.iter().any(|v| !v.is_finite()) || !s.realized.is_finite() {
            return Err(Error::invalid("non-finite calibration input"));
        }
        if s.counts.total() as usize != s.label_count {
            return Err(Error::invalid("confusion counts do not sum to the label count"));
        }
    }
    Ok(())
}

pub fn fit_calibrator(
    samples: &[CalibrationSample],
    metric: Metric,
    spec: FeatureSpec,
    lambda: f64,
) -> Result<CalibrationModel> {
    check_samples(samples)?;
    let design = CalibrationDesign::from_samples(samples, spec)?;
    let x = design_matrix(&design, samples)?;
    let weights = Outcomes::new(samples, metric).fit(&x, &design.penalized(), lambda, None)?;
    Ok(CalibrationModel {
        metric,
        feature_spec: spec,
        column_names: design.column_names(),
        design,
        lambda,
        weights,
    })
}

/// Ridge logistic calibrator for exact match (Bernoulli) or Hamming
/// similarity (binomial with `L` trials).
pub fn fit_binomial_calibrator(
    samples: &[CalibrationSample],
    metric: Metric,
    spec: FeatureSpec,
    lambda: f64,
) -> Result<CalibrationModel> {
    if metric == Metric::JaccardSimilarity {
        return Err(Error::invalid("Jaccard similarity is calibrated with the multinomial model"));
    }
    fit_calibrator(samples, metric, spec, lambda)
}

/// Four-class ridge multinomial calibrator for Jaccard similarity.
pub fn fit_multinomial_calibrator(
    samples: &[CalibrationSample],
    spec: FeatureSpec,
    lambda: f64,
) -> Result<CalibrationModel> {
    fit_calibrator(samples, Metric::JaccardSimilarity, spec, lambda)
}

impl CalibrationModel {
    /// Class probabilities (TP, TN, FP, FN) of the multinomial model.
    pub fn class_probabilities(&self, scores: &[f64; 7], dataset: &str, classifier: &str) -> Result<[f64; 4]> {
        if self.metric != Metric::JaccardSimilarity {
            return Err(Error::invalid("class probabilities exist only for the Jaccard model"));
        }
        let x = self.design.row(scores, dataset, classifier)?;
        let p = softmax_row(&x, &self.weights, CLASSES, REFERENCE);
        Ok([p[0], p[1], p[2], p[3]])
    }
}

/// `p_TP / (p_TP + p_FP + p_FN)`.
pub fn jaccard_from_classes(p: &[f64; 4]) -> f64 {
    let denom = p[0] + p[2] + p[3];
    if denom > 0.0 {
        (p[0] / denom).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

pub fn predict_expected_accuracy(
    m: &CalibrationModel,
    scores: &[f64; 7],
    dataset: &str,
    classifier: &str,
) -> Result<f64> {
    match m.metric {
        Metric::JaccardSimilarity => Ok(jaccard_from_classes(&m.class_probabilities(scores, dataset, classifier)?)),
        _ => Ok(sigmoid(dot(&m.design.row(scores, dataset, classifier)?, &m.weights))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub lambda: f64,
    /// Ascending grid with its mean held-out negative log-likelihood.
    pub grid: Vec<f64>,
    pub losses: Vec<f64>,
}

fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, 0xcf));
    let mut fold = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// K-fold choice of the ridge penalty by mean held-out negative
/// log-likelihood; ties go to the smaller value.
pub fn cross_validate_lambda(
    samples: &[CalibrationSample],
    metric: Metric,
    spec: FeatureSpec,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<LambdaSelection> {
    if grid.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::invalid("lambda grid values must be finite and non-negative"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() == 1 {
        return Ok(LambdaSelection { lambda: sorted[0], grid: sorted, losses: vec![f64::NAN] });
    }
    let n = samples.len();
    if folds < 2 || n < folds {
        return Err(Error::invalid(format!("cannot form {folds} folds from {n} samples")));
    }
    check_samples(samples)?;
    let design = CalibrationDesign::from_samples(samples, spec)?;
    let x = design_matrix(&design, samples)?;
    let outcomes = Outcomes::new(samples, metric);
    let penalized = design.penalized();
    let fold = fold_assignment(n, folds, seed);

    let per_fold = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            let (xt, ot) = (x.select_rows(&train), outcomes.select(&train));
            let (xv, ov) = (x.select_rows(&test), outcomes.select(&test));
            let mut totals = vec![0.0; sorted.len()];
            let mut warm: Option<Vec<f64>> = None;
            // Largest penalty first so each fit warm-starts from a smoother one.
            for (g, &lambda) in sorted.iter().enumerate().rev() {
                let w = ot.fit(&xt, &penalized, lambda, warm.as_deref())?;
                totals[g] = ov.mean_nll(&xv, &w) * test.len() as f64;
                warm = Some(w);
            }
            Ok(totals)
        })
        .collect::<Result<Vec<_>>>()?;

    let losses: Vec<f64> = (0..sorted.len()).map(|g| per_fold.iter().map(|t| t[g]).sum::<f64>() / n as f64).collect();
    let mut best = 0;
    for g in 1..sorted.len() {
        if losses[g] < losses[best] {
            best = g;
        }
    }
    Ok(LambdaSelection { lambda: sorted[best], grid: sorted, losses })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateConfig {
    pub replicates: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub folds: usize,
    pub grid: Vec<f64>,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        Self { replicates: 20, seed: 0, train_fraction: 0.5, folds: 10, grid: DEFAULT_LAMBDA_GRID.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub lambda: f64,
    pub test_indices: Vec<usize>,
    pub predicted: Vec<f64>,
    pub realized: Vec<f64>,
}

impl ReplicateResult {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.predicted.iter().copied().zip(self.realized.iter().copied()).collect()
    }
}

/// Repeats split, penalty selection, fit and held-out prediction.
pub fn replicate_experiment(
    samples: &[CalibrationSample],
    metric: Metric,
    spec: FeatureSpec,
    cfg: &ReplicateConfig,
) -> Result<Vec<ReplicateResult>> {
    if cfg.replicates == 0 {
        return Err(Error::invalid("at least one replicate is required"));
    }
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(cfg.seed, &format!("replicate-{r}"));
            let (train_idx, test_idx) = split_indices(samples.len(), cfg.train_fraction, seed)?;
            let train: Vec<CalibrationSample> = train_idx.iter().map(|&i| samples[i].clone()).collect();
            let selection = cross_validate_lambda(&train, metric, spec, &cfg.grid, cfg.folds, seed)?;
            let model = fit_calibrator(&train, metric, spec, selection.lambda)?;
            let predicted = test_idx
                .iter()
                .map(|&i| {
                    let s = &samples[i];
                    predict_expected_accuracy(&model, &s.scores, &s.dataset, &s.classifier)
                })
                .collect::<Result<Vec<_>>>()?;
            let realized = test_idx.iter().map(|&i| samples[i].realized).collect();
            Ok(ReplicateResult { replicate: r, lambda: selection.lambda, test_indices: test_idx, predicted, realized })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::ConfusionCounts;
    use super::*;
    use crate::candidates::CandidateKind;

    fn sample(score: f64, counts: ConfusionCounts) -> CalibrationSample {
        CalibrationSample {
            dataset: "d".into(),
            classifier: "ecc".into(),
            scores: [score; 7],
            label_count: counts.total() as usize,
            counts,
            realized: 0.0,
        }
    }

    const HIT: ConfusionCounts = ConfusionCounts { tp: 1, tn: 0, fp: 0, fn_: 0 };
    const MISS: ConfusionCounts = ConfusionCounts { tp: 0, tn: 0, fp: 1, fn_: 0 };

    #[test]
    fn half_successes_predict_half() {
        let samples: Vec<_> = (0..10).map(|i| sample(0.3, if i % 2 == 0 { HIT } else { MISS })).collect();
        let m = fit_binomial_calibrator(&samples, Metric::ExactMatch, FeatureSpec::Single(CandidateKind::HP), 1.0)
            .unwrap();
        let p = predict_expected_accuracy(&m, &[0.3; 7], "d", "ecc").unwrap();
        assert!((p - 0.5).abs() < 1e-9);
        assert!(predict_expected_accuracy(&m, &[0.3; 7], "other", "ecc").is_err());
    }

    #[test]
    fn uniform_counts_give_quarter_probabilities() {
        let c = ConfusionCounts { tp: 1, tn: 1, fp: 1, fn_: 1 };
        let samples: Vec<_> = (0..8).map(|_| sample(0.6, c)).collect();
        let m = fit_multinomial_calibrator(&samples, FeatureSpec::Mix, 0.1).unwrap();
        let p = m.class_probabilities(&[0.6; 7], "d", "ecc").unwrap();
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-9));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jaccard_reconstruction() {
        assert!((jaccard_from_classes(&[0.5, 0.2, 0.1, 0.2]) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn single_value_grid() {
        let samples: Vec<_> = (0..4).map(|i| sample(i as f64 / 4.0, HIT)).collect();
        let s = cross_validate_lambda(&samples, Metric::ExactMatch, FeatureSpec::Mix, &[0.5], 10, 0).unwrap();
        assert_eq!(s.lambda, 0.5);
    }
}
