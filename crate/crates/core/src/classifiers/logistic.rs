//! Ridge logistic regression, the base learner behind every classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{dot, minimize, sigmoid, BinomialProblem, Design, NewtonConfig, NewtonFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseLearnerConfig {
    pub ridge_lambda: f64,
    pub max_iterations: usize,
    /// Gradient-norm stopping threshold.
    pub tolerance: f64,
}

impl Default for BaseLearnerConfig {
    fn default() -> Self {
        Self { ridge_lambda: 1e-4, max_iterations: 100, tolerance: 1e-10 }
    }
}

impl BaseLearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::invalid("ridge_lambda must be finite and non-negative"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Logistic model; `weights[0]` is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub weights: Vec<f64>,
}

impl BinaryModel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("a binary model needs at least an intercept"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("non-finite model weight"));
        }
        Ok(Self { weights })
    }

    /// Number of inputs, excluding the intercept.
    pub fn input_dim(&self) -> usize {
        self.weights.len() - 1
    }

    #[inline]
    pub(crate) fn logit_unchecked(&self, x: &[f64]) -> f64 {
        self.weights[0] + dot(&self.weights[1..], x)
    }
}

fn design_with_intercept(features: &[Vec<f64>]) -> Result<Design> {
    let cols = features.first().map(|r| r.len()).unwrap_or(0) + 1;
    let mut data = Vec::with_capacity(features.len() * cols);
    for r in features {
        if r.len() + 1 != cols {
            return Err(Error::DimensionMismatch { expected: cols - 1, got: r.len() });
        }
        data.push(1.0);
        data.extend_from_slice(r);
    }
    Design::new(features.len(), cols, data)
}

/// Fits the model and also returns the solver report.
pub fn train_binary_with_report(
    features: &[Vec<f64>],
    targets: &[bool],
    cfg: &BaseLearnerConfig,
) -> Result<(BinaryModel, NewtonFit)> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    if features.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: features.len(), got: targets.len() });
    }
    let design = design_with_intercept(features)?;
    let successes: Vec<f64> = targets.iter().map(|&t| t as u8 as f64).collect();
    let trials = vec![1.0; targets.len()];
    let mut penalized = vec![true; design.cols()];
    penalized[0] = false;
    let problem = BinomialProblem::new(&design, &successes, &trials, &penalized, cfg.ridge_lambda)?;
    let newton = NewtonConfig { max_iterations: cfg.max_iterations, tolerance: cfg.tolerance };
    let fit = minimize(&problem, vec![0.0; design.cols()], &newton)?;
    if !fit.converged {
        log::debug!(
            "logistic fit stopped after {} iterations with gradient norm {:.3e}",
            fit.iterations,
            fit.gradient_norm
        );
    }
    Ok((BinaryModel::new(fit.weights.clone())?, fit))
}

/// Minimizes the mean logistic loss plus `lambda / 2 * |w|^2` over the
/// non-intercept weights.
pub fn train_binary(features: &[Vec<f64>], targets: &[bool], cfg: &BaseLearnerConfig) -> Result<BinaryModel> {
    Ok(train_binary_with_report(features, targets, cfg)?.0)
}

pub fn predict_binary(m: &BinaryModel, x: &[f64]) -> Result<f64> {
    if x.len() != m.input_dim() {
        return Err(Error::DimensionMismatch { expected: m.input_dim(), got: x.len() });
    }
    Ok(sigmoid(m.logit_unchecked(x)))
}

/// Per-feature affine map to zero mean and unit variance on the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    /// Constant columns keep scale 1.
    pub fn fit(features: &[Vec<f64>]) -> Result<Self> {
        let n = features.len();
        if n == 0 {
            return Err(Error::invalid("cannot standardize an empty matrix"));
        }
        let dim = features[0].len();
        let mut mean = vec![0.0; dim];
        for r in features {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; dim];
        for r in features {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect())
    }
}
