//! Synthetic multi-label data with a known per-instance joint distribution.
//!
//! Features are standard normal. Each label follows a logistic model of the
//! features; under [`Dependence::Chain`] label `j` also depends on labels
//! `1..j` through additive logit terms, so the true joint is a classifier
//! chain in natural label order.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::MLDataset;
use crate::error::{Error, Result};
use crate::labelset::{Labelset, LabelsetDistribution, MarginalVector};
use crate::optim::sigmoid;
use crate::seeding::stream_rng;

pub const MAX_SYNTH_LABELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependence {
    Independent,
    Chain,
}

impl std::str::FromStr for Dependence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independent" => Ok(Dependence::Independent),
            "chain" => Ok(Dependence::Chain),
            other => Err(Error::Unknown { kind: "dependence", name: other.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub labels: usize,
    pub instances: usize,
    pub dependence: Dependence,
    pub seed: u64,
    #[serde(default = "default_features")]
    pub features: usize,
}

fn default_features() -> usize {
    4
}

impl SynthConfig {
    pub fn new(labels: usize, instances: usize, dependence: Dependence, seed: u64) -> Self {
        Self { labels, instances, dependence, seed, features: default_features() }
    }
}

struct LabelModel {
    bias: f64,
    weights: Vec<f64>,
    /// Logit shift from each earlier label being relevant.
    coupling: Vec<f64>,
}

/// Draws `(dataset, true joint per instance)`.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(MLDataset, Vec<LabelsetDistribution>)> {
    if cfg.labels == 0 || cfg.labels > MAX_SYNTH_LABELS {
        return Err(Error::invalid(format!("synthetic label count must be in 1..={MAX_SYNTH_LABELS}")));
    }
    if cfg.instances == 0 || cfg.features == 0 {
        return Err(Error::invalid("synthetic data needs at least one instance and one feature"));
    }
    let mut param_rng = stream_rng(cfg.seed, 1);
    let weight_dist = Normal::new(0.0, 1.5).expect("valid sd");
    let bias_dist = Normal::new(-0.5, 0.75).expect("valid sd");
    let models: Vec<LabelModel> = (0..cfg.labels)
        .map(|j| LabelModel {
            bias: bias_dist.sample(&mut param_rng),
            weights: (0..cfg.features).map(|_| weight_dist.sample(&mut param_rng)).collect(),
            coupling: match cfg.dependence {
                Dependence::Independent => vec![0.0; j],
                Dependence::Chain => (0..j).map(|_| weight_dist.sample(&mut param_rng)).collect(),
            },
        })
        .collect();

    let mut data_rng = stream_rng(cfg.seed, 2);
    let std_normal = Normal::new(0.0, 1.0).expect("valid sd");
    let mut features = Vec::with_capacity(cfg.instances);
    let mut labelsets = Vec::with_capacity(cfg.instances);
    let mut joints = Vec::with_capacity(cfg.instances);
    for _ in 0..cfg.instances {
        let x: Vec<f64> = (0..cfg.features).map(|_| std_normal.sample(&mut data_rng)).collect();
        let joint = true_joint(&models, &x, cfg.dependence)?;
        let y = sample_labelset(&joint, data_rng.random::<f64>());
        features.push(x);
        labelsets.push(y);
        joints.push(joint);
    }
    let label_names = (1..=cfg.labels).map(|j| format!("y{j}")).collect();
    let feature_names = (1..=cfg.features).map(|k| format!("x{k}")).collect();
    let name = match cfg.dependence {
        Dependence::Independent => "synth-independent",
        Dependence::Chain => "synth-chain",
    };
    let ds = MLDataset::new(name, features, labelsets, label_names, feature_names)?;
    Ok((ds, joints))
}

fn base_logit(m: &LabelModel, x: &[f64]) -> f64 {
    m.bias + m.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
}

fn true_joint(models: &[LabelModel], x: &[f64], dependence: Dependence) -> Result<LabelsetDistribution> {
    let labels = models.len();
    if dependence == Dependence::Independent {
        let m: Vec<f64> = models.iter().map(|m| sigmoid(base_logit(m, x))).collect();
        return Ok(LabelsetDistribution::from_marginals(&MarginalVector::new(m)?));
    }
    let base: Vec<f64> = models.iter().map(|m| base_logit(m, x)).collect();
    let mut probs = Vec::with_capacity(1 << labels);
    for k in 0..1usize << labels {
        let y = Labelset::from_index(k, labels)?;
        let mut p = 1.0;
        for (j, m) in models.iter().enumerate() {
            let logit = base[j] + (0..j).filter(|&i| y.get(i)).map(|i| m.coupling[i]).sum::<f64>();
            let q = sigmoid(logit);
            p *= if y.get(j) { q } else { 1.0 - q };
        }
        probs.push(p);
    }
    LabelsetDistribution::new(probs, labels)
}

/// Inverse-CDF draw from a joint given `u` in `[0, 1)`.
fn sample_labelset(d: &LabelsetDistribution, u: f64) -> Labelset {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &p) in d.probs().iter().enumerate() {
        if p > 0.0 {
            last_positive = k;
        }
        acc += p;
        if u < acc {
            return Labelset::from_index(k, d.label_count()).expect("index in range");
        }
    }
    Labelset::from_index(last_positive, d.label_count()).expect("index in range")
}
