//! Multi-label models that emit the full joint over labelsets.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::{train_binary, BaseLearnerConfig, BinaryModel, Standardizer};
use crate::data::MLDataset;
use crate::error::{Error, Result};
use crate::labelset::{check_label_count, LabelsetDistribution, MarginalVector};
use crate::optim::sigmoid;
use crate::seeding::stream_rng;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Independent,
    Chain,
    EnsembleOfChains,
}

/// One chain. `order[j]` is the (0-based) label predicted at step `j`; the
/// model at step `j` sees the standardized features followed by the labels
/// `order[..j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    pub order: Vec<usize>,
    pub models: Vec<BinaryModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Independent { models: Vec<BinaryModel> },
    Chain(ChainModel),
    EnsembleOfChains { members: Vec<ChainModel> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelModel {
    pub format_version: u32,
    pub label_count: usize,
    pub feature_count: usize,
    pub label_names: Vec<String>,
    pub standardizer: Standardizer,
    pub body: ModelBody,
}

fn check_order(order: &[usize], labels: usize) -> Result<()> {
    let mut seen = vec![false; labels];
    if order.len() != labels {
        return Err(Error::invalid(format!("label order has {} entries for L = {labels}", order.len())));
    }
    for &o in order {
        if o >= labels || seen[o] {
            return Err(Error::invalid(format!("label order {order:?} is not a permutation")));
        }
        seen[o] = true;
    }
    Ok(())
}

impl ChainModel {
    fn validate(&self, labels: usize, features: usize) -> Result<()> {
        check_order(&self.order, labels)?;
        if self.models.len() != labels {
            return Err(Error::DimensionMismatch { expected: labels, got: self.models.len() });
        }
        for (j, m) in self.models.iter().enumerate() {
            if m.input_dim() != features + j {
                return Err(Error::DimensionMismatch { expected: features + j, got: m.input_dim() });
            }
        }
        Ok(())
    }

    /// Exact joint by walking all 2^L root-to-leaf paths.
    fn joint(&self, z: &[f64], labels: usize) -> Vec<f64> {
        fn walk(chain: &ChainModel, labels: usize, input: &mut Vec<f64>, depth: usize, mass: f64, index: usize, out: &mut [f64]) {
            if depth == labels {
                out[index] += mass;
                return;
            }
            let q = sigmoid(chain.models[depth].logit_unchecked(input));
            let bit = 1usize << (labels - 1 - chain.order[depth]);
            for (value, p) in [(0.0, 1.0 - q), (1.0, q)] {
                input.push(value);
                let next = if value == 1.0 { index | bit } else { index };
                walk(chain, labels, input, depth + 1, mass * p, next, out);
                input.pop();
            }
        }
        let mut out = vec![0.0; 1 << labels];
        let mut input = Vec::with_capacity(z.len() + labels);
        input.extend_from_slice(z);
        walk(self, labels, &mut input, 0, 1.0, 0, &mut out);
        out
    }
}

impl MultiLabelModel {
    pub fn kind(&self) -> ClassifierKind {
        match self.body {
            ModelBody::Independent { .. } => ClassifierKind::Independent,
            ModelBody::Chain(_) => ClassifierKind::Chain,
            ModelBody::EnsembleOfChains { .. } => ClassifierKind::EnsembleOfChains,
        }
    }

    fn assemble(body: ModelBody, labels: usize, standardizer: Standardizer, label_names: Vec<String>) -> Result<Self> {
        let m = Self {
            format_version: MODEL_FORMAT_VERSION,
            label_count: labels,
            feature_count: standardizer.dim(),
            label_names,
            standardizer,
            body,
        };
        m.validate()?;
        Ok(m)
    }

    fn default_names(labels: usize) -> Vec<String> {
        (1..=labels).map(|j| format!("y{j}")).collect()
    }

    /// Independent model over raw (unstandardized) features.
    pub fn from_independent(models: Vec<BinaryModel>, feature_count: usize) -> Result<Self> {
        let labels = models.len();
        check_label_count(labels)?;
        Self::assemble(
            ModelBody::Independent { models },
            labels,
            Standardizer::identity(feature_count),
            Self::default_names(labels),
        )
    }

    /// Chain over raw (unstandardized) features.
    pub fn from_chain(order: Vec<usize>, models: Vec<BinaryModel>, feature_count: usize) -> Result<Self> {
        let labels = models.len();
        check_label_count(labels)?;
        Self::assemble(
            ModelBody::Chain(ChainModel { order, models }),
            labels,
            Standardizer::identity(feature_count),
            Self::default_names(labels),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported model format version {}", self.format_version)));
        }
        check_label_count(self.label_count)?;
        if self.label_names.len() != self.label_count {
            return Err(Error::DimensionMismatch { expected: self.label_count, got: self.label_names.len() });
        }
        if self.standardizer.dim() != self.feature_count || self.standardizer.scale.len() != self.feature_count {
            return Err(Error::DimensionMismatch { expected: self.feature_count, got: self.standardizer.dim() });
        }
        if self.standardizer.scale.iter().chain(&self.standardizer.mean).any(|v| !v.is_finite())
            || self.standardizer.scale.iter().any(|s| *s <= 0.0)
        {
            return Err(Error::invalid("invalid standardization constants"));
        }
        match &self.body {
            ModelBody::Independent { models } => {
                if models.len() != self.label_count {
                    return Err(Error::DimensionMismatch { expected: self.label_count, got: models.len() });
                }
                for m in models {
                    if m.input_dim() != self.feature_count {
                        return Err(Error::DimensionMismatch { expected: self.feature_count, got: m.input_dim() });
                    }
                }
            }
            ModelBody::Chain(c) => c.validate(self.label_count, self.feature_count)?,
            ModelBody::EnsembleOfChains { members } => {
                if members.is_empty() {
                    return Err(Error::invalid("ensemble has no members"));
                }
                for c in members {
                    c.validate(self.label_count, self.feature_count)?;
                }
            }
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<LabelsetDistribution> {
        let z = self.standardizer.apply(x)?;
        let labels = self.label_count;
        match &self.body {
            ModelBody::Independent { models } => {
                let m = models.iter().map(|b| sigmoid(b.logit_unchecked(&z))).collect();
                Ok(LabelsetDistribution::from_marginals(&MarginalVector::new(m)?))
            }
            ModelBody::Chain(c) => LabelsetDistribution::new(c.joint(&z, labels), labels),
            ModelBody::EnsembleOfChains { members } => {
                let mut acc = vec![0.0; 1 << labels];
                for c in members {
                    for (a, p) in acc.iter_mut().zip(c.joint(&z, labels)) {
                        *a += p;
                    }
                }
                let m = members.len() as f64;
                acc.iter_mut().for_each(|a| *a /= m);
                LabelsetDistribution::new(acc, labels)
            }
        }
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<LabelsetDistribution>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }
}

fn standardized(ds: &MLDataset) -> Result<(Standardizer, Vec<Vec<f64>>)> {
    let s = Standardizer::fit(&ds.features)?;
    let z = ds.features.iter().map(|x| s.apply(x)).collect::<Result<Vec<_>>>()?;
    Ok((s, z))
}

fn fit_chain(z: &[Vec<f64>], ds: &MLDataset, order: &[usize], cfg: &BaseLearnerConfig) -> Result<ChainModel> {
    let models = (0..order.len())
        .into_par_iter()
        .map(|j| {
            let inputs: Vec<Vec<f64>> = z
                .iter()
                .zip(&ds.labelsets)
                .map(|(x, y)| {
                    let mut row = x.clone();
                    row.extend(order[..j].iter().map(|&l| y.get(l) as u8 as f64));
                    row
                })
                .collect();
            let targets: Vec<bool> = ds.labelsets.iter().map(|y| y.get(order[j])).collect();
            train_binary(&inputs, &targets, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainModel { order: order.to_vec(), models })
}

pub fn train_independent(ds: &MLDataset, cfg: &BaseLearnerConfig) -> Result<MultiLabelModel> {
    let (s, z) = standardized(ds)?;
    let models = (0..ds.label_count())
        .into_par_iter()
        .map(|j| {
            let targets: Vec<bool> = ds.labelsets.iter().map(|y| y.get(j)).collect();
            train_binary(&z, &targets, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiLabelModel::assemble(ModelBody::Independent { models }, ds.label_count(), s, ds.label_names.clone())
}

/// `order` is a 0-based permutation of the labels.
pub fn train_chain(ds: &MLDataset, order: &[usize], cfg: &BaseLearnerConfig) -> Result<MultiLabelModel> {
    check_order(order, ds.label_count())?;
    let (s, z) = standardized(ds)?;
    let chain = fit_chain(&z, ds, order, cfg)?;
    MultiLabelModel::assemble(ModelBody::Chain(chain), ds.label_count(), s, ds.label_names.clone())
}

/// Label orders of the `members` chains drawn from `seed`.
pub fn ensemble_orders(labels: usize, members: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = stream_rng(seed, 0xecc);
    (0..members)
        .map(|_| {
            let mut order: Vec<usize> = (0..labels).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect()
}

/// Every member sees all training rows; only the label orders differ.
pub fn train_ensemble(ds: &MLDataset, members: usize, seed: u64, cfg: &BaseLearnerConfig) -> Result<MultiLabelModel> {
    if members == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    let (s, z) = standardized(ds)?;
    let chains = ensemble_orders(ds.label_count(), members, seed)
        .par_iter()
        .map(|order| fit_chain(&z, ds, order, cfg))
        .collect::<Result<Vec<_>>>()?;
    MultiLabelModel::assemble(ModelBody::EnsembleOfChains { members: chains }, ds.label_count(), s, ds.label_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, Dependence, SynthConfig};

    fn b(w: &[f64]) -> BinaryModel {
        BinaryModel::new(w.to_vec()).unwrap()
    }

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    #[test]
    fn hand_chain_joint() {
        // Single dummy feature fixed at 0; step 2 reads y1 through its last weight.
        let m = MultiLabelModel::from_chain(
            vec![0, 1],
            vec![b(&[logit(0.6), 0.0]), b(&[logit(0.2), 0.0, logit(0.9) - logit(0.2)])],
            1,
        )
        .unwrap();
        let d = m.predict(&[0.0]).unwrap();
        for (got, want) in d.probs().iter().zip([0.32, 0.08, 0.06, 0.54]) {
            assert!((got - want).abs() < 1e-12, "{:?}", d.probs());
        }
    }

    #[test]
    fn reversed_order_writes_correct_bits() {
        // Label 2 first with P = 0.7, then label 1 certain regardless.
        let m = MultiLabelModel::from_chain(vec![1, 0], vec![b(&[logit(0.7)]), b(&[40.0, 0.0])], 0).unwrap();
        let d = m.predict(&[]).unwrap();
        assert!((d.probs()[2] - 0.3).abs() < 1e-12);
        assert!((d.probs()[3] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn chain_ignoring_parents_equals_independent() {
        let ind = MultiLabelModel::from_independent(vec![b(&[0.3, 1.0]), b(&[-1.0, 0.5]), b(&[0.2, -2.0])], 1).unwrap();
        let chain = MultiLabelModel::from_chain(
            vec![0, 1, 2],
            vec![b(&[0.3, 1.0]), b(&[-1.0, 0.5, 0.0]), b(&[0.2, -2.0, 0.0, 0.0])],
            1,
        )
        .unwrap();
        let (a, c) = (ind.predict(&[0.7]).unwrap(), chain.predict(&[0.7]).unwrap());
        for (x, y) in a.probs().iter().zip(c.probs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_examples() {
        let m = MultiLabelModel::from_independent(vec![b(&[40.0]), b(&[-40.0])], 0).unwrap();
        assert!((m.predict(&[]).unwrap().probs()[2] - 1.0).abs() < 1e-12);
        let u = MultiLabelModel::from_independent(vec![b(&[0.0]); 3], 0).unwrap();
        assert!(u.predict(&[]).unwrap().probs().iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn validation_catches_bad_models() {
        assert!(MultiLabelModel::from_chain(vec![0, 0], vec![b(&[0.0]), b(&[0.0, 0.0])], 0).is_err());
        assert!(MultiLabelModel::from_chain(vec![0, 1], vec![b(&[0.0]), b(&[0.0])], 0).is_err());
        let m = MultiLabelModel::from_independent(vec![b(&[0.0, 1.0])], 1).unwrap();
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn trained_models_are_deterministic_and_round_trip() {
        let (ds, _) = synth_generate(&SynthConfig::new(3, 300, Dependence::Chain, 9)).unwrap();
        let cfg = BaseLearnerConfig::default();
        let a = train_ensemble(&ds, 4, 1, &cfg).unwrap();
        let b = train_ensemble(&ds, 4, 1, &cfg).unwrap();
        assert_eq!(a, b);
        let back = MultiLabelModel::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
        for x in ds.features.iter().take(20) {
            let d = a.predict(x).unwrap();
            assert_eq!(d, back.predict(x).unwrap());
            assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_member_ensemble_is_its_chain() {
        let (ds, _) = synth_generate(&SynthConfig::new(3, 200, Dependence::Chain, 2)).unwrap();
        let cfg = BaseLearnerConfig::default();
        let e = train_ensemble(&ds, 1, 5, &cfg).unwrap();
        let order = ensemble_orders(3, 1, 5).remove(0);
        let c = train_chain(&ds, &order, &cfg).unwrap();
        for x in ds.features.iter().take(10) {
            assert_eq!(e.predict(x).unwrap(), c.predict(x).unwrap());
        }
    }
}
