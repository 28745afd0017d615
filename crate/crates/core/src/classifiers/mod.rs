//! Probabilistic multi-label classifiers: independent (binary relevance),
//! classifier chain and ensemble of chains, all over a ridge logistic base
//! learner and all emitting the exact joint over labelsets.
//!
//! Training strategies are looked up by name through a
//! [`ClassifierRegistry`].

mod logistic;
mod model;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::MLDataset;
use crate::error::{Error, Result};

pub use logistic::{
    predict_binary, train_binary, train_binary_with_report, BaseLearnerConfig, BinaryModel, Standardizer,
};
pub use model::{
    ensemble_orders, train_chain, train_ensemble, train_independent, ChainModel, ClassifierKind, ModelBody,
    MultiLabelModel, MODEL_FORMAT_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    #[serde(default)]
    pub base: BaseLearnerConfig,
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// 0-based label order for the single chain; natural order when absent.
    #[serde(default)]
    pub chain_order: Option<Vec<usize>>,
}

fn default_ensemble_size() -> usize {
    10
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { base: BaseLearnerConfig::default(), ensemble_size: default_ensemble_size(), seed: 0, chain_order: None }
    }
}

pub trait ClassifierStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn train(&self, ds: &MLDataset, opts: &TrainOptions) -> Result<MultiLabelModel>;
}

pub struct IndependentStrategy;
pub struct ChainStrategy;
pub struct EnsembleStrategy;

impl ClassifierStrategy for IndependentStrategy {
    fn name(&self) -> &'static str {
        "independent"
    }

    fn train(&self, ds: &MLDataset, opts: &TrainOptions) -> Result<MultiLabelModel> {
        train_independent(ds, &opts.base)
    }
}

impl ClassifierStrategy for ChainStrategy {
    fn name(&self) -> &'static str {
        "chain"
    }

    fn train(&self, ds: &MLDataset, opts: &TrainOptions) -> Result<MultiLabelModel> {
        let natural: Vec<usize> = (0..ds.label_count()).collect();
        train_chain(ds, opts.chain_order.as_deref().unwrap_or(&natural), &opts.base)
    }
}

impl ClassifierStrategy for EnsembleStrategy {
    fn name(&self) -> &'static str {
        "ecc"
    }

    fn train(&self, ds: &MLDataset, opts: &TrainOptions) -> Result<MultiLabelModel> {
        train_ensemble(ds, opts.ensemble_size, opts.seed, &opts.base)
    }
}

pub struct ClassifierRegistry {
    strategies: BTreeMap<&'static str, Box<dyn ClassifierStrategy>>,
}

impl ClassifierRegistry {
    pub fn empty() -> Self {
        Self { strategies: BTreeMap::new() }
    }

    pub fn register(&mut self, s: Box<dyn ClassifierStrategy>) {
        self.strategies.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ClassifierStrategy> {
        let key = name.trim().to_ascii_lowercase();
        self.strategies
            .get(key.as_str())
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::Unknown { kind: "classifier", name: name.to_string() })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.strategies.keys().copied()
    }
}

impl Default for ClassifierRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(IndependentStrategy));
        r.register(Box::new(ChainStrategy));
        r.register(Box::new(EnsembleStrategy));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let r = ClassifierRegistry::default();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["chain", "ecc", "independent"]);
        assert_eq!(r.get("ECC").unwrap().name(), "ecc");
        assert!(r.get("trellis").is_err());
    }
}
