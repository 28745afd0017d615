//! Multi-label datasets: ARFF ingestion, statistics, splits, synthetic
//! generation and tabular export.

mod arff;
mod export;
mod synth;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelset::Labelset;
use crate::seeding::stream_rng;

pub use arff::{parse_arff, parse_arff_file, LabelSpec};
pub use export::{export_table, fmt6, read_json_table, write_arff, TableFormat, TableRow};
pub use synth::{synth_generate, Dependence, SynthConfig, MAX_SYNTH_LABELS};

/// Feature matrix plus one labelset per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MLDataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub labelsets: Vec<Labelset>,
    pub label_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl MLDataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<Vec<f64>>,
        labelsets: Vec<Labelset>,
        label_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::invalid("dataset has no instances"));
        }
        if features.len() != labelsets.len() {
            return Err(Error::DimensionMismatch { expected: features.len(), got: labelsets.len() });
        }
        for row in &features {
            if row.len() != feature_names.len() {
                return Err(Error::DimensionMismatch { expected: feature_names.len(), got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite feature value"));
            }
        }
        for y in &labelsets {
            if y.label_count() != label_names.len() {
                return Err(Error::LabelMismatch { expected: label_names.len(), got: y.label_count() });
            }
        }
        Ok(Self { name: name.into(), features, labelsets, label_names, feature_names })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn label_count(&self) -> usize {
        self.label_names.len()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    /// Rows `indices`, in the order given.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labelsets: indices.iter().map(|&i| self.labelsets[i]).collect(),
            label_names: self.label_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Column `j` of the label matrix as 0/1 targets.
    pub fn label_column(&self, j: usize) -> Vec<bool> {
        self.labelsets.iter().map(|y| y.get(j)).collect()
    }
}

/// Summary statistics of a dataset (label count, combinations, cardinality,
/// feature count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    #[serde(rename = "N")]
    pub instances: usize,
    #[serde(rename = "L")]
    pub labels: usize,
    #[serde(rename = "M")]
    pub features: usize,
    pub label_cardinality: f64,
    pub distinct_combinations: usize,
}

pub fn dataset_stats(ds: &MLDataset) -> DatasetStats {
    let total: usize = ds.labelsets.iter().map(|y| y.cardinality()).sum();
    let distinct: HashSet<usize> = ds.labelsets.iter().map(|y| y.index()).collect();
    DatasetStats {
        name: ds.name.clone(),
        instances: ds.len(),
        labels: ds.label_count(),
        features: ds.feature_count(),
        label_cardinality: total as f64 / ds.len() as f64,
        distinct_combinations: distinct.len(),
    }
}

/// Seeded partition of `0..n`: the first `ceil(fraction * n)` shuffled
/// indices go to the training side. Both sides come back sorted.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction {fraction} not in (0, 1)")));
    }
    let train_size = (fraction * n as f64).ceil() as usize;
    if train_size == 0 || train_size >= n {
        return Err(Error::invalid(format!(
            "split of {n} rows at fraction {fraction} leaves an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, 0x5b11));
    let mut train = idx[..train_size].to_vec();
    let mut test = idx[train_size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(ds: &MLDataset, fraction: f64, seed: u64) -> Result<(MLDataset, MLDataset)> {
    let (train, test) = split_indices(ds.len(), fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(labelsets: &[&[u8]]) -> MLDataset {
        let n = labelsets.len();
        let l = labelsets[0].len();
        MLDataset::new(
            "toy",
            (0..n).map(|i| vec![i as f64]).collect(),
            labelsets.iter().map(|y| Labelset::from_slice(y).unwrap()).collect(),
            (0..l).map(|j| format!("y{j}")).collect(),
            vec!["x".into()],
        )
        .unwrap()
    }

    #[test]
    fn stats_examples() {
        let s = dataset_stats(&toy(&[&[0, 0], &[0, 0]]));
        assert_eq!(s.label_cardinality, 0.0);
        let s = dataset_stats(&toy(&[&[0, 1], &[0, 1]]));
        assert_eq!(s.distinct_combinations, 1);
        assert_eq!(s.label_cardinality, 1.0);
        let s = dataset_stats(&toy(&[&[1, 1], &[0, 1], &[0, 0]]));
        assert_eq!((s.instances, s.labels, s.features, s.distinct_combinations), (3, 2, 1, 3));
    }

    #[test]
    fn split_examples() {
        let ds = toy(&[&[0u8][..]; 10]);
        let (a, b) = split(&ds, 0.5, 3).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        assert_eq!(split_indices(10, 0.5, 3).unwrap(), split_indices(10, 0.5, 3).unwrap());
        assert!(split_indices(2, 0.99, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
        assert_eq!(split_indices(10, 0.33, 0).unwrap().0.len(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn split_partitions(seed in any::<u64>(), n in 2usize..200, frac in 0.05f64..0.95) {
            if let Ok((train, test)) = split_indices(n, frac, seed) {
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert_eq!(train.len(), (frac * n as f64).ceil() as usize);
                prop_assert_eq!(split_indices(n, frac, seed).unwrap(), (train, test));
            }
        }
    }
}
