//! Labelsets and exact joint distributions over the label powerset.
//!
//! A labelset over `L` labels is stored as its powerset index. Label 1 is the
//! most significant bit, so for `L = 3` the index order is
//! `000, 001, 010, 011, 100, 101, 110, 111`. Every file format in this crate
//! uses the same convention.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported label count. Distributions are fully enumerated.
pub const MAX_LABELS: usize = 25;

/// Slack allowed on a distribution's total mass.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Negative entries at or above this value are treated as rounding noise.
pub const NEGATIVE_TOLERANCE: f64 = -1e-12;

pub(crate) fn check_label_count(labels: usize) -> Result<()> {
    if labels == 0 || labels > MAX_LABELS {
        return Err(Error::LabelCount(labels));
    }
    Ok(())
}

/// A binary relevance vector over `L` labels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labelset {
    index: u32,
    labels: u8,
}

impl Labelset {
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        check_label_count(bits.len())?;
        let index = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
        Ok(Self { index, labels: bits.len() as u8 })
    }

    /// Builds a labelset from 0/1 integers.
    pub fn from_slice(values: &[u8]) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::invalid(format!("label value {v} is not binary")));
        }
        let bits: Vec<bool> = values.iter().map(|&v| v == 1).collect();
        Self::from_bits(&bits)
    }

    pub fn from_index(index: usize, labels: usize) -> Result<Self> {
        check_label_count(labels)?;
        if index >= 1usize << labels {
            return Err(Error::IndexOutOfRange { index, labels });
        }
        Ok(Self { index: index as u32, labels: labels as u8 })
    }

    pub fn empty(labels: usize) -> Result<Self> {
        Self::from_index(0, labels)
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.index as usize
    }

    #[inline]
    pub fn label_count(&self) -> usize {
        self.labels as usize
    }

    /// Relevance of label `j` (0-based, label 1 is `j = 0`).
    #[inline]
    pub fn get(&self, j: usize) -> bool {
        debug_assert!(j < self.label_count());
        (self.index >> (self.label_count() - 1 - j)) & 1 == 1
    }

    pub fn with(mut self, j: usize, value: bool) -> Self {
        let mask = 1u32 << (self.label_count() - 1 - j);
        if value {
            self.index |= mask;
        } else {
            self.index &= !mask;
        }
        self
    }

    /// Number of relevant labels.
    #[inline]
    pub fn cardinality(&self) -> usize {
        self.index.count_ones() as usize
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.label_count()).map(|j| self.get(j)).collect()
    }

    pub fn to_vec(&self) -> Vec<u8> {
        (0..self.label_count()).map(|j| self.get(j) as u8).collect()
    }

    pub(crate) fn raw(&self) -> u32 {
        self.index
    }
}

impl fmt::Debug for Labelset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Labelset({self})")
    }
}

/// Renders as a bit string, label 1 first: `[0,1,1]` prints as `011`.
impl fmt::Display for Labelset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.label_count() {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Labelset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("invalid labelset character '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

impl Serialize for Labelset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Labelset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<u8>::deserialize(deserializer)?;
        Labelset::from_slice(&values).map_err(serde::de::Error::custom)
    }
}

pub fn labelset_to_index(y: &Labelset) -> usize {
    y.index()
}

pub fn index_to_labelset(index: usize, labels: usize) -> Result<Labelset> {
    Labelset::from_index(index, labels)
}

/// Per-label relevance probabilities `P(y_j = 1 | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalVector(Vec<f64>);

impl MarginalVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_label_count(values.len())?;
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("marginal probability {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Per-label threshold at 0.5; a marginal of exactly 0.5 maps to 0.
    pub fn threshold(&self) -> Labelset {
        let bits: Vec<bool> = self.0.iter().map(|&p| p > 0.5).collect();
        Labelset::from_bits(&bits).expect("marginal length already validated")
    }
}

/// Exact categorical distribution over all `2^L` labelsets for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelsetDistribution {
    labels: usize,
    probs: Vec<f64>,
}

impl LabelsetDistribution {
    /// Validates and normalizes a probability vector indexed by labelset index.
    pub fn new(probs: Vec<f64>, labels: usize) -> Result<Self> {
        check_label_count(labels)?;
        let size = 1usize << labels;
        if probs.len() != size {
            return Err(Error::InvalidDistribution(format!(
                "expected {size} entries for L = {labels}, got {}",
                probs.len()
            )));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite entry {p}")));
            }
            if *p < 0.0 {
                if *p < NEGATIVE_TOLERANCE {
                    return Err(Error::InvalidDistribution(format!("negative entry {p}")));
                }
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        // Sums within accumulated rounding of 1 are kept so that
        // reconstructing a stored distribution is exact.
        if (total - 1.0).abs() > f64::EPSILON * size as f64 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(Self { labels, probs })
    }

    pub fn uniform(labels: usize) -> Result<Self> {
        check_label_count(labels)?;
        let size = 1usize << labels;
        Ok(Self { labels, probs: vec![1.0 / size as f64; size] })
    }

    pub fn point_mass(y: &Labelset) -> Self {
        let mut probs = vec![0.0; 1usize << y.label_count()];
        probs[y.index()] = 1.0;
        Self { labels: y.label_count(), probs }
    }

    /// Product of independent per-label Bernoullis.
    pub fn from_marginals(m: &MarginalVector) -> Self {
        let labels = m.len();
        let mut probs = vec![1.0; 1usize << labels];
        // Build the product label by label; after processing label j the
        // first 2^(j+1) entries hold the joint over labels 1..=j+1.
        let mut filled = 1usize;
        for &p in m.as_slice() {
            for k in (0..filled).rev() {
                let base = probs[k];
                probs[2 * k] = base * (1.0 - p);
                probs[2 * k + 1] = base * p;
            }
            filled *= 2;
        }
        Self { labels, probs }
    }

    /// Mixture `sum_k w_k d_k` of distributions with a common label count.
    pub fn mixture(components: &[(f64, &LabelsetDistribution)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        let labels = first.1.labels;
        let mut probs = vec![0.0; 1usize << labels];
        for (w, d) in components {
            if d.labels != labels {
                return Err(Error::LabelMismatch { expected: labels, got: d.labels });
            }
            for (acc, p) in probs.iter_mut().zip(&d.probs) {
                *acc += w * p;
            }
        }
        Self::new(probs, labels)
    }

    #[inline]
    pub fn label_count(&self) -> usize {
        self.labels
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, y: &Labelset) -> f64 {
        self.probs[y.index()]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Iterates `(labelset, probability)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (Labelset, f64)> + '_ {
        let labels = self.labels as u8;
        self.probs
            .iter()
            .enumerate()
            .map(move |(k, &p)| (Labelset { index: k as u32, labels }, p))
    }

    pub fn marginals(&self) -> MarginalVector {
        let mut m = vec![0.0; self.labels];
        for (k, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, mj) in m.iter_mut().enumerate() {
                if (k >> (self.labels - 1 - j)) & 1 == 1 {
                    *mj += p;
                }
            }
        }
        m.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        MarginalVector(m)
    }

    /// Most probable labelset; ties go to the lowest index.
    pub fn mode(&self) -> Labelset {
        let mut best = 0usize;
        for (k, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = k;
            }
        }
        Labelset { index: best as u32, labels: self.labels as u8 }
    }

    /// JSON document `{"L": int, "probs": [...]}`, probabilities at 17
    /// significant digits.
    pub fn to_json(&self) -> String {
        let probs: Vec<String> = self.probs.iter().map(|p| format!("{p:.16e}")).collect();
        format!("{{\"L\":{},\"probs\":[{}]}}", self.labels, probs.join(","))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DistributionDoc = serde_json::from_str(text)?;
        Self::new(doc.probs, doc.labels)
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionDoc {
    #[serde(rename = "L")]
    labels: usize,
    probs: Vec<f64>,
}

impl Serialize for LabelsetDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionDoc { labels: self.labels, probs: self.probs.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelsetDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = DistributionDoc::deserialize(deserializer)?;
        LabelsetDistribution::new(doc.probs, doc.labels).map_err(serde::de::Error::custom)
    }
}

pub fn make_distribution(probs: Vec<f64>, labels: usize) -> Result<LabelsetDistribution> {
    LabelsetDistribution::new(probs, labels)
}

pub fn joint_from_marginals(m: &MarginalVector) -> LabelsetDistribution {
    LabelsetDistribution::from_marginals(m)
}

/// Draws a random distribution: flat Dirichlet weights, with roughly a
/// quarter of the entries zeroed so that sparse shapes are exercised too.
pub fn random_distribution<R: Rng + ?Sized>(labels: usize, rng: &mut R) -> LabelsetDistribution {
    let size = 1usize << labels;
    let sparse = rng.random_bool(0.5);
    let mut w: Vec<f64> = (0..size)
        .map(|_| {
            if sparse && rng.random_bool(0.25) {
                0.0
            } else {
                // Exponential(1) draws give a flat Dirichlet after normalization.
                -(1.0 - rng.random::<f64>()).ln()
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..size)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    LabelsetDistribution::new(w, labels).expect("weights normalized")
}
