//! Similarity metrics between labelsets and their expectations under a
//! labelset distribution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelset::{Labelset, LabelsetDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "hs")]
    HammingSimilarity,
    #[serde(rename = "em")]
    ExactMatch,
    #[serde(rename = "js")]
    JaccardSimilarity,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::HammingSimilarity, Metric::ExactMatch, Metric::JaccardSimilarity];

    pub fn tag(&self) -> &'static str {
        match self {
            Metric::HammingSimilarity => "hs",
            Metric::ExactMatch => "em",
            Metric::JaccardSimilarity => "js",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hs" | "hamming" => Ok(Metric::HammingSimilarity),
            "em" | "exact" => Ok(Metric::ExactMatch),
            "js" | "jaccard" => Ok(Metric::JaccardSimilarity),
            other => Err(Error::Unknown { kind: "metric", name: other.to_string() }),
        }
    }
}

fn check_pair(a: &Labelset, b: &Labelset) -> Result<()> {
    if a.label_count() != b.label_count() {
        return Err(Error::LabelMismatch { expected: a.label_count(), got: b.label_count() });
    }
    Ok(())
}

#[inline]
fn similarity_unchecked(metric: Metric, a: &Labelset, b: &Labelset) -> f64 {
    match metric {
        Metric::HammingSimilarity => {
            let labels = a.label_count();
            let mismatches = (a.raw() ^ b.raw()).count_ones() as usize;
            (labels - mismatches) as f64 / labels as f64
        }
        Metric::ExactMatch => (a.raw() == b.raw()) as u8 as f64,
        Metric::JaccardSimilarity => {
            let union = (a.raw() | b.raw()).count_ones();
            if union == 0 {
                1.0
            } else {
                (a.raw() & b.raw()).count_ones() as f64 / union as f64
            }
        }
    }
}

/// Per-pair similarity in `[0, 1]`. Jaccard of two empty labelsets is 1.
pub fn similarity(metric: Metric, a: &Labelset, b: &Labelset) -> Result<f64> {
    check_pair(a, b)?;
    Ok(similarity_unchecked(metric, a, b))
}

/// Expected similarity of `candidate` against a labelset drawn from `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedAccuracy {
    pub value: f64,
    pub metric: Metric,
}

pub fn expected_accuracy(d: &LabelsetDistribution, candidate: &Labelset, metric: Metric) -> Result<ExpectedAccuracy> {
    if candidate.label_count() != d.label_count() {
        return Err(Error::LabelMismatch { expected: d.label_count(), got: candidate.label_count() });
    }
    let value = d
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(y, p)| p * similarity_unchecked(metric, candidate, &y))
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Ok(ExpectedAccuracy { value, metric })
}

fn brute_force_best(d: &LabelsetDistribution, metric: Metric) -> (Labelset, f64) {
    let labels = d.label_count();
    let support: Vec<(Labelset, f64)> = d.iter().filter(|(_, p)| *p > 0.0).collect();
    let mut best = (Labelset::empty(labels).expect("valid label count"), f64::NEG_INFINITY);
    for k in 0..d.len() {
        let c = Labelset::from_index(k, labels).expect("index in range");
        let value: f64 = support.iter().map(|(y, p)| p * similarity_unchecked(metric, &c, y)).sum();
        if value > best.1 {
            best = (c, value);
        }
    }
    best
}

/// Labelset maximizing expected accuracy, with ties going to the lowest index.
///
/// Exact match reduces to the mode and Hamming similarity to per-label
/// thresholding of the marginals; Jaccard is solved by enumeration.
pub fn best_prediction(d: &LabelsetDistribution, metric: Metric) -> (Labelset, ExpectedAccuracy) {
    let choice = match metric {
        Metric::ExactMatch => d.mode(),
        Metric::HammingSimilarity => d.marginals().threshold(),
        Metric::JaccardSimilarity => brute_force_best(d, metric).0,
    };
    let expected = expected_accuracy(d, &choice, metric).expect("label counts agree");
    if cfg!(debug_assertions) && metric != Metric::JaccardSimilarity && d.label_count() <= 8 {
        let (_, brute) = brute_force_best(d, metric);
        debug_assert!(
            (brute - expected.value).abs() < 1e-9,
            "fast path for {metric} disagrees with enumeration: {} vs {brute}",
            expected.value
        );
    }
    (choice, expected)
}

/// Mean per-pair similarity over a dataset.
pub fn dataset_accuracy(metric: Metric, truths: &[Labelset], preds: &[Labelset]) -> Result<f64> {
    if truths.is_empty() {
        return Err(Error::invalid("dataset accuracy of an empty list"));
    }
    if truths.len() != preds.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), got: preds.len() });
    }
    let mut total = 0.0;
    for (t, p) in truths.iter().zip(preds) {
        total += similarity(metric, t, p)?;
    }
    Ok(total / truths.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table1;
    use crate::labelset::random_distribution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ls(v: &[u8]) -> Labelset {
        Labelset::from_slice(v).unwrap()
    }

    #[test]
    fn similarity_examples() {
        let (a, b) = (ls(&[0, 1, 1]), ls(&[0, 1, 0]));
        assert!((similarity(Metric::HammingSimilarity, &a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(similarity(Metric::JaccardSimilarity, &a, &b).unwrap(), 0.5);
        let z = ls(&[0, 0, 0]);
        for m in Metric::ALL {
            assert_eq!(similarity(m, &z, &z).unwrap(), 1.0);
        }
        assert!(similarity(Metric::ExactMatch, &a, &ls(&[0, 1])).is_err());
    }

    // Table 1 expected-accuracy columns (HS, EM, JS) for rows i = 1..8.
    const TABLE1: [[f64; 3]; 8] = [
        [0.611, 0.000, 0.000],
        [0.500, 0.333, 0.333],
        [0.556, 0.250, 0.333],
        [0.444, 0.000, 0.347],
        [0.556, 0.250, 0.333],
        [0.444, 0.000, 0.347],
        [0.500, 0.167, 0.417],
        [0.389, 0.000, 0.389],
    ];

    #[test]
    fn table1_expected_accuracy() {
        let d = table1();
        for (k, row) in TABLE1.iter().enumerate() {
            let c = Labelset::from_index(k, 3).unwrap();
            for (m, &want) in [Metric::HammingSimilarity, Metric::ExactMatch, Metric::JaccardSimilarity].iter().zip(row) {
                let got = expected_accuracy(&d, &c, *m).unwrap().value;
                assert!((got - want).abs() < 5e-4, "row {k} {m}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn table1_best_predictions() {
        let d = table1();
        let (y, e) = best_prediction(&d, Metric::HammingSimilarity);
        assert_eq!((y.to_vec(), (e.value * 1000.0).round()), (vec![0, 0, 0], 611.0));
        let (y, e) = best_prediction(&d, Metric::ExactMatch);
        assert_eq!((y.to_vec(), (e.value * 1000.0).round()), (vec![0, 0, 1], 333.0));
        let (y, e) = best_prediction(&d, Metric::JaccardSimilarity);
        assert_eq!((y.to_vec(), (e.value * 1000.0).round()), (vec![1, 1, 0], 417.0));
    }

    #[test]
    fn dataset_accuracy_examples() {
        let truths = [ls(&[0, 1]), ls(&[1, 1])];
        let preds = [ls(&[0, 1]), ls(&[0, 1])];
        assert_eq!(dataset_accuracy(Metric::ExactMatch, &truths, &truths).unwrap(), 1.0);
        assert_eq!(dataset_accuracy(Metric::ExactMatch, &truths, &preds).unwrap(), 0.5);
        assert_eq!(dataset_accuracy(Metric::HammingSimilarity, &truths, &preds).unwrap(), 0.75);
        assert!(dataset_accuracy(Metric::ExactMatch, &[], &[]).is_err());
        assert!(dataset_accuracy(Metric::ExactMatch, &truths, &preds[..1]).is_err());
    }

    #[test]
    fn fast_paths_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let d = random_distribution(rng.random_range(1..=6), &mut rng);
            for m in [Metric::ExactMatch, Metric::HammingSimilarity] {
                let (_, fast) = best_prediction(&d, m);
                let (_, brute) = brute_force_best(&d, m);
                assert!((fast.value - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn point_mass_and_em_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let labels = rng.random_range(1..=5);
            let y = Labelset::from_index(rng.random_range(0..1 << labels), labels).unwrap();
            let pm = LabelsetDistribution::point_mass(&y);
            for m in Metric::ALL {
                assert_eq!(expected_accuracy(&pm, &y, m).unwrap().value, 1.0);
            }
            let d = random_distribution(labels, &mut rng);
            for (c, p) in d.iter() {
                assert_eq!(expected_accuracy(&d, &c, Metric::ExactMatch).unwrap().value, p);
            }
        }
    }

    #[test]
    fn symmetric_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let labels = rng.random_range(1..=5);
            let a = Labelset::from_index(rng.random_range(0..1 << labels), labels).unwrap();
            let b = Labelset::from_index(rng.random_range(0..1 << labels), labels).unwrap();
            for m in Metric::ALL {
                assert_eq!(similarity(m, &a, &b).unwrap(), similarity(m, &b, &a).unwrap());
            }
            let d1 = random_distribution(labels, &mut rng);
            let d2 = random_distribution(labels, &mut rng);
            let alpha: f64 = rng.random();
            let mix = LabelsetDistribution::mixture(&[(alpha, &d1), (1.0 - alpha, &d2)]).unwrap();
            for m in Metric::ALL {
                let e1 = expected_accuracy(&d1, &a, m).unwrap().value;
                let e2 = expected_accuracy(&d2, &a, m).unwrap().value;
                let em = expected_accuracy(&mix, &a, m).unwrap().value;
                assert!((em - (alpha * e1 + (1.0 - alpha) * e2)).abs() < 1e-12);
            }
        }
    }
}
