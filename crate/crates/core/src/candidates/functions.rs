use super::{CandidateKind, ConfidenceFunction};
use crate::labelset::LabelsetDistribution;

fn powerset_size(d: &LabelsetDistribution) -> f64 {
    d.len() as f64
}

fn top_two(d: &LabelsetDistribution) -> (f64, f64) {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &p in d.probs() {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    (first, second)
}

fn sum_of_squares(d: &LabelsetDistribution) -> f64 {
    d.probs().iter().map(|p| p * p).sum()
}

/// Probability of the mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighProbability;

impl ConfidenceFunction for HighProbability {
    fn kind(&self) -> CandidateKind {
        CandidateKind::HP
    }

    fn raw(&self, d: &LabelsetDistribution) -> f64 {
        top_two(d).0
    }

    fn normalized(&self, d: &LabelsetDistribution) -> f64 {
        let n = powerset_size(d);
        (n * self.raw(d) - 1.0) / (n - 1.0)
    }
}

/// Gap between the two largest probabilities. Ties at the top give 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopGap;

impl ConfidenceFunction for TopGap {
    fn kind(&self) -> CandidateKind {
        CandidateKind::TG
    }

    fn raw(&self, d: &LabelsetDistribution) -> f64 {
        let (first, second) = top_two(d);
        first - second
    }

    fn normalized(&self, d: &LabelsetDistribution) -> f64 {
        self.raw(d)
    }
}

/// One minus Shannon entropy normalized by `ln 2^L`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShannonEntropy;

impl ConfidenceFunction for ShannonEntropy {
    fn kind(&self) -> CandidateKind {
        CandidateKind::SE
    }

    fn raw(&self, d: &LabelsetDistribution) -> f64 {
        // 0 ln 0 = 0: zero entries contribute nothing.
        -d.probs().iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    }

    fn normalized(&self, d: &LabelsetDistribution) -> f64 {
        1.0 - self.raw(d) / powerset_size(d).ln()
    }
}

/// Rényi entropy of order 2.
#[derive(Debug, Clone, Copy, Default)]
pub struct CollisionEntropy;

impl ConfidenceFunction for CollisionEntropy {
    fn kind(&self) -> CandidateKind {
        CandidateKind::CE
    }

    fn raw(&self, d: &LabelsetDistribution) -> f64 {
        -sum_of_squares(d).ln()
    }

    fn normalized(&self, d: &LabelsetDistribution) -> f64 {
        1.0 - self.raw(d) / powerset_size(d).ln()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MinEntropy;

impl ConfidenceFunction for MinEntropy {
    fn kind(&self) -> CandidateKind {
        CandidateKind::ME
    }

    fn raw(&self, d: &LabelsetDistribution) -> f64 {
        -top_two(d).0.ln()
    }

    fn normalized(&self, d: &LabelsetDistribution) -> f64 {
        1.0 - self.raw(d) / powerset_size(d).ln()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GiniImpurity;

impl ConfidenceFunction for GiniImpurity {
    fn kind(&self) -> CandidateKind {
        CandidateKind::GI
    }

    fn raw(&self, d: &LabelsetDistribution) -> f64 {
        d.probs().iter().map(|p| p * (1.0 - p)).sum()
    }

    fn normalized(&self, d: &LabelsetDistribution) -> f64 {
        1.0 - self.raw(d) / (1.0 - 1.0 / powerset_size(d))
    }
}

/// Chi-squared distance from the uniform distribution.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChiSquared;

impl ChiSquared {
    fn squared_deviation(d: &LabelsetDistribution) -> f64 {
        let u = 1.0 / powerset_size(d);
        d.probs().iter().map(|p| (p - u) * (p - u)).sum()
    }
}

impl ConfidenceFunction for ChiSquared {
    fn kind(&self) -> CandidateKind {
        CandidateKind::CS
    }

    fn raw(&self, d: &LabelsetDistribution) -> f64 {
        Self::squared_deviation(d) * powerset_size(d)
    }

    fn normalized(&self, d: &LabelsetDistribution) -> f64 {
        Self::squared_deviation(d) / (1.0 - 1.0 / powerset_size(d))
    }
}
