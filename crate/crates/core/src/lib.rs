//! Confidence and expected accuracy for probabilistic multi-label
//! classifiers.
//!
//! Given a classifier's joint distribution over labelsets, this crate computes
//! metric-specific expected accuracy, seven candidate confidence scores, and
//! the association and calibration analyses that relate those scores to the
//! accuracy actually achieved.

pub mod association;
pub mod calibration;
pub mod candidates;
pub mod classifiers;
pub mod data;
pub mod error;
pub mod labelset;
pub mod metrics;
pub mod optim;
pub mod seeding;

pub use candidates::{CandidateKind, CandidateRegistry, ConfidenceFunction, ConfidenceScore};
pub use classifiers::{ClassifierRegistry, ClassifierStrategy, MultiLabelModel};
pub use data::MLDataset;
pub use error::{Error, Result};
pub use labelset::{Labelset, LabelsetDistribution, MarginalVector};
pub use metrics::{ExpectedAccuracy, Metric};

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::labelset::LabelsetDistribution;

    /// The worked L = 3 example distribution.
    pub fn table1() -> LabelsetDistribution {
        LabelsetDistribution::new(vec![0.0, 1.0 / 3.0, 0.25, 0.0, 0.25, 0.0, 1.0 / 6.0, 0.0], 3).unwrap()
    }
}
