//! Relative (rank) and absolute (linear) association between confidence
//! scores and realized accuracy, and the regression analyses built on them.

mod correlation;
mod kendall;
mod ols;
mod table;
mod tdist;

pub use correlation::{fisher_z, pearson, FisherZ, FISHER_CLAMP};
pub use kendall::kendall_tau;
pub use ols::{
    ols, ols_fixed_effects, robustness_regression, stars, Baselines, Coefficient, RegressionResult,
    ROBUSTNESS_GRADIENTS,
};
pub use table::{
    correlation_table, significance_marker, topk_accuracy_curve, AnalysisRecord, BootstrapConfig, CorrelationMethod,
    CorrelationRow, InstanceGroup, TopKPoint, MIN_GROUP_SIZE,
};
pub use tdist::{student_t_cdf, student_t_two_sided_p};
