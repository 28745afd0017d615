//! Command-line experiment runner.
//!
//! Commands and exit codes:
//!
//! | command            | output                                                         |
//! |--------------------|----------------------------------------------------------------|
//! | `ingest`           | dataset statistics as JSON on stdout                           |
//! | `run`              | every table below plus models and synthetic data dumps         |
//! | `analyze-relative` | instances, Kendall correlations, regression, top-k             |
//! | `analyze-absolute` | instances, Pearson correlations, regression                    |
//! | `calibrate`        | instances, interval table, reliability curve                   |
//! | `score`            | per-metric predictions, expected accuracies and scores as JSON |
//! | `report`           | text summary of an output directory                            |
//!
//! Exit status is 0 on success, 2 for configuration errors, 3 for data
//! errors, 4 for numeric failures and 1 for other I/O failures.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use config::RunConfig;
pub use error::CliError;
