//! Run configuration, read from TOML and overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mlconf_core::association::Baselines;
use mlconf_core::calibration::{FeatureSpec, DEFAULT_LAMBDA_GRID};
use mlconf_core::classifiers::{BaseLearnerConfig, ClassifierRegistry};
use mlconf_core::data::{Dependence, LabelSpec, TableFormat};
use mlconf_core::{CandidateKind, Metric};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub path: PathBuf,
    /// Overrides the ARFF relation name.
    #[serde(default)]
    pub name: Option<String>,
    /// `meka`, `-C k`, or a comma-separated list of label attribute names.
    #[serde(default)]
    pub labels: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub labels: usize,
    pub instances: usize,
    #[serde(default = "default_dependence")]
    pub dependence: Dependence,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub features: Option<usize>,
}

fn default_dependence() -> Dependence {
    Dependence::Chain
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerSection {
    pub ridge_lambda: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub ensemble_size: usize,
}

impl Default for LearnerSection {
    fn default() -> Self {
        let b = BaseLearnerConfig::default();
        Self { ridge_lambda: b.ridge_lambda, max_iterations: b.max_iterations, tolerance: b.tolerance, ensemble_size: 10 }
    }
}

impl LearnerSection {
    pub fn base(&self) -> BaseLearnerConfig {
        BaseLearnerConfig {
            ridge_lambda: self.ridge_lambda,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub folds: usize,
    pub grid: Vec<f64>,
    /// `mix` or a single candidate tag.
    pub features: String,
    pub train_fraction: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self { folds: 10, grid: DEFAULT_LAMBDA_GRID.to_vec(), features: "mix".to_string(), train_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_format")]
    pub format: TableFormat,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_candidates")]
    pub candidates: Vec<CandidateKind>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<String>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Fraction of each dataset used to train the classifiers.
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub baselines: Baselines,
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub synthetic: Vec<SyntheticEntry>,
}

fn default_replicates() -> usize {
    20
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_format() -> TableFormat {
    TableFormat::Csv
}
fn default_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}
fn default_candidates() -> Vec<CandidateKind> {
    CandidateKind::ALL.to_vec()
}
fn default_classifiers() -> Vec<String> {
    vec!["independent".to_string(), "chain".to_string(), "ecc".to_string()]
}
fn default_bootstrap() -> usize {
    1000
}
fn default_fraction() -> f64 {
    0.5
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

/// Flag values that override the corresponding config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<TableFormat>,
    pub replicates: Option<usize>,
    pub labels: Option<String>,
    pub classifiers: Vec<String>,
    pub metrics: Vec<Metric>,
    pub candidates: Vec<CandidateKind>,
}

impl RunConfig {
    /// Parses a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if let Some(r) = o.replicates {
            self.replicates = r;
        }
        if let Some(l) = &o.labels {
            for d in &mut self.datasets {
                d.labels = Some(l.clone());
            }
        }
        if !o.classifiers.is_empty() {
            self.classifiers = o.classifiers.clone();
        }
        if !o.metrics.is_empty() {
            self.metrics = o.metrics.clone();
        }
        if !o.candidates.is_empty() {
            self.candidates = o.candidates.clone();
        }
    }

    pub fn feature_spec(&self) -> Result<FeatureSpec, CliError> {
        self.calibration
            .features
            .parse()
            .map_err(|e| CliError::config(format!("calibration.features: {e}")))
    }

    pub fn label_spec(entry: &DatasetEntry) -> Result<LabelSpec, CliError> {
        match &entry.labels {
            None => Ok(LabelSpec::Meka),
            Some(s) => s.parse().map_err(|e| CliError::config(format!("labels for {}: {e}", entry.path.display()))),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.datasets.is_empty() && self.synthetic.is_empty() {
            return Err(CliError::config("no datasets configured"));
        }
        for d in &self.datasets {
            if !d.path.is_file() {
                return Err(CliError::config(format!("dataset {} does not exist", d.path.display())));
            }
            Self::label_spec(d)?;
        }
        for s in &self.synthetic {
            if s.labels == 0 || s.labels > mlconf_core::data::MAX_SYNTH_LABELS {
                return Err(CliError::config(format!(
                    "synthetic label count {} outside 1..={}",
                    s.labels,
                    mlconf_core::data::MAX_SYNTH_LABELS
                )));
            }
            if s.instances < 4 {
                return Err(CliError::config("synthetic datasets need at least 4 instances"));
            }
        }
        let registry = ClassifierRegistry::default();
        if self.classifiers.is_empty() {
            return Err(CliError::config("no classifiers configured"));
        }
        for c in &self.classifiers {
            registry.get(c).map_err(|e| CliError::config(e.to_string()))?;
        }
        if self.metrics.is_empty() || self.candidates.is_empty() {
            return Err(CliError::config("metrics and candidates must be non-empty"));
        }
        if self.replicates == 0 {
            return Err(CliError::config("replicates must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::config("train_fraction must lie in (0, 1)"));
        }
        if !(self.calibration.train_fraction > 0.0 && self.calibration.train_fraction < 1.0) {
            return Err(CliError::config("calibration.train_fraction must lie in (0, 1)"));
        }
        if self.calibration.grid.is_empty() || self.calibration.folds < 2 {
            return Err(CliError::config("calibration needs a non-empty grid and at least 2 folds"));
        }
        if self.learner.ensemble_size == 0 {
            return Err(CliError::config("learner.ensemble_size must be at least 1"));
        }
        self.learner.base().validate().map_err(|e| CliError::config(e.to_string()))?;
        self.feature_spec()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut cfg: RunConfig = toml::from_str(
            "seed = 3\n[[synthetic]]\nlabels = 3\ninstances = 100\n[learner]\nensemble_size = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.replicates, 20);
        assert_eq!(cfg.metrics.len(), 3);
        assert_eq!(cfg.learner.ensemble_size, 4);
        assert_eq!(cfg.synthetic[0].dependence, Dependence::Chain);
        cfg.apply(&Overrides { seed: Some(9), metrics: vec![Metric::ExactMatch], ..Default::default() });
        assert_eq!((cfg.seed, cfg.metrics.clone()), (9, vec![Metric::ExactMatch]));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
        let cfg: RunConfig = toml::from_str("[[synthetic]]\nlabels = 30\ninstances = 10\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg: RunConfig = toml::from_str("classifiers = [\"trellis\"]\n[[synthetic]]\nlabels = 3\ninstances = 10\n").unwrap();
        assert!(cfg.validate().is_err());
    }
}
