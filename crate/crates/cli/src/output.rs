//! Result tables, model files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mlconf_core::association::{CorrelationMethod, CorrelationRow, RegressionResult};
use mlconf_core::calibration::{IntervalRow, ReliabilityPoint};
use mlconf_core::data::{export_table, fmt6, TableFormat, TableRow};
use mlconf_core::{CandidateKind, Metric};

use crate::config::RunConfig;
use crate::error::{CliError, StageExt};

pub const MANIFEST: &str = "manifest.json";

/// One test instance under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub dataset: String,
    pub classifier: String,
    pub metric: Metric,
    /// Row index in the source dataset.
    pub instance: usize,
    pub prediction: String,
    /// Expected accuracy of the prediction under the model's own joint.
    pub model_expected: f64,
    /// Similarity of the prediction to the observed labelset.
    pub observed: f64,
    /// Expected accuracy under the true joint; synthetic data only.
    pub true_expected: Option<f64>,
    pub scores: BTreeMap<CandidateKind, f64>,
}

impl TableRow for InstanceRow {
    fn header() -> Vec<&'static str> {
        let mut h = vec![
            "dataset",
            "classifier",
            "metric",
            "instance",
            "prediction",
            "model_expected",
            "observed",
            "true_expected",
        ];
        h.extend(CandidateKind::ALL.iter().map(|k| k.tag()));
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.dataset.clone(),
            self.classifier.clone(),
            self.metric.to_string(),
            self.instance.to_string(),
            self.prediction.clone(),
            fmt6(self.model_expected),
            fmt6(self.observed),
            self.true_expected.map(fmt6).unwrap_or_else(|| "NA".to_string()),
        ];
        f.extend(CandidateKind::ALL.iter().map(|k| self.scores.get(k).map(|v| fmt6(*v)).unwrap_or_else(|| "NA".into())));
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationOut {
    pub method: CorrelationMethod,
    #[serde(flatten)]
    pub row: CorrelationRow,
}

impl TableRow for CorrelationOut {
    fn header() -> Vec<&'static str> {
        let mut h = vec!["method"];
        h.extend(CorrelationRow::header());
        h
    }

    fn fields(&self) -> Vec<String> {
        let method = match self.method {
            CorrelationMethod::Kendall => "kendall",
            CorrelationMethod::Pearson => "pearson",
        };
        let mut f = vec![method.to_string()];
        f.extend(self.row.fields());
        f
    }
}

/// One coefficient of one fitted regression, with the fit statistics repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub model: String,
    pub method: String,
    pub metric: String,
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub stars: String,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub rmse: f64,
    pub n_obs: usize,
}

impl RegressionRow {
    pub fn from_result(model: &str, method: &str, metric: &str, r: &RegressionResult) -> Vec<Self> {
        r.coefficients
            .iter()
            .map(|c| RegressionRow {
                model: model.to_string(),
                method: method.to_string(),
                metric: metric.to_string(),
                term: c.name.clone(),
                estimate: c.estimate,
                std_error: c.std_error,
                t_stat: c.t_stat,
                p_value: c.p_value,
                stars: c.stars.clone(),
                r_squared: r.r_squared,
                adj_r_squared: r.adj_r_squared,
                rmse: r.rmse,
                n_obs: r.n_obs,
            })
            .collect()
    }
}

impl TableRow for RegressionRow {
    fn header() -> Vec<&'static str> {
        vec![
            "model",
            "method",
            "metric",
            "term",
            "estimate",
            "std_error",
            "t_stat",
            "p_value",
            "stars",
            "r_squared",
            "adj_r_squared",
            "rmse",
            "n_obs",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.model.clone(),
            self.method.clone(),
            self.metric.clone(),
            self.term.clone(),
            fmt6(self.estimate),
            fmt6(self.std_error),
            fmt6(self.t_stat),
            fmt6(self.p_value),
            self.stars.clone(),
            fmt6(self.r_squared),
            fmt6(self.adj_r_squared),
            fmt6(self.rmse),
            self.n_obs.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKRow {
    pub dataset: String,
    pub classifier: String,
    pub metric: Metric,
    pub candidate: CandidateKind,
    pub k: usize,
    pub mean_accuracy: f64,
}

impl TableRow for TopKRow {
    fn header() -> Vec<&'static str> {
        vec!["dataset", "classifier", "metric", "candidate", "k", "mean_accuracy"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.dataset.clone(),
            self.classifier.clone(),
            self.metric.to_string(),
            self.candidate.to_string(),
            self.k.to_string(),
            fmt6(self.mean_accuracy),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalOut {
    pub metric: Metric,
    pub features: String,
    #[serde(flatten)]
    pub row: IntervalRow,
}

impl TableRow for IntervalOut {
    fn header() -> Vec<&'static str> {
        let mut h = vec!["metric", "features"];
        h.extend(IntervalRow::header());
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.metric.to_string(), self.features.clone()];
        f.extend(self.row.fields());
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityOut {
    pub metric: Metric,
    pub features: String,
    #[serde(flatten)]
    pub point: ReliabilityPoint,
}

impl TableRow for ReliabilityOut {
    fn header() -> Vec<&'static str> {
        let mut h = vec!["metric", "features"];
        h.extend(ReliabilityPoint::header());
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.metric.to_string(), self.features.clone()];
        f.extend(self.point.fields());
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub files: Vec<FileEntry>,
    pub notes: Vec<String>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    /// Paths whose current content no longer matches the recorded hash.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match fs::read(dir.join(&f.path)) {
                Ok(bytes) => hex::encode(Sha256::digest(&bytes)) != f.sha256,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }
}

pub fn sha256_file(path: &Path) -> Result<(String, u64), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Collects everything a command writes so the manifest can list it.
pub struct OutputDir {
    root: PathBuf,
    format: TableFormat,
    written: Vec<String>,
    pub notes: Vec<String>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl OutputDir {
    pub fn create(root: &Path, format: TableFormat) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), format, written: Vec::new(), notes: Vec::new(), summary: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.notes.push(msg);
    }

    fn record(&mut self, rel: String) {
        if !self.written.contains(&rel) {
            self.written.push(rel);
        }
    }

    pub fn table<T: TableRow + Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        let rel = format!("{stem}.{}", self.format.extension());
        export_table(rows, self.format, &self.root.join(&rel)).stage("write")?;
        self.record(rel);
        Ok(())
    }

    pub fn text(&mut self, rel: &str, text: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
        }
        fs::write(&path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        self.record(rel.to_string());
        Ok(())
    }

    /// Registers a file something else already wrote under the root.
    pub fn adopt(&mut self, rel: &str) {
        self.record(rel.to_string());
    }

    pub fn finish(mut self, command: &str, cfg: &RunConfig) -> Result<Manifest, CliError> {
        self.written.sort();
        let files = self
            .written
            .iter()
            .map(|rel| {
                let (sha256, bytes) = sha256_file(&self.root.join(rel))?;
                Ok(FileEntry { path: rel.clone(), sha256, bytes })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: cfg.seed,
            config: cfg.clone(),
            files,
            notes: self.notes,
            summary: self.summary,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.root.join(MANIFEST);
        fs::write(&path, text + "\n").map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        Ok(manifest)
    }
}
