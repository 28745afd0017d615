use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mlconf_core::data::TableFormat;
use mlconf_core::{CandidateKind, Metric};

use crate::commands::{self, Experiment};
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "mlconf", version, about = "Confidence analyses for probabilistic multi-label classifiers")]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an ARFF file and print its statistics as JSON.
    Ingest {
        path: PathBuf,
        /// `-C k`, `-C -k` or comma-separated label names; read from the relation when absent.
        #[arg(long, allow_hyphen_values = true)]
        labels: Option<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Full experiment: correlations, regressions, top-k curves and calibration.
    Run(RunArgs),
    /// Kendall correlations, their regressions and top-k curves.
    AnalyzeRelative(RunArgs),
    /// Pearson correlations and their regressions.
    AnalyzeAbsolute(RunArgs),
    /// Replicated calibration with interval tables and reliability curves.
    Calibrate(RunArgs),
    /// Confidence scores and expected accuracies for one instance.
    Score {
        model: PathBuf,
        /// Comma-separated feature values.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        features: String,
    },
    /// Summarise an output directory and check its hashes.
    Report {
        #[arg(long = "out")]
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Label spec applied to every configured ARFF dataset.
    #[arg(long, allow_hyphen_values = true)]
    pub labels: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<TableFormat>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long = "classifier")]
    pub classifiers: Vec<String>,
    #[arg(long = "metric", value_parser = parse_metric)]
    pub metrics: Vec<Metric>,
    #[arg(long = "candidate", value_parser = parse_candidate)]
    pub candidates: Vec<CandidateKind>,
}

fn parse_format(s: &str) -> Result<TableFormat, String> {
    s.parse().map_err(|e: mlconf_core::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: mlconf_core::Error| e.to_string())
}

fn parse_candidate(s: &str) -> Result<CandidateKind, String> {
    s.parse().map_err(|e: mlconf_core::Error| e.to_string())
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            output: self.out.clone(),
            format: self.format,
            replicates: self.replicates,
            labels: self.labels.clone(),
            classifiers: self.classifiers.clone(),
            metrics: self.metrics.clone(),
            candidates: self.candidates.clone(),
        });
        Ok(cfg)
    }
}

fn parse_features(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| CliError::config(format!("feature '{t}': {e}"))))
        .collect()
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

/// Runs one parsed command and returns what it prints on success.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let experiment = |args: &RunArgs, what: Experiment| -> Result<String, CliError> {
        let cfg = args.resolve()?;
        let manifest = commands::run_experiment(&cfg, what)?;
        Ok(format!("wrote {} files and manifest to {}", manifest.files.len(), cfg.output.display()))
    };
    match &cli.command {
        Command::Ingest { path, labels, name } => {
            Ok(pretty(&commands::ingest(path, labels.as_deref(), name.as_deref())?))
        }
        Command::Run(a) => experiment(a, Experiment::Full),
        Command::AnalyzeRelative(a) => experiment(a, Experiment::Relative),
        Command::AnalyzeAbsolute(a) => experiment(a, Experiment::Absolute),
        Command::Calibrate(a) => experiment(a, Experiment::Calibrate),
        Command::Score { model, features } => Ok(pretty(&commands::score(model, &parse_features(features)?)?)),
        Command::Report { dir } => commands::report(dir),
    }
}
