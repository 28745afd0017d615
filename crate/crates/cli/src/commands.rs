use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mlconf_core::association::CorrelationMethod;
use mlconf_core::candidates::score_vector;
use mlconf_core::data::{dataset_stats, parse_arff_file, write_arff, DatasetStats, LabelSpec, TableFormat};
use mlconf_core::metrics::{best_prediction, expected_accuracy};
use mlconf_core::{CandidateKind, Metric, MultiLabelModel};

use crate::config::RunConfig;
use crate::error::{CliError, StageExt};
use crate::output::{Manifest, OutputDir};
use crate::pipeline::{
    calibrate, correlations, instance_groups, load_datasets, regressions, score_instances, topk_rows,
    train_and_predict,
};

pub fn ingest(path: &Path, labels: Option<&str>, name: Option<&str>) -> Result<DatasetStats, CliError> {
    if !path.is_file() {
        return Err(CliError::data(format!("{} does not exist", path.display())));
    }
    let spec: LabelSpec = match labels {
        Some(s) => s.parse().map_err(|e| CliError::config(format!("--labels: {e}")))?,
        None => LabelSpec::Meka,
    };
    let mut ds = parse_arff_file(path, &spec)
        .map_err(|e| CliError::from_core("ingest", e).context(&path.display().to_string()))?;
    if let Some(n) = name {
        ds.name = n.to_string();
    }
    Ok(dataset_stats(&ds))
}

/// Which parts of the full experiment a command produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Full,
    Relative,
    Absolute,
    Calibrate,
}

impl Experiment {
    pub fn command(&self) -> &'static str {
        match self {
            Experiment::Full => "run",
            Experiment::Relative => "analyze-relative",
            Experiment::Absolute => "analyze-absolute",
            Experiment::Calibrate => "calibrate",
        }
    }

    fn methods(&self) -> Vec<CorrelationMethod> {
        match self {
            Experiment::Full => vec![CorrelationMethod::Kendall, CorrelationMethod::Pearson],
            Experiment::Relative => vec![CorrelationMethod::Kendall],
            Experiment::Absolute => vec![CorrelationMethod::Pearson],
            Experiment::Calibrate => vec![],
        }
    }
}

fn json_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("summary value serializes")
}

pub fn run_experiment(cfg: &RunConfig, what: Experiment) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let spec = cfg.feature_spec()?;
    let datasets = load_datasets(cfg)?;
    let mut out = OutputDir::create(&cfg.output, cfg.format)?;

    let stats: BTreeMap<String, DatasetStats> =
        datasets.iter().map(|d| (d.data.name.clone(), d.stats.clone())).collect();
    out.summary.insert("datasets".into(), json_value(&stats));

    if what == Experiment::Full {
        for d in datasets.iter().filter(|d| d.joints.is_some()) {
            let rel = format!("data/{}.arff", d.data.name);
            std::fs::create_dir_all(out.root().join("data"))
                .map_err(|e| CliError::io(format!("cannot create data directory: {e}")))?;
            write_arff(&d.data, &out.root().join(&rel)).stage("write")?;
            out.adopt(&rel);
            let joints: Vec<&[f64]> = d.joints.as_ref().unwrap().iter().map(|j| j.probs()).collect();
            let sidecar = serde_json::json!({ "L": d.data.label_count(), "joints": joints });
            out.text(&format!("data/{}.joints.json", d.data.name), &sidecar.to_string())?;
        }
    }

    let runs = train_and_predict(cfg, &datasets)?;
    for r in &runs {
        let json = r.model.to_json().stage("write")?;
        out.text(&format!("models/{}__{}.json", r.dataset, r.classifier), &json)?;
    }

    let cells = score_instances(&runs, &cfg.metrics)?;
    let rows: Vec<_> = cells.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    out.table("instances", &rows)?;

    let methods = what.methods();
    if !methods.is_empty() {
        let (groups, notes) = instance_groups(&cells, &cfg.candidates);
        for n in notes {
            out.note(n);
        }
        let mut corr = Vec::new();
        for &m in &methods {
            corr.extend(correlations(&groups, m, cfg)?);
        }
        out.table("correlations", &corr)?;
        let mut reg = Vec::new();
        let mut notes = Vec::new();
        for &m in &methods {
            reg.extend(regressions(&corr, m, &stats, cfg, &mut notes)?);
        }
        for n in notes {
            out.note(n);
        }
        out.table("regression", &reg)?;
        if methods.contains(&CorrelationMethod::Kendall) {
            out.table("topk", &topk_rows(&groups)?)?;
        }
    }

    if matches!(what, Experiment::Full | Experiment::Calibrate) {
        let mut intervals = Vec::new();
        let mut reliability = Vec::new();
        let mut lambdas = BTreeMap::new();
        let mut match_rates = BTreeMap::new();
        for &metric in &cfg.metrics {
            log::info!("calibrating {metric} with {} replicates", cfg.replicates);
            let c = calibrate(&cells, metric, spec, cfg)?;
            lambdas.insert(metric.tag(), c.replicates.iter().map(|r| r.lambda).collect::<Vec<_>>());
            let populated: Vec<_> = c.intervals.iter().filter(|r| r.row.populated()).collect();
            let matched = populated.iter().filter(|r| r.row.matched == Some(true)).count();
            match_rates.insert(metric.tag(), serde_json::json!({ "populated": populated.len(), "matched": matched }));
            intervals.extend(c.intervals);
            reliability.extend(c.reliability);
        }
        out.table("intervals", &intervals)?;
        out.table("reliability", &reliability)?;
        out.summary.insert("calibration_lambdas".into(), json_value(&lambdas));
        out.summary.insert("interval_matches".into(), json_value(&match_rates));
    }

    out.finish(what.command(), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPrediction {
    pub metric: Metric,
    pub labelset: Vec<u8>,
    /// Expected accuracy of this labelset under every metric.
    pub expected_accuracy: BTreeMap<Metric, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub label_count: usize,
    pub label_names: Vec<String>,
    pub predictions: Vec<MetricPrediction>,
    pub scores: BTreeMap<CandidateKind, f64>,
}

pub fn score(model_path: &Path, features: &[f64]) -> Result<ScoreReport, CliError> {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", model_path.display())))?;
    let model = MultiLabelModel::from_json(&text).stage("score")?;
    let d = model.predict(features).stage("score")?;
    let predictions = Metric::ALL
        .iter()
        .map(|&metric| {
            let (y, _) = best_prediction(&d, metric);
            let expected_accuracy = Metric::ALL
                .iter()
                .map(|&m| Ok((m, expected_accuracy(&d, &y, m).stage("score")?.value)))
                .collect::<Result<_, CliError>>()?;
            Ok(MetricPrediction { metric, labelset: y.to_vec(), expected_accuracy })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let v = score_vector(&d).stage("score")?;
    Ok(ScoreReport {
        label_count: model.label_count,
        label_names: model.label_names.clone(),
        predictions,
        scores: CandidateKind::ALL.iter().map(|k| (*k, v[k.position()])).collect(),
    })
}

#[derive(Debug, Deserialize)]
struct CorrelationLine {
    method: String,
    metric: String,
    candidate: String,
    correlation: f64,
    marker: String,
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path, format: TableFormat) -> Result<Vec<T>, CliError> {
    let bad = |e: String| CliError::data(format!("{}: {e}", path.display()));
    match format {
        TableFormat::Json => mlconf_core::data::read_json_table(path).map_err(|e| bad(e.to_string())),
        TableFormat::Csv => {
            let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
            rdr.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| bad(e.to_string()))
        }
    }
}

/// Plain-text summary of a finished output directory.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let manifest = Manifest::read(dir)?;
    let mut s = String::new();
    s.push_str(&format!("command {} seed {}\n", manifest.command, manifest.seed));
    let stale = manifest.verify(dir);
    if stale.is_empty() {
        s.push_str(&format!("{} files, all hashes match\n", manifest.files.len()));
    } else {
        s.push_str(&format!("{} files, hash mismatch: {}\n", manifest.files.len(), stale.join(", ")));
    }
    for n in &manifest.notes {
        s.push_str(&format!("note: {n}\n"));
    }

    let format = manifest.config.format;
    let corr = dir.join(format!("correlations.{}", format.extension()));
    if corr.is_file() {
        let rows: Vec<CorrelationLine> = read_rows(&corr, format)?;
        let mut agg: BTreeMap<(String, String, String), (f64, usize, usize, usize)> = BTreeMap::new();
        for r in rows {
            let e = agg.entry((r.method, r.metric, r.candidate)).or_insert((0.0, 0, 0, 0));
            e.0 += r.correlation;
            e.1 += 1;
            e.2 += r.marker.starts_with('+') as usize;
            e.3 += r.marker.starts_with('-') as usize;
        }
        s.push_str("\nmean correlation with accuracy\nmethod   metric candidate  mean      groups above_HP below_HP\n");
        for ((method, metric, cand), (sum, n, up, down)) in agg {
            s.push_str(&format!(
                "{method:<8} {metric:<6} {cand:<10} {:>8.4} {n:>7} {up:>8} {down:>8}\n",
                sum / n as f64
            ));
        }
    }
    if let Some(m) = manifest.summary.get("interval_matches").and_then(|v| v.as_object()) {
        s.push_str("\ncalibration interval matches\n");
        for (metric, v) in m {
            let populated = v["populated"].as_u64().unwrap_or(0);
            let matched = v["matched"].as_u64().unwrap_or(0);
            s.push_str(&format!("{metric:<6} {matched}/{populated} bins\n"));
        }
    }
    Ok(s)
}
