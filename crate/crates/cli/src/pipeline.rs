//! Stages shared by the commands: load, train, score, analyse, calibrate.

use std::collections::{BTreeMap, BTreeSet};

use mlconf_core::association::{
    correlation_table, ols_fixed_effects, robustness_regression, topk_accuracy_curve, AnalysisRecord, BootstrapConfig,
    CorrelationMethod, InstanceGroup, MIN_GROUP_SIZE,
};
use mlconf_core::calibration::{
    build_samples, interval_table, reliability_curve, replicate_experiment, CalibrationSample, FeatureSpec,
    ReplicateConfig, ReplicateResult,
};
use mlconf_core::classifiers::{ClassifierRegistry, TrainOptions};
use mlconf_core::data::{dataset_stats, parse_arff_file, split_indices, synth_generate, DatasetStats, SynthConfig};
use mlconf_core::metrics::{best_prediction, expected_accuracy, similarity};
use mlconf_core::seeding::derive_seed;
use mlconf_core::{CandidateKind, Labelset, LabelsetDistribution, MLDataset, Metric, MultiLabelModel};

use crate::config::RunConfig;
use crate::error::{CliError, StageExt};
use crate::output::{CorrelationOut, InstanceRow, IntervalOut, RegressionRow, ReliabilityOut, TopKRow};

pub struct LoadedDataset {
    pub data: MLDataset,
    /// True per-instance joints, known for synthetic data.
    pub joints: Option<Vec<LabelsetDistribution>>,
    pub stats: DatasetStats,
}

pub fn load_datasets(cfg: &RunConfig) -> Result<Vec<LoadedDataset>, CliError> {
    let mut out = Vec::new();
    for entry in &cfg.datasets {
        let spec = RunConfig::label_spec(entry)?;
        let mut data = parse_arff_file(&entry.path, &spec)
            .map_err(|e| CliError::from_core("load", e).context(&entry.path.display().to_string()))?;
        if let Some(name) = &entry.name {
            data.name = name.clone();
        }
        let stats = dataset_stats(&data);
        out.push(LoadedDataset { data, joints: None, stats });
    }
    for (i, entry) in cfg.synthetic.iter().enumerate() {
        let mut sc = SynthConfig::new(
            entry.labels,
            entry.instances,
            entry.dependence,
            entry.seed.unwrap_or_else(|| derive_seed(cfg.seed, &format!("synthetic/{i}"))),
        );
        if let Some(m) = entry.features {
            sc.features = m;
        }
        let (mut data, joints) = synth_generate(&sc).stage("load")?;
        if let Some(name) = &entry.name {
            data.name = name.clone();
        }
        let stats = dataset_stats(&data);
        out.push(LoadedDataset { data, joints: Some(joints), stats });
    }
    let mut seen = BTreeSet::new();
    for d in &out {
        if !seen.insert(d.data.name.clone()) {
            return Err(CliError::config(format!("dataset name '{}' used twice; set `name`", d.data.name)));
        }
    }
    Ok(out)
}

/// One classifier trained on one dataset and applied to its test split.
pub struct ClassifierRun {
    pub dataset: String,
    pub classifier: String,
    pub model: MultiLabelModel,
    pub test_indices: Vec<usize>,
    pub predicted: Vec<LabelsetDistribution>,
    pub truths: Vec<Labelset>,
    pub true_joints: Option<Vec<LabelsetDistribution>>,
}

/// All classifiers on a dataset share its split so comparisons are paired.
pub fn train_and_predict(cfg: &RunConfig, datasets: &[LoadedDataset]) -> Result<Vec<ClassifierRun>, CliError> {
    let registry = ClassifierRegistry::default();
    let mut runs = Vec::new();
    for d in datasets {
        let name = &d.data.name;
        let (train_idx, test_idx) =
            split_indices(d.data.len(), cfg.train_fraction, derive_seed(cfg.seed, &format!("split/{name}")))
                .stage("split")?;
        let train = d.data.subset(&train_idx);
        let test = d.data.subset(&test_idx);
        for clf in &cfg.classifiers {
            let strategy = registry.get(clf).map_err(|e| CliError::config(e.to_string()))?;
            let opts = TrainOptions {
                base: cfg.learner.base(),
                ensemble_size: cfg.learner.ensemble_size,
                seed: derive_seed(cfg.seed, &format!("train/{name}/{}", strategy.name())),
                chain_order: None,
            };
            log::info!("training {} on {name} ({} instances)", strategy.name(), train.len());
            let model = strategy.train(&train, &opts).stage("train")?;
            let predicted = model.predict_batch(&test.features).stage("predict")?;
            runs.push(ClassifierRun {
                dataset: name.clone(),
                classifier: strategy.name().to_string(),
                model,
                true_joints: d.joints.as_ref().map(|j| test_idx.iter().map(|&i| j[i].clone()).collect()),
                test_indices: test_idx.clone(),
                predicted,
                truths: test.labelsets.clone(),
            });
        }
    }
    Ok(runs)
}

/// Per-instance quantities of one (dataset, classifier, metric) cell.
pub struct MetricCell {
    pub dataset: String,
    pub classifier: String,
    pub metric: Metric,
    pub samples: Vec<CalibrationSample>,
    pub rows: Vec<InstanceRow>,
}

impl MetricCell {
    pub fn observed(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.observed).collect()
    }

    pub fn scores(&self, kind: CandidateKind) -> Vec<f64> {
        self.samples.iter().map(|s| s.scores[kind.position()]).collect()
    }
}

pub fn score_instances(runs: &[ClassifierRun], metrics: &[Metric]) -> Result<Vec<MetricCell>, CliError> {
    let mut cells = Vec::new();
    for run in runs {
        for &metric in metrics {
            let samples = build_samples(
                &run.dataset,
                &run.classifier,
                metric,
                &run.predicted,
                &run.truths,
                run.true_joints.as_deref(),
            )
            .stage("score")?;
            let rows = run
                .predicted
                .iter()
                .zip(&run.truths)
                .zip(&samples)
                .enumerate()
                .map(|(i, ((d, y), s))| {
                    let (yhat, ea) = best_prediction(d, metric);
                    let true_expected = match &run.true_joints {
                        Some(j) => Some(expected_accuracy(&j[i], &yhat, metric).stage("score")?.value),
                        None => None,
                    };
                    Ok(InstanceRow {
                        dataset: run.dataset.clone(),
                        classifier: run.classifier.clone(),
                        metric,
                        instance: run.test_indices[i],
                        prediction: yhat.to_vec().iter().map(|b| char::from(b'0' + b)).collect(),
                        model_expected: ea.value,
                        observed: similarity(metric, y, &yhat).stage("score")?,
                        true_expected,
                        scores: CandidateKind::ALL.iter().map(|k| (*k, s.scores[k.position()])).collect(),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            cells.push(MetricCell {
                dataset: run.dataset.clone(),
                classifier: run.classifier.clone(),
                metric,
                samples,
                rows,
            });
        }
    }
    Ok(cells)
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Correlation groups with undefined correlations removed. Each removal is
/// returned as a note.
pub fn instance_groups(cells: &[MetricCell], candidates: &[CandidateKind]) -> (Vec<InstanceGroup>, Vec<String>) {
    let mut groups = Vec::new();
    let mut notes = Vec::new();
    for c in cells {
        let key = format!("{}/{}/{}", c.dataset, c.classifier, c.metric);
        let acc = c.observed();
        if acc.len() < MIN_GROUP_SIZE {
            notes.push(format!("{key}: {} test instances, fewer than {MIN_GROUP_SIZE}; skipped", acc.len()));
            continue;
        }
        if is_constant(&acc) {
            notes.push(format!("{key}: accuracy is constant, correlation undefined; skipped"));
            continue;
        }
        let mut scores = Vec::new();
        for &k in candidates {
            let s = c.scores(k);
            if is_constant(&s) {
                notes.push(format!("{key}: {k} scores are constant; candidate skipped"));
            } else {
                scores.push((k, s));
            }
        }
        if scores.is_empty() {
            continue;
        }
        groups.push(InstanceGroup {
            dataset: c.dataset.clone(),
            classifier: c.classifier.clone(),
            metric: c.metric,
            scores,
            accuracies: acc,
        });
    }
    (groups, notes)
}

pub fn correlations(
    groups: &[InstanceGroup],
    method: CorrelationMethod,
    cfg: &RunConfig,
) -> Result<Vec<CorrelationOut>, CliError> {
    let boot = BootstrapConfig { replicates: cfg.bootstrap, seed: derive_seed(cfg.seed, "bootstrap") };
    Ok(correlation_table(groups, method, &boot)
        .stage("correlate")?
        .into_iter()
        .map(|row| CorrelationOut { method, row })
        .collect())
}

fn method_tag(m: CorrelationMethod) -> &'static str {
    match m {
        CorrelationMethod::Kendall => "kendall",
        CorrelationMethod::Pearson => "pearson",
    }
}

fn levels<T: Ord>(it: impl Iterator<Item = T>) -> usize {
    it.collect::<BTreeSet<_>>().len()
}

/// Fixed-effects fit per metric, plus the per-candidate robustness fits
/// when enough datasets vary. Infeasible fits become notes.
pub fn regressions(
    rows: &[CorrelationOut],
    method: CorrelationMethod,
    stats: &BTreeMap<String, DatasetStats>,
    cfg: &RunConfig,
    notes: &mut Vec<String>,
) -> Result<Vec<RegressionRow>, CliError> {
    let records: Vec<AnalysisRecord> =
        rows.iter().filter(|r| r.method == method).map(|r| r.row.record.clone()).collect();
    let tag = method_tag(method);
    let mut out = Vec::new();
    for metric in records.iter().map(|r| r.metric).collect::<BTreeSet<_>>() {
        let subset: Vec<AnalysisRecord> = records.iter().filter(|r| r.metric == metric).cloned().collect();
        let p = levels(subset.iter().map(|r| r.candidate))
            + levels(subset.iter().map(|r| r.dataset.as_str()))
            + levels(subset.iter().map(|r| r.classifier.as_str()))
            - 2;
        if subset.len() <= p {
            notes.push(format!("{tag} fixed-effects regression for {metric}: {} records for {p} parameters; skipped", subset.len()));
            continue;
        }
        let fit = ols_fixed_effects(&subset, &cfg.baselines).stage("regress")?;
        out.extend(RegressionRow::from_result("fixed-effects", tag, metric.tag(), &fit));
    }
    let datasets = levels(records.iter().map(|r| r.dataset.as_str()));
    if datasets >= 5 {
        for (kind, fit) in robustness_regression(&records, stats, &cfg.baselines).stage("regress")? {
            out.extend(RegressionRow::from_result(&format!("robustness:{kind}"), tag, "all", &fit));
        }
    } else if !records.is_empty() {
        notes.push(format!("{tag} robustness regression needs at least 5 datasets, have {datasets}; skipped"));
    }
    Ok(out)
}

pub fn topk_rows(groups: &[InstanceGroup]) -> Result<Vec<TopKRow>, CliError> {
    let mut out = Vec::new();
    for g in groups {
        for (kind, s) in &g.scores {
            for p in topk_accuracy_curve(s, &g.accuracies).stage("topk")? {
                out.push(TopKRow {
                    dataset: g.dataset.clone(),
                    classifier: g.classifier.clone(),
                    metric: g.metric,
                    candidate: *kind,
                    k: p.k,
                    mean_accuracy: p.mean_accuracy,
                });
            }
        }
    }
    Ok(out)
}

pub fn bin_width(metric: Metric) -> f64 {
    match metric {
        Metric::HammingSimilarity => 0.05,
        _ => 0.1,
    }
}

pub struct CalibrationOutcome {
    pub metric: Metric,
    pub replicates: Vec<ReplicateResult>,
    pub intervals: Vec<IntervalOut>,
    pub reliability: Vec<ReliabilityOut>,
}

/// Pools every (dataset, classifier) cell of a metric and runs the
/// replicated calibration experiment on it.
pub fn calibrate(
    cells: &[MetricCell],
    metric: Metric,
    spec: FeatureSpec,
    cfg: &RunConfig,
) -> Result<CalibrationOutcome, CliError> {
    let samples: Vec<CalibrationSample> =
        cells.iter().filter(|c| c.metric == metric).flat_map(|c| c.samples.iter().cloned()).collect();
    let rc = ReplicateConfig {
        replicates: cfg.replicates,
        seed: derive_seed(cfg.seed, &format!("calibration/{metric}")),
        train_fraction: cfg.calibration.train_fraction,
        folds: cfg.calibration.folds,
        grid: cfg.calibration.grid.clone(),
    };
    let replicates = replicate_experiment(&samples, metric, spec, &rc).stage("calibrate")?;
    let width = bin_width(metric);
    let pairs: Vec<Vec<(f64, f64)>> = replicates.iter().map(|r| r.pairs()).collect();
    let features = spec.tag();
    let intervals = interval_table(&pairs, width)
        .stage("calibrate")?
        .into_iter()
        .map(|row| IntervalOut { metric, features: features.clone(), row })
        .collect();
    let pooled: Vec<(f64, f64)> = pairs.concat();
    let reliability = reliability_curve(&pooled, width)
        .stage("calibrate")?
        .into_iter()
        .map(|point| ReliabilityOut { metric, features: features.clone(), point })
        .collect();
    Ok(CalibrationOutcome { metric, replicates, intervals, reliability })
}
