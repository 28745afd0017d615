use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlconf_cli::commands::ScoreReport;
use mlconf_cli::output::Manifest;
use mlconf_core::classifiers::BinaryModel;
use mlconf_core::{CandidateKind, Metric, MultiLabelModel};

fn mlconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlconf")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn write_model(dir: &Path, name: &str, m: &MultiLabelModel) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, m.to_json().unwrap()).unwrap();
    path
}

#[test]
fn ingest_reports_stats() {
    let o = mlconf(&["ingest", fixture("toy.arff").to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["N"].as_u64(), v["L"].as_u64(), v["M"].as_u64()), (Some(3), Some(2), Some(1)));

    let o = mlconf(&["ingest", "/nonexistent/file.arff"]);
    assert_eq!(o.status.code(), Some(3));
    let o = mlconf(&["ingest", fixture("toy.arff").to_str().unwrap(), "--labels", "-C 0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[[synthetic]]\nname = \"big\"\nlabels = 30\ninstances = 100\n").unwrap();
    let o = mlconf(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    std::fs::write(&cfg, "sede = 3\n").unwrap();
    assert_eq!(mlconf(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(mlconf(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn toy_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = mlconf(&["run", "--config", fixture("toy.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = Manifest::read(&out).unwrap();
    assert_eq!(manifest.seed, 7);
    for table in ["instances", "correlations", "regression", "topk", "intervals", "reliability"] {
        let rel = format!("{table}.csv");
        assert!(manifest.files.iter().any(|f| f.path == rel), "{rel} missing");
    }
    assert!(manifest.verify(&out).is_empty());

    let o = mlconf(&["report", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("all hashes match"), "{text}");
    assert!(text.contains("mean correlation"));

    std::fs::write(out.join("topk.csv"), "tampered").unwrap();
    let text = stdout(&mlconf(&["report", "--out", out.to_str().unwrap()]));
    assert!(text.contains("hash mismatch: topk.csv"), "{text}");
}

/// Chain without features whose joint over three labels is
/// {001: 1/3, 010: 1/4, 100: 1/4, 110: 1/6}.
fn worked_example_model() -> MultiLabelModel {
    let models = vec![
        BinaryModel::new(vec![logit(5.0 / 12.0)]).unwrap(),
        BinaryModel::new(vec![logit(3.0 / 7.0), logit(0.4) - logit(3.0 / 7.0)]).unwrap(),
        BinaryModel::new(vec![800.0, -1600.0, -1600.0]).unwrap(),
    ];
    MultiLabelModel::from_chain(vec![0, 1, 2], models, 0).unwrap()
}

#[test]
fn score_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(dir.path(), "m.json", &worked_example_model());
    let o = mlconf(&["score", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: ScoreReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.label_count, 3);
    let em = r.predictions.iter().find(|p| p.metric == Metric::ExactMatch).unwrap();
    assert_eq!(em.labelset, vec![0, 0, 1]);
    assert!((em.expected_accuracy[&Metric::ExactMatch] - 1.0 / 3.0).abs() < 1e-9);
    let hs = r.predictions.iter().find(|p| p.metric == Metric::HammingSimilarity).unwrap();
    assert_eq!(hs.labelset, vec![0, 0, 0]);
    assert!((hs.expected_accuracy[&Metric::HammingSimilarity] - 22.0 / 36.0).abs() < 1e-9);
    // Top probability 1/3 rescaled so the uniform joint maps to 0.
    assert!((r.scores[&CandidateKind::HP] - (8.0 / 3.0 - 1.0) / 7.0).abs() < 1e-9);
    assert_eq!(r.scores.len(), 7);
    assert!(r.scores.values().all(|s| (0.0..=1.0).contains(s)));

    assert_eq!(mlconf(&["score", path.to_str().unwrap(), "--features", "1.0"]).status.code(), Some(3));
}

#[test]
fn point_mass_scores_one_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let models = vec![
        BinaryModel::new(vec![800.0, 0.0]).unwrap(),
        BinaryModel::new(vec![-800.0, 0.0, 0.0]).unwrap(),
    ];
    let m = MultiLabelModel::from_chain(vec![0, 1], models, 1).unwrap();
    let path = write_model(dir.path(), "point.json", &m);
    let o = mlconf(&["score", path.to_str().unwrap(), "--features", "0.3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: ScoreReport = serde_json::from_str(&stdout(&o)).unwrap();
    for (k, s) in &r.scores {
        assert!((s - 1.0).abs() < 1e-9, "{k}: {s}");
    }
    assert!(r.predictions.iter().all(|p| p.labelset == vec![1, 0]));
}
