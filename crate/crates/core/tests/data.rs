use std::path::{Path, PathBuf};

use proptest::prelude::*;

use mlconf_core::data::{
    dataset_stats, parse_arff, parse_arff_file, synth_generate, write_arff, Dependence, LabelSpec, SynthConfig,
};
use mlconf_core::{Labelset, MLDataset};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn toy_file() {
    let ds = parse_arff_file(fixture("toy.arff"), &LabelSpec::Meka).unwrap();
    let s = dataset_stats(&ds);
    assert_eq!((s.instances, s.labels, s.features), (3, 2, 1));
    assert_eq!(s.distinct_combinations, 3);
    assert!((s.label_cardinality - 4.0 / 3.0).abs() < 1e-15);
    assert_eq!(ds.label_names, vec!["a", "b"]);
    assert_eq!(ds.features, vec![vec![0.5], vec![-1.25], vec![2.0]]);
    assert_eq!(ds.labelsets[1].to_vec(), vec![0, 1]);
}

#[test]
fn sparse_file_with_trailing_labels() {
    let ds = parse_arff_file(fixture("sparse.arff"), &LabelSpec::Last(3)).unwrap();
    assert_eq!(ds.feature_names, vec!["f1", "f2", "f3"]);
    assert_eq!(ds.features, vec![vec![1.5, 0.0, 0.0], vec![0.0, -2.0, 0.0], vec![0.0; 3], vec![0.0, 0.0, 7.0]]);
    let ys: Vec<Vec<u8>> = ds.labelsets.iter().map(|y| y.to_vec()).collect();
    assert_eq!(ys, vec![vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 0], vec![1, 1, 1]]);
    let by_name = parse_arff_file(fixture("sparse.arff"), &"l1,l2,l3".parse().unwrap()).unwrap();
    assert_eq!(by_name, ds);
    // No -C option in the relation name.
    assert!(parse_arff_file(fixture("sparse.arff"), &LabelSpec::Meka).is_err());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = parse_arff_file(fixture("absent.arff"), &LabelSpec::Meka).unwrap_err();
    assert!(matches!(err, mlconf_core::Error::Io(_)), "{err:?}");
}

#[test]
fn written_arff_reads_back_identically() {
    let (ds, _) = synth_generate(&SynthConfig::new(4, 50, Dependence::Chain, 9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synth.arff");
    write_arff(&ds, &path).unwrap();
    let back = parse_arff_file(&path, &LabelSpec::Meka).unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.labelsets, ds.labelsets);
    assert_eq!(back.label_names, ds.label_names);
}

#[test]
fn synthetic_labels_follow_their_joints() {
    let n = 20000;
    let (ds, joints) = synth_generate(&SynthConfig::new(3, n, Dependence::Chain, 12)).unwrap();
    assert_eq!((ds.len(), joints.len()), (n, n));
    let mut counts = [0.0; 8];
    let mut expected = [0.0; 8];
    for (y, j) in ds.labelsets.iter().zip(&joints) {
        counts[y.index()] += 1.0;
        for (e, p) in expected.iter_mut().zip(j.probs()) {
            *e += p;
        }
    }
    for k in 0..8 {
        let sd = expected[k].sqrt().max(1.0);
        assert!((counts[k] - expected[k]).abs() < 5.0 * sd, "labelset {k}: {} vs {}", counts[k], expected[k]);
    }
    let again = synth_generate(&SynthConfig::new(3, n, Dependence::Chain, 12)).unwrap();
    assert_eq!(again.0, ds);
}

fn dataset(bits: &[Vec<bool>]) -> MLDataset {
    let l = bits[0].len();
    MLDataset::new(
        "p",
        (0..bits.len()).map(|i| vec![i as f64]).collect(),
        bits.iter().map(|b| Labelset::from_bits(b).unwrap()).collect(),
        (0..l).map(|j| format!("y{j}")).collect(),
        vec!["x".into()],
    )
    .unwrap()
}

proptest! {
    #[test]
    fn stats_invariants(l in 1usize..6, rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..40)) {
        let bits: Vec<Vec<bool>> = rows.iter().map(|r| r[..l].to_vec()).collect();
        let s = dataset_stats(&dataset(&bits));
        let ones: usize = bits.iter().flatten().filter(|b| **b).count();
        prop_assert!((s.label_cardinality - ones as f64 / bits.len() as f64).abs() < 1e-12);
        prop_assert!(s.label_cardinality <= l as f64);
        prop_assert!(s.distinct_combinations >= 1);
        prop_assert!(s.distinct_combinations <= bits.len().min(1 << l));
    }

    #[test]
    fn dense_text_round_trips(rows in prop::collection::vec((any::<bool>(), any::<bool>(), -1e6f64..1e6), 1..20)) {
        let mut text = String::from("@relation 'r: -C 2'\n@attribute a {0,1}\n@attribute b {0,1}\n@attribute x numeric\n@data\n");
        for (a, b, x) in &rows {
            text.push_str(&format!("{},{},{x:e}\n", *a as u8, *b as u8));
        }
        let ds = parse_arff(&text, &LabelSpec::Meka).unwrap();
        prop_assert_eq!(ds.len(), rows.len());
        for (i, (a, b, x)) in rows.iter().enumerate() {
            prop_assert_eq!(ds.features[i][0], *x);
            prop_assert_eq!(ds.labelsets[i].get(0), *a);
            prop_assert_eq!(ds.labelsets[i].get(1), *b);
        }
    }
}
