use proptest::prelude::*;
use rand::Rng;

use mlconf_core::classifiers::{
    train_binary_with_report, train_ensemble, train_independent, BaseLearnerConfig, BinaryModel, ClassifierRegistry,
    ModelBody, TrainOptions,
};
use mlconf_core::data::{synth_generate, Dependence, SynthConfig};
use mlconf_core::seeding::stream_rng;
use mlconf_core::{Labelset, MultiLabelModel};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn chain_joint_matches_ancestral_sampling() {
    // Label order 3, 1, 2 over two raw features.
    let models = vec![
        BinaryModel::new(vec![0.2, 1.0, -0.5]).unwrap(),
        BinaryModel::new(vec![-0.3, 0.4, 0.8, 1.5]).unwrap(),
        BinaryModel::new(vec![0.1, -0.7, 0.2, -1.2, 0.9]).unwrap(),
    ];
    let weights: Vec<Vec<f64>> = models.iter().map(|m| m.weights.clone()).collect();
    let order = vec![2, 0, 1];
    let model = MultiLabelModel::from_chain(order.clone(), models, 2).unwrap();
    let x = [0.6, -1.1];
    let joint = model.predict(&x).unwrap();

    let draws = 1_000_000;
    let mut counts = [0usize; 8];
    let mut rng = stream_rng(99, 0);
    for _ in 0..draws {
        let mut bits = [false; 3];
        let mut inputs = x.to_vec();
        for (step, w) in weights.iter().enumerate() {
            let eta = w[0] + w[1..].iter().zip(&inputs).map(|(a, b)| a * b).sum::<f64>();
            let on = rng.random::<f64>() < sigmoid(eta);
            bits[order[step]] = on;
            inputs.push(on as u8 as f64);
        }
        counts[Labelset::from_bits(&bits).unwrap().index()] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let p = joint.probs()[k];
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        let freq = c as f64 / draws as f64;
        assert!((freq - p).abs() <= 4.0 * sd + 1e-12, "labelset {k}: {freq} vs {p}");
    }
}

fn objective(x: &[Vec<f64>], y: &[bool], w: &[f64], lambda: f64) -> f64 {
    let nll: f64 = x
        .iter()
        .zip(y)
        .map(|(r, &t)| {
            let eta = w[0] + w[1..].iter().zip(r).map(|(a, b)| a * b).sum::<f64>();
            (1.0 + eta.exp()).ln() - if t { eta } else { 0.0 }
        })
        .sum::<f64>()
        / x.len() as f64;
    nll + 0.5 * lambda * w[1..].iter().map(|v| v * v).sum::<f64>()
}

#[test]
fn logistic_solution_is_stationary_by_finite_differences() {
    let mut rng = stream_rng(5, 0);
    let truth = [0.5, -1.0, 0.3, 0.8, -0.2, 0.0];
    let x: Vec<Vec<f64>> = (0..50).map(|_| (0..5).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
    let y: Vec<bool> = x
        .iter()
        .map(|r| {
            let eta = truth[0] + truth[1..].iter().zip(r).map(|(a, b)| a * b).sum::<f64>();
            rng.random::<f64>() < sigmoid(eta)
        })
        .collect();
    let cfg = BaseLearnerConfig { ridge_lambda: 0.05, ..Default::default() };
    let (model, fit) = train_binary_with_report(&x, &y, &cfg).unwrap();
    assert!(fit.converged);
    let h = 1e-5;
    for j in 0..6 {
        let mut up = model.weights.clone();
        let mut down = model.weights.clone();
        up[j] += h;
        down[j] -= h;
        let g = (objective(&x, &y, &up, 0.05) - objective(&x, &y, &down, 0.05)) / (2.0 * h);
        assert!(g.abs() < 1e-7, "coordinate {j}: {g}");
    }
    let trace = &fit.objective_trace;
    assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!((trace.last().unwrap() - objective(&x, &y, &model.weights, 0.05)).abs() < 1e-12);
}

fn synth(labels: usize, n: usize, seed: u64) -> mlconf_core::MLDataset {
    synth_generate(&SynthConfig::new(labels, n, Dependence::Chain, seed)).unwrap().0
}

#[test]
fn ensemble_is_mean_of_member_chains() {
    let ds = synth(3, 300, 1);
    let cfg = BaseLearnerConfig::default();
    let ecc = train_ensemble(&ds, 4, 7, &cfg).unwrap();
    assert_eq!(ecc, train_ensemble(&ds, 4, 7, &cfg).unwrap());
    let members = match &ecc.body {
        ModelBody::EnsembleOfChains { members } => members.clone(),
        _ => panic!("not an ensemble"),
    };
    for x in ds.features.iter().take(20) {
        let got = ecc.predict(x).unwrap();
        let mut mean = vec![0.0; 8];
        for m in &members {
            let single = MultiLabelModel { body: ModelBody::Chain(m.clone()), ..ecc.clone() };
            for (a, p) in mean.iter_mut().zip(single.predict(x).unwrap().probs()) {
                *a += p / members.len() as f64;
            }
        }
        for (a, b) in got.probs().iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    let other = train_ensemble(&ds, 4, 8, &cfg).unwrap();
    assert_ne!(ecc, other);
}

#[test]
fn registry_trains_every_strategy() {
    let ds = synth(2, 120, 3);
    let reg = ClassifierRegistry::default();
    let names: Vec<_> = reg.names().collect();
    assert_eq!(names, vec!["chain", "ecc", "independent"]);
    for name in names {
        let m = reg.get(name).unwrap().train(&ds, &TrainOptions::default()).unwrap();
        let json = m.to_json().unwrap();
        assert_eq!(MultiLabelModel::from_json(&json).unwrap(), m);
        assert!(m.predict(&[0.0; 3]).is_err());
    }
    assert!(reg.get("trellis").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn independent_joint_is_product_of_marginals(seed in any::<u64>(), labels in 1usize..5) {
        let ds = synth(labels, 80, seed);
        let m = train_independent(&ds, &BaseLearnerConfig::default()).unwrap();
        for x in ds.features.iter().take(5) {
            let d = m.predict(x).unwrap();
            prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let marg = d.marginals();
            for (k, &p) in d.probs().iter().enumerate() {
                let y = Labelset::from_index(k, labels).unwrap();
                let prod: f64 = (0..labels)
                    .map(|j| if y.get(j) { marg.as_slice()[j] } else { 1.0 - marg.as_slice()[j] })
                    .product();
                prop_assert!((p - prod).abs() < 1e-12);
            }
        }
    }
}
