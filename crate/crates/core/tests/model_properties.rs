use guava_core::classic::{
    fit_adaboost_samme, fit_cart, fit_random_forest, AdaBoostConfig, CartConfig, ForestConfig,
};
use guava_core::model::{fit_model, Classifier, Envelope, Hyperparams};
use guava_core::synth::gaussian_blobs;
use guava_core::{ClassifierModel, Dataset, ModelKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick_hyperparams() -> Hyperparams {
    let mut hp = Hyperparams {
        seed: 17,
        ..Hyperparams::default()
    };
    hp.softmax.epochs = 5;
    hp.forest.n_trees = 15;
    hp.adaboost.n_estimators = 15;
    hp.gbdt.n_iters = 15;
    hp
}

fn fixture() -> Dataset {
    gaussian_blobs(40, 3, 5, 2.5, 8)
}

fn random_vectors(d: usize, count: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d).map(|_| rng.gen_range(-6.0f32..6.0)).collect())
        .collect()
}

#[test]
fn probabilities_are_distributions_for_every_kind() {
    let ds = fixture();
    let probes = random_vectors(ds.d(), 200, 1);
    for kind in ModelKind::ALL {
        let model = fit_model(kind, &ds, None, &quick_hyperparams()).unwrap();
        for x in probes.iter().map(Vec::as_slice).chain(ds.rows()) {
            let p = model.predict_proba(x).unwrap();
            assert_eq!(p.len(), 3);
            assert!(p.iter().all(|&v| v >= 0.0), "{kind:?}");
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{kind:?}");
        }
    }
}

#[test]
fn scaling_sample_weights_leaves_predictions_unchanged() {
    let ds = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let weights: Vec<f64> = (0..ds.n()).map(|_| rng.gen_range(0.2..3.0)).collect();
    let probes = random_vectors(ds.d(), 100, 2);
    for kind in ModelKind::ALL {
        let reference = fit_model(kind, &ds, Some(&weights), &quick_hyperparams()).unwrap();
        for lambda in [0.001, 0.37, 8.0, 1e4] {
            let scaled: Vec<f64> = weights.iter().map(|w| w * lambda).collect();
            let model = fit_model(kind, &ds, Some(&scaled), &quick_hyperparams()).unwrap();
            for x in &probes {
                assert_eq!(
                    model.predict(x).unwrap(),
                    reference.predict(x).unwrap(),
                    "{kind:?} λ={lambda}"
                );
                let (a, b) = (model.proba(x), reference.proba(x));
                assert!(
                    a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-9),
                    "{kind:?} λ={lambda}"
                );
            }
        }
    }
}

#[test]
fn saved_models_predict_bit_identically() {
    let ds = fixture();
    let dir = tempfile::tempdir().unwrap();
    let probes = random_vectors(ds.d(), 100, 3);
    for kind in ModelKind::ALL {
        let model = fit_model(kind, &ds, None, &quick_hyperparams()).unwrap();
        let path = dir.path().join(format!("{}.json", kind.name()));
        model
            .to_envelope(ds.class_names())
            .unwrap()
            .write(&path)
            .unwrap();
        let loaded = ClassifierModel::from_envelope(&Envelope::read(&path).unwrap()).unwrap();
        assert_eq!(loaded, model, "{kind:?}");
        for x in &probes {
            let (a, b) = (model.proba(x), loaded.proba(x));
            assert!(
                a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()),
                "{kind:?}"
            );
        }
    }
}

#[test]
fn full_depth_cart_memorises_consistent_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.gen_range(5..80);
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|i| vec![i as f32, rng.gen_range(0..4) as f32])
            .collect();
        let labels = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let ds =
            Dataset::from_rows(&rows, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let tree = fit_cart(
            &ds,
            None,
            &CartConfig {
                max_depth: None,
                min_samples_leaf: 1,
            },
        )
        .unwrap();
        for (x, &y) in ds.rows().zip(ds.labels()) {
            assert_eq!(tree.predict(x).unwrap(), y);
        }
    }
}

#[test]
fn single_unbagged_tree_forest_equals_cart() {
    let ds = fixture();
    let tree_cfg = CartConfig {
        max_depth: Some(6),
        min_samples_leaf: 2,
    };
    let forest = fit_random_forest(
        &ds,
        None,
        &ForestConfig {
            n_trees: 1,
            mtry: Some(ds.d()),
            bootstrap: false,
            tree: tree_cfg.clone(),
            seed: 3,
        },
    )
    .unwrap();
    let tree = fit_cart(&ds, None, &tree_cfg).unwrap();
    for x in random_vectors(ds.d(), 300, 5) {
        assert_eq!(forest.proba(&x), tree.proba(&x));
    }
}

#[test]
fn samme_weights_stay_normalised() {
    for seed in 0..5 {
        let ds = gaussian_blobs(30, 3, 4, 1.5, seed);
        let model = fit_adaboost_samme(
            &ds,
            None,
            &AdaBoostConfig {
                n_estimators: 40,
                stump_depth: 1,
            },
        )
        .unwrap();
        assert!(!model.rounds.is_empty());
        for r in &model.rounds {
            assert!((r.weight_sum - 1.0).abs() < 1e-9, "{}", r.weight_sum);
        }
    }
}
