use super::*;
use crate::classic::{CartConfig, CartTree, Node};
use crate::gbdt::GbdtConfig;
use crate::synth::gaussian_blobs;

fn constant(probs: &[f64], d: usize) -> ClassifierModel {
    ClassifierModel::Cart(CartTree {
        d,
        k: probs.len(),
        nodes: vec![Node::Leaf {
            distribution: probs.to_vec(),
        }],
        config: CartConfig::default(),
    })
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("c{c}")).collect()
}

#[test]
fn confidence_examples() {
    assert_eq!(confidence(&[0.5, 0.3, 0.2]).unwrap(), 0.5);
    assert_eq!(confidence(&[0.25; 4]).unwrap(), 0.25);
    assert_eq!(confidence(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
    assert!(confidence(&[0.5, 0.6]).is_err());
    assert!(confidence(&[]).is_err());
}

#[test]
fn gate_examples() {
    let refine = constant(&[0.1, 0.2, 0.7], 2);

    let m = CascadeModel::new(
        constant(&[0.85, 0.1, 0.05], 2),
        Some(refine.clone()),
        0.8,
        names(3),
    )
    .unwrap();
    let r = m.cascade_predict(&[0.0, 0.0]).unwrap();
    assert_eq!((r.route, r.label), (Route::Base, 0));

    let m = CascadeModel::new(
        constant(&[0.79, 0.11, 0.1], 2),
        Some(refine.clone()),
        0.8,
        names(3),
    )
    .unwrap();
    let r = m.cascade_predict(&[0.0, 0.0]).unwrap();
    assert_eq!((r.route, r.label), (Route::Refine, 2));
    assert_eq!(r.probabilities, vec![0.1, 0.2, 0.7]);
    assert_eq!(r.confidence, 0.79);

    // gamma == tau goes to the base model
    let m =
        CascadeModel::new(constant(&[0.8, 0.15, 0.05], 2), Some(refine), 0.8, names(3)).unwrap();
    let r = m.cascade_predict(&[0.0, 0.0]).unwrap();
    assert_eq!(r.confidence, 0.8);
    assert_eq!(r.route, Route::Base);

    assert!(m.cascade_predict(&[0.0]).is_err());
}

#[test]
fn tau_validation() {
    let base = constant(&[0.5, 0.5], 1);
    assert!(CascadeModel::new(base.clone(), None, 1.02, names(2)).is_err());
    assert!(CascadeModel::new(base.clone(), None, -0.1, names(2)).is_err());
    assert!(CascadeModel::new(base.clone(), None, f64::NAN, names(2)).is_err());
    assert!(CascadeModel::new(base, Some(constant(&[0.5, 0.5], 3)), 0.8, names(2)).is_err());
}

#[test]
fn risk_examples() {
    assert_eq!(empirical_risk(&[0, 1, 2], &[0, 1, 2]).unwrap(), 0.0);
    assert_eq!(empirical_risk(&[0, 1, 2, 0], &[0, 1, 0, 1]).unwrap(), 0.5);
    assert!(empirical_risk(&[], &[]).is_err());
    assert!(empirical_risk(&[0], &[0, 1]).is_err());
}

fn small_spec(base: ModelKind, refine: Option<ModelKind>) -> CascadeSpec {
    let mut spec = CascadeSpec::new(base, refine);
    spec.hyperparams.forest.n_trees = 10;
    spec.hyperparams.gbdt = GbdtConfig {
        n_iters: 10,
        ..GbdtConfig::default()
    };
    spec
}

#[test]
fn fit_records_both_stages() {
    let ds = gaussian_blobs(40, 3, 6, 2.5, 1);
    let m = fit_cascade(
        &ds,
        &small_spec(ModelKind::RandomForest, Some(ModelKind::GbdtLeaf)),
    )
    .unwrap();
    assert!(matches!(m.base, ClassifierModel::Forest(_)));
    assert!(matches!(m.refine, Some(ClassifierModel::Gbdt(_))));
    assert!(m.training.base_train_s > 0.0 && m.training.refine_train_s > 0.0);
    assert_eq!(m.training.refine_samples, ds.n());
    assert!((m.training.base_fraction + m.training.refine_fraction - 1.0).abs() < 1e-15);
}

#[test]
fn zero_tau_never_consults_refinement() {
    let ds = gaussian_blobs(30, 3, 4, 1.0, 2);
    for scope in [RefineScope::Full, RefineScope::UncertainOnly] {
        let mut spec = small_spec(ModelKind::GaussianNb, Some(ModelKind::GbdtLevel));
        spec.tau = 0.0;
        spec.refine_scope = scope;
        let m = fit_cascade(&ds, &spec).unwrap();
        let routed = m.predict_batch(ds.features()).unwrap();
        assert!(routed.iter().all(|r| r.route == Route::Base));
    }
}

#[test]
fn uncertain_only_falls_back_when_base_is_certain() {
    // far-apart clusters: an unlimited CART tree is fully confident everywhere
    let ds = gaussian_blobs(20, 3, 3, 40.0, 3);
    let mut spec = small_spec(ModelKind::DecisionTree, Some(ModelKind::GbdtLeaf));
    spec.refine_scope = RefineScope::UncertainOnly;
    let m = fit_cascade(&ds, &spec).unwrap();
    let probs = crate::model::predict_proba_batch(&m.base, ds.features()).unwrap();
    assert!(probs.iter().all(|p| max_prob(p) == 1.0));
    assert!(m.training.flags.contains(&FLAG_SCOPE_FALLBACK.to_string()));
    assert_eq!(m.training.refine_samples, ds.n());
}

#[test]
fn uncertain_only_trains_on_the_uncertain_subset() {
    let ds = gaussian_blobs(60, 3, 4, 1.5, 4);
    let mut spec = small_spec(ModelKind::GaussianNb, Some(ModelKind::GbdtLeaf));
    spec.refine_scope = RefineScope::UncertainOnly;
    let m = fit_cascade(&ds, &spec).unwrap();
    let probs = crate::model::predict_proba_batch(&m.base, ds.features()).unwrap();
    let uncertain = probs.iter().filter(|p| max_prob(p) < spec.tau).count();
    assert!(uncertain > 0 && uncertain < ds.n());
    assert_eq!(m.training.refine_samples, uncertain);
    assert!(m.training.flags.is_empty());
}

#[test]
fn same_model_both_stages_equals_base() {
    let ds = gaussian_blobs(30, 3, 4, 1.0, 5);
    let base = fit_model(ModelKind::GaussianNb, &ds, None, &Hyperparams::default()).unwrap();
    for tau in [0.0, 0.4, 0.8, 1.01] {
        let m = CascadeModel::new(
            base.clone(),
            Some(base.clone()),
            tau,
            ds.class_names().to_vec(),
        )
        .unwrap();
        for x in ds.rows() {
            assert_eq!(
                m.cascade_predict(x).unwrap().label,
                base.predict(x).unwrap()
            );
        }
    }
}

#[test]
fn envelope_round_trip() {
    let ds = gaussian_blobs(30, 3, 4, 2.0, 6);
    let m = fit_cascade(
        &ds,
        &small_spec(ModelKind::AdaBoost, Some(ModelKind::GbdtLevel)),
    )
    .unwrap();
    let json = m.to_envelope().unwrap().to_json().unwrap();
    let back = CascadeModel::from_envelope(&Envelope::from_json(&json).unwrap()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.to_envelope().unwrap().to_json().unwrap(), json);
}
