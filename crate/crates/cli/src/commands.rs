//! One function per subcommand, each taking a fully resolved [`RunConfig`].

use std::collections::BTreeMap;
use std::path::Path;

use guava_core::cascade::{fit_cascade, CascadeSpec};
use guava_core::classic::ClassWeighting;
use guava_core::data::{
    read_feature_file, read_feature_table, read_manifest, stratified_split, undersample,
    write_feature_file,
};
use guava_core::eval::{
    classification_report, confusion_matrix, emit_report, timed, CascadeSummary, DatasetSummary,
    EvalReport, Timing, REPORT_SCHEMA_VERSION,
};
use guava_core::features::extract_manifest;
use guava_core::gbdt::Growth;
use guava_core::model::{Classifier, Envelope, Hyperparams};
use guava_core::rng::derive_seed;
use guava_core::{CascadeModel, Dataset, ModelKind, RefineScope, Route};

use crate::config::RunConfig;
use crate::error::CliError;

/// Flag added to models and reports whose timings were not recorded.
pub const FLAG_TIMING_OMITTED: &str = "timing_omitted";

const BASE_KINDS: [ModelKind; 6] = [
    ModelKind::LogisticRegression,
    ModelKind::GaussianNb,
    ModelKind::Knn,
    ModelKind::DecisionTree,
    ModelKind::RandomForest,
    ModelKind::AdaBoost,
];

pub fn extract(cfg: &RunConfig) -> Result<(), CliError> {
    let side: usize = cfg.parse("side")?;
    if side == 0 {
        return Err(CliError::usage("side must be at least 1"));
    }
    let manifest = read_manifest(cfg.str("manifest"))?;
    let ds = extract_manifest(&manifest, side)?;
    write_feature_file(&ds, cfg.str("out"))?;
    log::info!(
        "extracted {} images into {}-dimensional features",
        ds.n(),
        ds.d()
    );
    Ok(())
}

pub fn split(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = read_feature_file(cfg.str("in"))?;
    let result = stratified_split(&ds, cfg.parse("ratio")?, cfg.parse("seed")?)?;
    write_feature_file(&result.train, cfg.str("train_out"))?;
    write_feature_file(&result.holdout, cfg.str("holdout_out"))?;
    Ok(())
}

pub fn balance(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = read_feature_file(cfg.str("in"))?;
    write_feature_file(&balanced(&ds, cfg.parse("seed")?), cfg.str("out"))?;
    Ok(())
}

fn balanced(ds: &Dataset, seed: u64) -> Dataset {
    undersample(ds, derive_seed(seed, "balance", 0))
}

fn base_kind(cfg: &RunConfig) -> Result<ModelKind, CliError> {
    let kind: ModelKind = cfg.parse("base")?;
    if !BASE_KINDS.contains(&kind) {
        return Err(CliError::usage(format!(
            "base must be one of lr, gnb, knn, dt, rf, ada; got {}",
            kind.name()
        )));
    }
    Ok(kind)
}

fn refine_kind(cfg: &RunConfig) -> Result<Option<ModelKind>, CliError> {
    match cfg.str("refine") {
        "none" => Ok(None),
        "gbdt-leaf" => Ok(Some(ModelKind::GbdtLeaf)),
        "gbdt-level" => Ok(Some(ModelKind::GbdtLevel)),
        other => Err(CliError::usage(format!(
            "refine must be gbdt-leaf, gbdt-level or none; got {other:?}"
        ))),
    }
}

fn hyperparams(cfg: &RunConfig) -> Result<Hyperparams, CliError> {
    let mut hp = Hyperparams {
        seed: cfg.parse("seed")?,
        ..Hyperparams::default()
    };
    hp.softmax.epochs = cfg.parse("epochs")?;
    hp.softmax.batch_size = cfg.parse("batch_size")?;
    hp.softmax.eta = cfg.parse("eta")?;
    hp.knn_k = cfg.parse("knn_k")?;
    hp.cart.max_depth = cfg.parse_or("cart_max_depth", "none")?;
    hp.forest.n_trees = cfg.parse("forest_trees")?;
    hp.forest.mtry = cfg.parse_or("forest_mtry", "auto")?;
    hp.adaboost.n_estimators = cfg.parse("ada_estimators")?;
    hp.adaboost.stump_depth = cfg.parse("ada_depth")?;
    hp.gbdt.n_iters = cfg.parse("gbdt_iters")?;
    hp.gbdt.learning_rate = cfg.parse("gbdt_learning_rate")?;
    hp.gbdt.lambda = cfg.parse("gbdt_lambda")?;
    hp.gbdt.min_hessian_per_leaf = cfg.parse("gbdt_min_hessian")?;
    hp.gbdt.n_bins = cfg.parse("gbdt_bins")?;
    hp.gbdt.growth = match refine_kind(cfg)? {
        Some(ModelKind::GbdtLevel) => Growth::LevelWise {
            max_depth: cfg.parse("gbdt_max_depth")?,
        },
        _ => Growth::LeafWise {
            max_leaves: cfg.parse("gbdt_max_leaves")?,
        },
    };
    Ok(hp)
}

fn cascade_spec(cfg: &RunConfig) -> Result<CascadeSpec, CliError> {
    let mut spec = CascadeSpec::new(base_kind(cfg)?, refine_kind(cfg)?);
    spec.tau = cfg.parse("tau")?;
    spec.weighting = cfg.parse::<ClassWeighting>("weighting")?;
    spec.refine_weighting = cfg.parse_or::<ClassWeighting>("refine_weighting", "inherit")?;
    spec.refine_scope = cfg.parse::<RefineScope>("refine_scope")?;
    spec.hyperparams = hyperparams(cfg)?;
    Ok(spec)
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cascade_spec(cfg)?;
    let record_timing = cfg.timing_recorded()?;
    let mut ds = read_feature_file(cfg.str("features"))?;
    if cfg.switch("balance")? {
        ds = balanced(&ds, spec.hyperparams.seed);
    }
    let mut model = fit_cascade(&ds, &spec)?;
    model.training.config = cfg.echo();
    if !record_timing {
        model.training.base_train_s = 0.0;
        model.training.refine_train_s = 0.0;
        model.training.flags.push(FLAG_TIMING_OMITTED.into());
    }
    model.to_envelope()?.write(cfg.str("out"))?;
    log::info!("trained {} on {} samples", model.kind_label(), ds.n());
    Ok(())
}

/// Load any model file as a cascade, applying a `tau` override unless it is `model`.
pub fn load_model(path: impl AsRef<Path>) -> Result<CascadeModel, CliError> {
    Ok(CascadeModel::from_envelope(&Envelope::read(path)?)?)
}

fn with_tau_override(model: CascadeModel, cfg: &RunConfig) -> Result<CascadeModel, CliError> {
    match cfg.parse_or::<f64>("tau", "model")? {
        Some(tau) => Ok(model.with_tau(tau)?),
        None => Ok(model),
    }
}

fn check_width(model: &CascadeModel, d: usize) -> Result<(), CliError> {
    let expected = model.n_features();
    if d != expected {
        return Err(CliError::usage(format!(
            "feature file has d = {d} but the model expects d = {expected}"
        )));
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let record_timing = cfg.timing_recorded()?;
    let model = with_tau_override(load_model(cfg.str("model"))?, cfg)?;
    let ds = read_feature_file(cfg.str("features"))?;
    check_width(&model, ds.d())?;
    if ds.class_names() != model.class_names.as_slice() {
        return Err(CliError::usage(
            "feature file classes differ from the model's classes",
        ));
    }
    let (routed, infer_s) = timed(|| model.predict_batch(ds.features()));
    let routed = routed?;
    let predictions: Vec<usize> = routed.iter().map(|r| r.label).collect();
    let cm = confusion_matrix(ds.labels(), &predictions, ds.class_names())?;
    let (metrics, mut flags) = classification_report(&cm)?;
    flags.extend(model.training.flags.iter().cloned());

    let timing = if record_timing {
        Timing::new(
            model.training.base_train_s + model.training.refine_train_s,
            infer_s,
            ds.n(),
        )
    } else {
        if !flags.iter().any(|f| f == FLAG_TIMING_OMITTED) {
            flags.push(FLAG_TIMING_OMITTED.into());
        }
        Timing::new(0.0, 0.0, ds.n())
    };
    let cascade = model.refine.as_ref().map(|_| {
        let refined =
            routed.iter().filter(|r| r.route == Route::Refine).count() as f64 / ds.n() as f64;
        CascadeSummary {
            tau: model.tau,
            base_fraction: 1.0 - refined,
            refine_fraction: refined,
        }
    });
    let counts = ds.class_counts();
    let mut config: BTreeMap<String, String> = cfg.echo();
    config.extend(
        model
            .training
            .config
            .iter()
            .map(|(k, v)| (format!("train.{k}"), v.clone())),
    );

    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model_kind: model.kind_label(),
        dataset: DatasetSummary {
            n: ds.n(),
            k: ds.k(),
            class_names: ds.class_names().to_vec(),
            balanced: counts.iter().all(|&c| c == counts[0]),
        },
        metrics,
        timing,
        cascade,
        flags,
        config,
    };
    emit_report(&report, &cm, Path::new(cfg.str("report")))?;
    log::info!(
        "accuracy {:.4} on {} samples",
        report.metrics.accuracy,
        ds.n()
    );
    Ok(())
}

pub fn predict(cfg: &RunConfig) -> Result<(), CliError> {
    let model = with_tau_override(load_model(cfg.str("model"))?, cfg)?;
    let table = read_feature_table(cfg.str("features"))?;
    check_width(&model, table.d)?;
    let routed = model.predict_batch(&table.features)?;
    let mut out = csv::Writer::from_path(cfg.str("out"))?;
    out.write_record(["index", "label", "confidence", "route"])?;
    for (i, r) in routed.iter().enumerate() {
        out.write_record([
            i.to_string(),
            model.class_names[r.label].clone(),
            r.confidence.to_string(),
            r.route.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
