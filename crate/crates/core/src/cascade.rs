//! Confidence-gated two-stage classification.
//!
//! The base model answers whenever its top class probability `gamma` reaches
//! the threshold `tau`; otherwise the refinement model decides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classic::{class_weights, ClassWeighting};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::timed;
use crate::model::{
    argmax, check_width, fit_model, Classifier, ClassifierModel, Envelope, Hyperparams, ModelKind,
    SCHEMA_VERSION,
};
use crate::par;

pub const DEFAULT_TAU: f64 = 0.8;
/// Largest accepted threshold; anything above 1 sends every sample to refinement.
pub const MAX_TAU: f64 = 1.01;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Base,
    Refine,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Base => "base",
            Route::Refine => "refine",
        }
    }
}

/// Which training samples the refinement model sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineScope {
    #[default]
    Full,
    /// Only samples on which the fitted base model has `gamma < tau`.
    UncertainOnly,
}

impl std::str::FromStr for RefineScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(RefineScope::Full),
            "uncertain_only" | "uncertain-only" => Ok(RefineScope::UncertainOnly),
            other => Err(Error::invalid(format!("unknown refine scope {other:?}"))),
        }
    }
}

impl std::fmt::Display for RefineScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RefineScope::Full => "full",
            RefineScope::UncertainOnly => "uncertain_only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedPrediction {
    pub label: usize,
    /// Probabilities from whichever model decided.
    pub probabilities: Vec<f64>,
    /// Base-model confidence.
    pub confidence: f64,
    pub route: Route,
}

/// What happened while fitting a cascade.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub base_train_s: f64,
    pub refine_train_s: f64,
    pub refine_scope: RefineScope,
    pub refine_samples: usize,
    /// Fractions of training samples the fitted cascade routes each way.
    pub base_fraction: f64,
    pub refine_fraction: f64,
    pub flags: Vec<String>,
    /// Resolved run configuration supplied by the caller.
    #[serde(default)]
    pub config: BTreeMap<String, String>,
}

/// Flag recorded when `uncertain_only` found no uncertain training samples.
pub const FLAG_SCOPE_FALLBACK: &str = "refine_scope_fallback_full";

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub base: ClassifierModel,
    /// `None` collapses the cascade to the base model.
    pub refine: Option<ClassifierModel>,
    pub tau: f64,
    pub class_names: Vec<String>,
    pub training: TrainingStats,
}

/// `gamma = max_c p_c` of a probability vector.
pub fn confidence(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("confidence needs probabilities in [0, 1]"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(max_prob(probs))
}

fn max_prob(probs: &[f64]) -> f64 {
    probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && (0.0..=MAX_TAU).contains(&tau) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "tau {tau} is not in [0, {MAX_TAU}]"
        )))
    }
}

/// Fraction of predictions that disagree with the truth.
pub fn empirical_risk(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::invalid("prediction and truth lengths differ"));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("empirical risk of an empty set"));
    }
    let wrong = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p != t)
        .count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Everything needed to fit a cascade besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSpec {
    pub base: ModelKind,
    pub refine: Option<ModelKind>,
    pub tau: f64,
    pub weighting: ClassWeighting,
    /// Defaults to `weighting` when `None`.
    pub refine_weighting: Option<ClassWeighting>,
    pub refine_scope: RefineScope,
    pub hyperparams: Hyperparams,
}

impl CascadeSpec {
    pub fn new(base: ModelKind, refine: Option<ModelKind>) -> Self {
        CascadeSpec {
            base,
            refine,
            tau: DEFAULT_TAU,
            weighting: ClassWeighting::None,
            refine_weighting: None,
            refine_scope: RefineScope::Full,
            hyperparams: Hyperparams::default(),
        }
    }
}

pub fn fit_cascade(train: &Dataset, spec: &CascadeSpec) -> Result<CascadeModel> {
    train.check_nonempty()?;
    check_tau(spec.tau)?;
    if train.k() < 2 {
        return Err(Error::invalid("a cascade needs at least two classes"));
    }
    let base_w = class_weights(train, spec.weighting);
    let (base, base_train_s) =
        timed(|| fit_model(spec.base, train, base_w.as_deref(), &spec.hyperparams));
    let base = base?;

    let mut stats = TrainingStats {
        base_train_s,
        refine_scope: spec.refine_scope,
        ..TrainingStats::default()
    };
    let refine = match spec.refine {
        None => None,
        Some(kind) => {
            let refine_set = match spec.refine_scope {
                RefineScope::Full => train.clone(),
                RefineScope::UncertainOnly => {
                    let probs = crate::model::predict_proba_batch(&base, train.features())?;
                    let uncertain: Vec<usize> = (0..train.n())
                        .filter(|&i| max_prob(&probs[i]) < spec.tau)
                        .collect();
                    if uncertain.is_empty() {
                        log::warn!("no uncertain training samples; refinement model trains on the full set");
                        stats.flags.push(FLAG_SCOPE_FALLBACK.to_string());
                        train.clone()
                    } else {
                        train.subset(&uncertain)
                    }
                }
            };
            stats.refine_samples = refine_set.n();
            let w = class_weights(&refine_set, spec.refine_weighting.unwrap_or(spec.weighting));
            let (model, secs) =
                timed(|| fit_model(kind, &refine_set, w.as_deref(), &spec.hyperparams));
            stats.refine_train_s = secs;
            Some(model?)
        }
    };
    let mut model = CascadeModel {
        base,
        refine,
        tau: spec.tau,
        class_names: train.class_names().to_vec(),
        training: stats,
    };
    let routed = model.predict_batch(train.features())?;
    let refined = routed.iter().filter(|r| r.route == Route::Refine).count();
    model.training.refine_fraction = refined as f64 / train.n() as f64;
    model.training.base_fraction = 1.0 - model.training.refine_fraction;
    Ok(model)
}

impl CascadeModel {
    pub fn new(
        base: ClassifierModel,
        refine: Option<ClassifierModel>,
        tau: f64,
        class_names: Vec<String>,
    ) -> Result<Self> {
        check_tau(tau)?;
        if let Some(r) = &refine {
            if r.n_features() != base.n_features() || r.n_classes() != base.n_classes() {
                return Err(Error::invalid(
                    "base and refinement models disagree on d or K",
                ));
            }
        }
        if class_names.len() != base.n_classes() {
            return Err(Error::invalid("class table does not match model K"));
        }
        Ok(CascadeModel {
            base,
            refine,
            tau,
            class_names,
            training: TrainingStats::default(),
        })
    }

    fn route(&self, x: &[f32]) -> RoutedPrediction {
        let base_p = self.base.proba(x);
        let gamma = max_prob(&base_p);
        let (route, probabilities) = match &self.refine {
            Some(refine) if gamma < self.tau => (Route::Refine, refine.proba(x)),
            _ => (Route::Base, base_p),
        };
        RoutedPrediction {
            label: argmax(&probabilities),
            probabilities,
            confidence: gamma,
            route,
        }
    }

    /// Apply the gate: base answer if `gamma >= tau`, refinement answer otherwise.
    pub fn cascade_predict(&self, x: &[f32]) -> Result<RoutedPrediction> {
        check_width(x, self.base.n_features())?;
        Ok(self.route(x))
    }

    /// Routed predictions for a row-major block, in input order.
    pub fn predict_batch(&self, rows: &[f32]) -> Result<Vec<RoutedPrediction>> {
        let d = self.base.n_features();
        if d == 0 || !rows.len().is_multiple_of(d) {
            return Err(Error::invalid("row block width does not match model"));
        }
        Ok(par::map_indices(rows.len() / d, |i| {
            self.route(&rows[i * d..(i + 1) * d])
        }))
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(CascadeModel {
            tau,
            ..self.clone()
        })
    }

    pub fn to_envelope(&self) -> Result<Envelope> {
        let refine = match &self.refine {
            Some(r) => serde_json::to_value(r.to_envelope(&self.class_names)?)?,
            None => Value::Null,
        };
        let params = serde_json::json!({
            "tau": self.tau,
            "base": self.base.to_envelope(&self.class_names)?,
            "refine": refine,
            "training": self.training,
        });
        Ok(Envelope {
            schema_version: SCHEMA_VERSION,
            kind: "cascade".into(),
            k: self.base.n_classes(),
            d: self.base.n_features(),
            class_names: self.class_names.clone(),
            params,
        })
    }

    /// Load a cascade envelope, or wrap a single-model envelope as a cascade
    /// without refinement.
    pub fn from_envelope(env: &Envelope) -> Result<Self> {
        env.check_version()?;
        if env.kind != "cascade" {
            let base = ClassifierModel::from_envelope(env)?;
            return CascadeModel::new(base, None, DEFAULT_TAU, env.class_names.clone());
        }
        #[derive(Deserialize)]
        struct Params {
            tau: f64,
            base: Envelope,
            refine: Option<Envelope>,
            training: TrainingStats,
        }
        let p: Params = serde_json::from_value(env.params.clone())?;
        let base = ClassifierModel::from_envelope(&p.base)?;
        let refine = p
            .refine
            .as_ref()
            .map(ClassifierModel::from_envelope)
            .transpose()?;
        let mut model = CascadeModel::new(base, refine, p.tau, env.class_names.clone())?;
        model.training = p.training;
        if model.base.n_features() != env.d || model.base.n_classes() != env.k {
            return Err(Error::invalid(
                "cascade envelope K/d disagree with sub-models",
            ));
        }
        Ok(model)
    }

    pub fn kind_label(&self) -> String {
        match &self.refine {
            Some(r) => format!("cascade({}+{})", self.base.kind_tag(), r.kind_tag()),
            None => format!("cascade({})", self.base.kind_tag()),
        }
    }
}

impl Classifier for CascadeModel {
    fn n_features(&self) -> usize {
        self.base.n_features()
    }

    fn n_classes(&self) -> usize {
        self.base.n_classes()
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        self.route(x).probabilities
    }
}

#[cfg(test)]
mod tests;
