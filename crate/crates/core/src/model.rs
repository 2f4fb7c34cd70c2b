//! The uniform classifier interface, the model menu, and the JSON model envelope.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classic::{
    fit_adaboost_samme, fit_cart, fit_gaussian_nb, fit_knn, fit_random_forest, AdaBoostConfig,
    AdaBoostModel, CartConfig, CartTree, ForestConfig, ForestModel, GaussianNb, KnnModel,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, GbdtConfig, GbdtModel, Growth};
use crate::linear::{train_softmax_head, LinearModel, TrainConfig};
use crate::par;

pub const SCHEMA_VERSION: u32 = 1;

/// Lowest index among the maxima.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Probability prediction shared by every learner.
pub trait Classifier: Send + Sync {
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize;

    /// Class probabilities without checking the input width.
    fn proba(&self, x: &[f32]) -> Vec<f64>;

    fn predict_proba(&self, x: &[f32]) -> Result<Vec<f64>> {
        check_width(x, self.n_features())?;
        Ok(self.proba(x))
    }

    fn predict(&self, x: &[f32]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    fn predict_unchecked(&self, x: &[f32]) -> usize {
        argmax(&self.proba(x))
    }
}

pub(crate) fn check_width(x: &[f32], d: usize) -> Result<()> {
    if x.len() == d {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "input has {} features, model expects {d}",
            x.len()
        )))
    }
}

/// Probabilities for every row of a row-major block, in row order.
pub fn predict_proba_batch<C: Classifier + ?Sized>(
    model: &C,
    rows: &[f32],
) -> Result<Vec<Vec<f64>>> {
    let d = model.n_features();
    if d == 0 || !rows.len().is_multiple_of(d) {
        return Err(Error::invalid("row block width does not match model"));
    }
    let n = rows.len() / d;
    Ok(par::map_indices(n, |i| {
        model.proba(&rows[i * d..(i + 1) * d])
    }))
}

/// Base- and refinement-model menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lr")]
    LogisticRegression,
    #[serde(rename = "gnb")]
    GaussianNb,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "dt")]
    DecisionTree,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "ada")]
    AdaBoost,
    /// Leaf-wise growth ("lgbm-like").
    #[serde(rename = "gbdt-leaf")]
    GbdtLeaf,
    /// Level-wise growth ("xgb-like").
    #[serde(rename = "gbdt-level")]
    GbdtLevel,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::LogisticRegression,
        ModelKind::GaussianNb,
        ModelKind::Knn,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::AdaBoost,
        ModelKind::GbdtLeaf,
        ModelKind::GbdtLevel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "lr",
            ModelKind::GaussianNb => "gnb",
            ModelKind::Knn => "knn",
            ModelKind::DecisionTree => "dt",
            ModelKind::RandomForest => "rf",
            ModelKind::AdaBoost => "ada",
            ModelKind::GbdtLeaf => "gbdt-leaf",
            ModelKind::GbdtLevel => "gbdt-level",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model kind {s:?}")))
    }
}

/// Hyperparameters for every learner in the menu. One seed drives them all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub seed: u64,
    pub softmax: TrainConfig,
    pub knn_k: usize,
    pub cart: CartConfig,
    pub forest: ForestConfig,
    pub adaboost: AdaBoostConfig,
    pub gbdt: GbdtConfig,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            seed: 0,
            softmax: TrainConfig::default(),
            knn_k: 5,
            cart: CartConfig::default(),
            forest: ForestConfig::default(),
            adaboost: AdaBoostConfig::default(),
            gbdt: GbdtConfig::default(),
        }
    }
}

/// A trained learner of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    Softmax(LinearModel),
    GaussianNb(GaussianNb),
    Knn(KnnModel),
    Cart(CartTree),
    Forest(ForestModel),
    AdaBoost(AdaBoostModel),
    Gbdt(GbdtModel),
}

impl ClassifierModel {
    fn inner(&self) -> &dyn Classifier {
        match self {
            ClassifierModel::Softmax(m) => m,
            ClassifierModel::GaussianNb(m) => m,
            ClassifierModel::Knn(m) => m,
            ClassifierModel::Cart(m) => m,
            ClassifierModel::Forest(m) => m,
            ClassifierModel::AdaBoost(m) => m,
            ClassifierModel::Gbdt(m) => m,
        }
    }

    /// Envelope `kind` tag.
    pub fn kind_tag(&self) -> &'static str {
        match self {
            ClassifierModel::Softmax(_) => "softmax",
            ClassifierModel::GaussianNb(_) => "gnb",
            ClassifierModel::Knn(_) => "knn",
            ClassifierModel::Cart(_) => "cart",
            ClassifierModel::Forest(_) => "forest",
            ClassifierModel::AdaBoost(_) => "adaboost",
            ClassifierModel::Gbdt(_) => "gbdt",
        }
    }

    fn params(&self) -> Result<Value> {
        Ok(match self {
            ClassifierModel::Softmax(m) => serde_json::to_value(m)?,
            ClassifierModel::GaussianNb(m) => serde_json::to_value(m)?,
            ClassifierModel::Knn(m) => serde_json::to_value(m)?,
            ClassifierModel::Cart(m) => serde_json::to_value(m)?,
            ClassifierModel::Forest(m) => serde_json::to_value(m)?,
            ClassifierModel::AdaBoost(m) => serde_json::to_value(m)?,
            ClassifierModel::Gbdt(m) => serde_json::to_value(m)?,
        })
    }

    pub fn to_envelope(&self, class_names: &[String]) -> Result<Envelope> {
        Ok(Envelope {
            schema_version: SCHEMA_VERSION,
            kind: self.kind_tag().to_string(),
            k: self.n_classes(),
            d: self.n_features(),
            class_names: class_names.to_vec(),
            params: self.params()?,
        })
    }

    pub fn from_envelope(env: &Envelope) -> Result<Self> {
        env.check_version()?;
        let p = env.params.clone();
        let model = match env.kind.as_str() {
            "softmax" => ClassifierModel::Softmax(serde_json::from_value(p)?),
            "gnb" => ClassifierModel::GaussianNb(serde_json::from_value(p)?),
            "knn" => ClassifierModel::Knn(serde_json::from_value(p)?),
            "cart" => ClassifierModel::Cart(serde_json::from_value(p)?),
            "forest" => ClassifierModel::Forest(serde_json::from_value(p)?),
            "adaboost" => ClassifierModel::AdaBoost(serde_json::from_value(p)?),
            "gbdt" => ClassifierModel::Gbdt(serde_json::from_value(p)?),
            other => return Err(Error::invalid(format!("unknown model kind {other:?}"))),
        };
        if model.n_classes() != env.k || model.n_features() != env.d {
            return Err(Error::invalid(
                "envelope K/d disagree with model parameters",
            ));
        }
        Ok(model)
    }
}

impl Classifier for ClassifierModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        self.inner().proba(x)
    }
}

/// Fit one learner from the menu.
pub fn fit_model(
    kind: ModelKind,
    ds: &Dataset,
    weights: Option<&[f64]>,
    hp: &Hyperparams,
) -> Result<ClassifierModel> {
    Ok(match kind {
        ModelKind::LogisticRegression => {
            let cfg = TrainConfig {
                seed: crate::rng::derive_seed(hp.seed, "softmax", 0),
                ..hp.softmax.clone()
            };
            ClassifierModel::Softmax(train_softmax_head(ds, &cfg, weights)?)
        }
        ModelKind::GaussianNb => ClassifierModel::GaussianNb(fit_gaussian_nb(ds, weights)?),
        ModelKind::Knn => ClassifierModel::Knn(fit_knn(ds, hp.knn_k)?),
        ModelKind::DecisionTree => ClassifierModel::Cart(fit_cart(ds, weights, &hp.cart)?),
        ModelKind::RandomForest => {
            let cfg = ForestConfig {
                seed: crate::rng::derive_seed(hp.seed, "forest", 0),
                ..hp.forest.clone()
            };
            ClassifierModel::Forest(fit_random_forest(ds, weights, &cfg)?)
        }
        ModelKind::AdaBoost => {
            ClassifierModel::AdaBoost(fit_adaboost_samme(ds, weights, &hp.adaboost)?)
        }
        ModelKind::GbdtLeaf | ModelKind::GbdtLevel => {
            let mut cfg = GbdtConfig {
                seed: crate::rng::derive_seed(hp.seed, "gbdt", 0),
                ..hp.gbdt.clone()
            };
            cfg.growth = match (kind, cfg.growth) {
                (ModelKind::GbdtLeaf, Growth::LeafWise { .. })
                | (ModelKind::GbdtLevel, Growth::LevelWise { .. }) => cfg.growth,
                (ModelKind::GbdtLeaf, _) => Growth::default_leaf_wise(),
                _ => Growth::default_level_wise(),
            };
            ClassifierModel::Gbdt(fit_gbdt(ds, &cfg, weights)?)
        }
    })
}

/// Versioned JSON model envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub kind: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub class_names: Vec<String>,
    pub params: Value,
}

impl Envelope {
    pub(crate) fn check_version(&self) -> Result<()> {
        if self.schema_version == SCHEMA_VERSION {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "unsupported model schema version {}",
                self.schema_version
            )))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
