//! Histogram gradient-boosted decision trees with a softmax objective.
//!
//! Features are quantised once into at most 256 bins. Every boosting
//! iteration fits one regression tree per class to the Newton pair
//! `(g, h)` of the multiclass log-loss; split search scans per-feature
//! gradient/Hessian histograms instead of sorted values. Two growth
//! strategies share the engine: leaf-wise (best-first up to `max_leaves`)
//! and level-wise (breadth-first up to `max_depth`).

mod binning;
mod objective;
mod tree;

use serde::{Deserialize, Serialize};

pub use binning::{bin_value, quantile_bin, BinnedMatrix, MAX_BINS};
pub use objective::softmax_grad_hess;
pub use tree::{
    best_split, build_histograms, grow_tree, leaf_objective, leaf_value, split_gain, BinStats,
    Histograms, RegNode, RegressionTree, SplitChoice,
};

use crate::data::{normalized_weights, Dataset};
use crate::error::{Error, Result};
use crate::linear::softmax_in_place;
use crate::model::Classifier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Growth {
    LeafWise { max_leaves: usize },
    LevelWise { max_depth: usize },
}

impl Growth {
    pub fn default_leaf_wise() -> Self {
        Growth::LeafWise { max_leaves: 31 }
    }

    pub fn default_level_wise() -> Self {
        Growth::LevelWise { max_depth: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_iters: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    pub lambda: f64,
    pub min_hessian_per_leaf: f64,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_iters: 100,
            learning_rate: 0.1,
            growth: Growth::default_leaf_wise(),
            lambda: 1.0,
            min_hessian_per_leaf: 1e-3,
            n_bins: 256,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    fn validate(&self) -> Result<()> {
        if self.n_iters == 0 {
            return Err(Error::invalid("n_iters must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::invalid("learning_rate must lie in [0, 1]"));
        }
        if !(2..=MAX_BINS).contains(&self.n_bins) {
            return Err(Error::invalid("n_bins must lie in [2, 256]"));
        }
        if [self.lambda, self.min_hessian_per_leaf]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(Error::invalid(
                "lambda and min_hessian_per_leaf must be non-negative",
            ));
        }
        match self.growth {
            Growth::LeafWise { max_leaves } if max_leaves < 1 => {
                Err(Error::invalid("max_leaves must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

/// Boosted ensemble: `softmax(base_score + sum of shrunken tree outputs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub d: usize,
    pub k: usize,
    /// Log class priors.
    pub base_score: Vec<f64>,
    /// `trees[iteration][class]`, leaf values already scaled by the learning rate.
    pub trees: Vec<Vec<RegressionTree>>,
    pub config: GbdtConfig,
    /// Weighted mean training log-loss after each iteration.
    pub loss_history: Vec<f64>,
}

impl GbdtModel {
    pub fn raw_scores(&self, x: &[f32]) -> Vec<f64> {
        let mut s = self.base_score.clone();
        for round in &self.trees {
            for (sc, tree) in s.iter_mut().zip(round) {
                *sc += tree.predict_raw(x);
            }
        }
        s
    }
}

impl Classifier for GbdtModel {
    fn n_features(&self) -> usize {
        self.d
    }

    fn n_classes(&self) -> usize {
        self.k
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        let mut s = self.raw_scores(x);
        softmax_in_place(&mut s);
        s
    }
}

pub fn fit_gbdt(ds: &Dataset, cfg: &GbdtConfig, weights: Option<&[f64]>) -> Result<GbdtModel> {
    fit_gbdt_with(ds, cfg, weights, cfg!(feature = "rayon"))
}

/// [`fit_gbdt`] with explicit control over parallel histogram construction.
pub fn fit_gbdt_with(
    ds: &Dataset,
    cfg: &GbdtConfig,
    weights: Option<&[f64]>,
    parallel: bool,
) -> Result<GbdtModel> {
    ds.check_nonempty()?;
    cfg.validate()?;
    let (n, k) = (ds.n(), ds.k());
    if k < 2 {
        return Err(Error::invalid(
            "gradient boosting needs at least two classes",
        ));
    }
    let w = normalized_weights(n, weights)?;
    let binned = quantile_bin(ds, cfg.n_bins)?;

    let mut mass = vec![0.0; k];
    for (&y, &wi) in ds.labels().iter().zip(&w) {
        mass[y] += wi;
    }
    let total: f64 = mass.iter().sum();
    let base_score: Vec<f64> = mass
        .iter()
        .map(|m| (m / total).max(crate::linear::LOG_FLOOR).ln())
        .collect();

    let mut scores: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let mut trees = Vec::with_capacity(cfg.n_iters);
    let mut loss_history = Vec::with_capacity(cfg.n_iters);
    let mut gk = vec![0.0; n];
    let mut hk = vec![0.0; n];

    for _ in 0..cfg.n_iters {
        let (g, h) = softmax_grad_hess(&scores, ds.labels(), k)?;
        let mut round = Vec::with_capacity(k);
        for c in 0..k {
            for i in 0..n {
                gk[i] = g[i * k + c] * w[i];
                hk[i] = h[i * k + c] * w[i];
            }
            let mut tree = tree::grow_tree_with(&binned, &gk, &hk, cfg, parallel);
            tree.scale_leaves(cfg.learning_rate);
            for i in 0..n {
                scores[i * k + c] += tree.predict_binned(&binned, i);
            }
            round.push(tree);
        }
        trees.push(round);
        loss_history.push(objective::mean_log_loss(&scores, ds.labels(), &w, k));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Training(
            "boosting produced non-finite scores".into(),
        ));
    }
    Ok(GbdtModel {
        d: ds.d(),
        k,
        base_score,
        trees,
        config: cfg.clone(),
        loss_history,
    })
}
