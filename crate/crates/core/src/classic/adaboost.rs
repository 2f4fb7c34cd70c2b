use serde::{Deserialize, Serialize};

use super::cart::{build_tree, CartConfig, CartTree};
use crate::data::{normalized_weights, Dataset};
use crate::error::{Error, Result};
use crate::model::{argmax, Classifier};

/// Vote weight given to a stump with zero weighted training error: `ln(1e12)`.
pub const ALPHA_CAP: f64 = 27.631_021_115_928_547;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub n_estimators: usize,
    pub stump_depth: usize,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        AdaBoostConfig {
            n_estimators: 50,
            stump_depth: 1,
        }
    }
}

/// Diagnostics for one boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub error: f64,
    pub alpha: f64,
    /// Sum of the sample distribution after reweighting.
    pub weight_sum: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub d: usize,
    pub k: usize,
    pub stumps: Vec<(CartTree, f64)>,
    pub rounds: Vec<BoostRound>,
}

/// SAMME vote weight `ln((1 - err) / err) + ln(K - 1)`.
pub fn samme_alpha(err: f64, k: usize) -> f64 {
    ((1.0 - err) / err).ln() + ((k - 1) as f64).ln()
}

/// Discrete multiclass AdaBoost (SAMME) over shallow CART trees.
///
/// Boosting stops early when a stump is no better than chance
/// (`err >= 1 - 1/K`, stump discarded) or perfect (`err == 0`, kept with
/// [`ALPHA_CAP`]).
pub fn fit_adaboost_samme(
    ds: &Dataset,
    weights: Option<&[f64]>,
    cfg: &AdaBoostConfig,
) -> Result<AdaBoostModel> {
    ds.check_nonempty()?;
    let k = ds.k();
    if k < 2 {
        return Err(Error::invalid("AdaBoost needs at least two classes"));
    }
    if cfg.n_estimators == 0 || cfg.stump_depth == 0 {
        return Err(Error::invalid(
            "n_estimators and stump_depth must be at least 1",
        ));
    }
    let n = ds.n();
    let mut dist: Vec<f64> = normalized_weights(n, weights)?
        .into_iter()
        .map(|w| w / n as f64)
        .collect();
    let tree_cfg = CartConfig {
        max_depth: Some(cfg.stump_depth),
        min_samples_leaf: 1,
    };
    let rows: Vec<usize> = (0..n).collect();
    let chance = 1.0 - 1.0 / k as f64;
    let mut stumps = Vec::new();
    let mut rounds = Vec::new();

    for _ in 0..cfg.n_estimators {
        let stump = build_tree(ds, &rows, &dist, &tree_cfg, None);
        let miss: Vec<bool> = ds
            .rows()
            .zip(ds.labels())
            .map(|(x, &y)| argmax(stump.leaf_distribution(x)) != y)
            .collect();
        let total: f64 = dist.iter().sum();
        let err = dist
            .iter()
            .zip(&miss)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum::<f64>()
            / total;

        if err >= chance {
            rounds.push(BoostRound {
                error: err,
                alpha: 0.0,
                weight_sum: total,
                kept: false,
            });
            break;
        }
        if err <= 0.0 {
            rounds.push(BoostRound {
                error: 0.0,
                alpha: ALPHA_CAP,
                weight_sum: total,
                kept: true,
            });
            stumps.push((stump, ALPHA_CAP));
            break;
        }
        let alpha = samme_alpha(err, k).min(ALPHA_CAP);
        let boost = alpha.exp();
        for (w, &m) in dist.iter_mut().zip(&miss) {
            if m {
                *w *= boost;
            }
        }
        let sum: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|w| *w /= sum);
        rounds.push(BoostRound {
            error: err,
            alpha,
            weight_sum: dist.iter().sum(),
            kept: true,
        });
        stumps.push((stump, alpha));
    }
    if stumps.is_empty() {
        return Err(Error::Training(
            "every AdaBoost stump was rejected as no better than chance".into(),
        ));
    }
    Ok(AdaBoostModel {
        d: ds.d(),
        k,
        stumps,
        rounds,
    })
}

impl Classifier for AdaBoostModel {
    fn n_features(&self) -> usize {
        self.d
    }

    fn n_classes(&self) -> usize {
        self.k
    }

    /// Alpha-weighted vote share of each class.
    fn proba(&self, x: &[f32]) -> Vec<f64> {
        let mut votes = vec![0.0; self.k];
        let mut total = 0.0;
        for (stump, alpha) in &self.stumps {
            votes[argmax(stump.leaf_distribution(x))] += alpha;
            total += alpha;
        }
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_formula() {
        assert!((samme_alpha(0.5, 3) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(samme_alpha(0.5, 2), 0.0);
        assert!((ALPHA_CAP - 1e12f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn threshold_separable_binary_data_is_fit_immediately() {
        let xs: Vec<f32> = (0..10).map(|i| i as f32).collect();
        let ys: Vec<usize> = (0..10).map(|i| usize::from(i >= 6)).collect();
        let ds = Dataset::new(xs, 1, ys, vec!["a".into(), "b".into()]).unwrap();

        // brute-force stump oracle: some threshold has zero error
        let perfect = (0..9).any(|t| (0..10).all(|i| (i > t) == (i >= 6)));
        assert!(perfect);

        let m = fit_adaboost_samme(&ds, None, &AdaBoostConfig::default()).unwrap();
        assert!(m.rounds.len() <= 3);
        for (x, &y) in ds.rows().zip(ds.labels()) {
            assert_eq!(m.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn weights_stay_a_distribution() {
        let ds = crate::synth::gaussian_blobs(40, 3, 4, 1.5, 2);
        let m = fit_adaboost_samme(
            &ds,
            None,
            &AdaBoostConfig {
                n_estimators: 20,
                stump_depth: 1,
            },
        )
        .unwrap();
        assert!(!m.stumps.is_empty());
        for r in &m.rounds {
            assert!((r.weight_sum - 1.0).abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn chance_level_stump_fails_training() {
        // identical features: the stump can only predict the majority class
        let ds = Dataset::new(
            vec![0.0; 4],
            1,
            vec![0, 1, 0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let err = fit_adaboost_samme(&ds, None, &AdaBoostConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = Dataset::new(vec![0.0, 1.0], 1, vec![0, 0], vec!["a".into()]).unwrap();
        assert!(fit_adaboost_samme(&ds, None, &AdaBoostConfig::default()).is_err());
    }
}
