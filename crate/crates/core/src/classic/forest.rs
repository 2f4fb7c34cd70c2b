use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::cart::{build_tree, CartConfig, CartTree, FeatureSampler};
use crate::data::{normalized_weights, Dataset};
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::{par, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub tree: CartConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            mtry: None,
            bootstrap: true,
            tree: CartConfig {
                max_depth: None,
                min_samples_leaf: 1,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub d: usize,
    pub k: usize,
    pub trees: Vec<CartTree>,
}

fn default_mtry(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).max(1)
}

/// Bagged CART trees. Tree `t` draws its bootstrap sample and its per-split
/// feature subsets from substream `(seed, "forest-tree", t)`, so the fitted
/// forest does not depend on how trees are scheduled across threads.
pub fn fit_random_forest(
    ds: &Dataset,
    weights: Option<&[f64]>,
    cfg: &ForestConfig,
) -> Result<ForestModel> {
    ds.check_nonempty()?;
    if cfg.n_trees == 0 {
        return Err(Error::invalid("forest needs at least one tree"));
    }
    let w = normalized_weights(ds.n(), weights)?;
    let d = ds.d();
    let mtry = cfg
        .mtry
        .unwrap_or_else(|| default_mtry(d))
        .clamp(1, d.max(1));
    let trees = par::map_indices(cfg.n_trees, |t| {
        let mut rng = rng::substream(cfg.seed, "forest-tree", t as u64);
        let rows: Vec<usize> = if cfg.bootstrap {
            (0..ds.n()).map(|_| rng.gen_range(0..ds.n())).collect()
        } else {
            (0..ds.n()).collect()
        };
        let sampler = FeatureSampler {
            rng: &mut rng,
            mtry,
        };
        build_tree(ds, &rows, &w, &cfg.tree, Some(sampler))
    });
    Ok(ForestModel {
        d,
        k: ds.k(),
        trees,
    })
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.d
    }

    fn n_classes(&self) -> usize {
        self.k
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        let mut p = vec![0.0; self.k];
        for tree in &self.trees {
            for (acc, v) in p.iter_mut().zip(tree.leaf_distribution(x)) {
                *acc += v;
            }
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::fit_cart;
    use crate::synth::gaussian_blobs;

    #[test]
    fn single_unbagged_full_tree_equals_cart() {
        let ds = gaussian_blobs(30, 3, 5, 2.0, 4);
        let cart_cfg = CartConfig::default();
        let cfg = ForestConfig {
            n_trees: 1,
            mtry: Some(5),
            bootstrap: false,
            tree: cart_cfg.clone(),
            seed: 1,
        };
        let forest = fit_random_forest(&ds, None, &cfg).unwrap();
        let tree = fit_cart(&ds, None, &cart_cfg).unwrap();
        assert_eq!(forest.trees[0], tree);
        let probe = gaussian_blobs(20, 3, 5, 2.0, 99);
        for x in probe.rows() {
            assert_eq!(forest.proba(x), tree.proba(x));
        }
    }

    #[test]
    fn fits_separable_blobs() {
        let ds = gaussian_blobs(100, 3, 8, 5.0 * 2f64.sqrt(), 8);
        let forest = fit_random_forest(
            &ds,
            None,
            &ForestConfig {
                n_trees: 25,
                ..Default::default()
            },
        )
        .unwrap();
        let correct = ds
            .rows()
            .zip(ds.labels())
            .filter(|(x, &y)| forest.predict_unchecked(x) == y)
            .count();
        assert!(correct as f64 / 300.0 >= 0.99);
    }

    #[test]
    fn default_mtry_is_ceil_sqrt() {
        assert_eq!(default_mtry(64), 8);
        assert_eq!(default_mtry(65), 9);
        assert_eq!(default_mtry(1), 1);
    }
}
