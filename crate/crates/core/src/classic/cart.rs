use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{normalized_weights, Dataset};
use crate::error::Result;
use crate::model::Classifier;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartConfig {
    /// `None` grows until purity or `min_samples_leaf` stops it.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            max_depth: Some(12),
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        distribution: Vec<f64>,
    },
}

/// Gini classification tree stored as a flat node array rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartTree {
    pub d: usize,
    pub k: usize,
    pub nodes: Vec<Node>,
    pub config: CartConfig,
}

impl CartTree {
    pub fn leaf_distribution(&self, x: &[f32]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if f64::from(x[*feature]) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                Node::Leaf { distribution } => return distribution,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

impl Classifier for CartTree {
    fn n_features(&self) -> usize {
        self.d
    }

    fn n_classes(&self) -> usize {
        self.k
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        self.leaf_distribution(x).to_vec()
    }
}

pub fn fit_cart(ds: &Dataset, weights: Option<&[f64]>, cfg: &CartConfig) -> Result<CartTree> {
    ds.check_nonempty()?;
    let w = normalized_weights(ds.n(), weights)?;
    let rows: Vec<usize> = (0..ds.n()).collect();
    Ok(build_tree(ds, &rows, &w, cfg, None))
}

/// Per-split feature subsampling used by the forest.
pub(crate) struct FeatureSampler<'a> {
    pub rng: &'a mut Rng,
    pub mtry: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grow a tree over `rows` (repeats allowed) with per-row weights indexed by
/// source row. Nodes are expanded depth-first, left before right.
pub(crate) fn build_tree(
    ds: &Dataset,
    rows: &[usize],
    weights: &[f64],
    cfg: &CartConfig,
    mut sampler: Option<FeatureSampler<'_>>,
) -> CartTree {
    let (d, k) = (ds.d(), ds.k());
    let min_leaf = cfg.min_samples_leaf.max(1);
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, rows, depth)
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, rows.to_vec(), 0)];
    nodes.push(Node::Leaf {
        distribution: Vec::new(),
    });
    let mut order: Vec<(f32, usize)> = Vec::with_capacity(rows.len());

    while let Some((slot, node_rows, depth)) = stack.pop() {
        let mass = class_mass(ds, &node_rows, weights, k);
        let depth_ok = cfg.max_depth.is_none_or(|m| depth < m);
        let impure = mass.iter().filter(|&&m| m > 0.0).count() > 1;
        let best = if depth_ok && impure && node_rows.len() >= 2 * min_leaf {
            let features: Vec<usize> = match sampler.as_mut() {
                Some(s) if s.mtry < d => {
                    let mut f = index::sample(s.rng, d, s.mtry).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..d).collect(),
            };
            best_split(
                ds, &node_rows, weights, &mass, &features, min_leaf, &mut order,
            )
        } else {
            None
        };
        match best {
            Some(c) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = node_rows
                    .iter()
                    .partition(|&&i| f64::from(ds.row(i)[c.feature]) <= c.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf {
                    distribution: Vec::new(),
                });
                nodes.push(Node::Leaf {
                    distribution: Vec::new(),
                });
                nodes[slot] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                // right pushed first so the left subtree is expanded first
                stack.push((right, right_rows, depth + 1));
                stack.push((left, left_rows, depth + 1));
            }
            None => {
                nodes[slot] = Node::Leaf {
                    distribution: leaf_distribution(ds, &node_rows, &mass),
                };
            }
        }
    }
    CartTree {
        d,
        k,
        nodes,
        config: cfg.clone(),
    }
}

fn class_mass(ds: &Dataset, rows: &[usize], weights: &[f64], k: usize) -> Vec<f64> {
    let mut mass = vec![0.0; k];
    for &i in rows {
        mass[ds.labels()[i]] += weights[i];
    }
    mass
}

fn leaf_distribution(ds: &Dataset, rows: &[usize], mass: &[f64]) -> Vec<f64> {
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        return mass.iter().map(|m| m / total).collect();
    }
    // all-zero weights: fall back to counts
    let mut counts = vec![0.0; mass.len()];
    for &i in rows {
        counts[ds.labels()[i]] += 1.0;
    }
    let n = rows.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// `sum_c m_c^2 / M`, or 0 for an empty side.
fn purity(mass: &[f64], total: f64) -> f64 {
    if total > 0.0 {
        mass.iter().map(|m| m * m).sum::<f64>() / total
    } else {
        0.0
    }
}

/// Best split by (larger gain, lower feature, lower threshold).
/// Gains closer than this count as tied, so rounding noise cannot reorder
/// candidates and the earliest one wins.
const GAIN_TIE: f64 = 1e-12;

fn best_split(
    ds: &Dataset,
    rows: &[usize],
    weights: &[f64],
    mass: &[f64],
    features: &[usize],
    min_leaf: usize,
    order: &mut Vec<(f32, usize)>,
) -> Option<Candidate> {
    let k = mass.len();
    let n = rows.len();
    let mut best: Option<Candidate> = None;
    let mut left = vec![0.0; k];
    let mut right = vec![0.0; k];
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let parent = purity(mass, total);
    for &f in features {
        order.clear();
        order.extend(rows.iter().map(|&i| (ds.row(i)[f], i)));
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if order[0].0 == order[n - 1].0 {
            continue;
        }
        left.iter_mut().for_each(|v| *v = 0.0);
        right.copy_from_slice(mass);
        let mut wl = 0.0;
        for pos in 0..n - 1 {
            let (v, i) = order[pos];
            let y = ds.labels()[i];
            left[y] += weights[i];
            right[y] -= weights[i];
            wl += weights[i];
            let next = order[pos + 1].0;
            if next == v {
                continue;
            }
            let n_left = pos + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            // weighted Gini decrease, normalised by the parent mass
            let gain = (purity(&left, wl) + purity(&right, total - wl) - parent) / total;
            if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_TIE) {
                best = Some(Candidate {
                    gain,
                    feature: f,
                    threshold: (f64::from(v) + f64::from(next)) / 2.0,
                });
            }
        }
    }
    best
}
