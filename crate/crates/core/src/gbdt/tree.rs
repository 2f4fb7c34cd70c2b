use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use super::{GbdtConfig, Growth};
use crate::par::if_rayon;
#[cfg(feature = "rayon")]
use crate::par::*;

/// Gradient and Hessian sums of one histogram bin.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStats {
    pub g: f64,
    pub h: f64,
}

/// One histogram per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Histograms(pub Vec<Vec<BinStats>>);

impl Histograms {
    /// `self - other`, bin by bin.
    fn subtract(&self, other: &Histograms) -> Histograms {
        Histograms(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| BinStats {
                            g: x.g - y.g,
                            h: x.h - y.h,
                        })
                        .collect()
                })
                .collect(),
        )
    }
}

fn feature_histogram(
    binned: &BinnedMatrix,
    f: usize,
    rows: &[usize],
    g: &[f64],
    h: &[f64],
) -> Vec<BinStats> {
    let mut hist = vec![BinStats::default(); binned.n_bins(f)];
    let col = binned.column(f);
    for &i in rows {
        let b = &mut hist[col[i] as usize];
        b.g += g[i];
        b.h += h[i];
    }
    hist
}

/// Per-feature gradient/Hessian histograms over `rows`.
///
/// Each feature's bins are summed in row order by a single worker, so the
/// parallel and serial paths produce bit-identical sums.
pub fn build_histograms(
    binned: &BinnedMatrix,
    rows: &[usize],
    g: &[f64],
    h: &[f64],
    parallel: bool,
) -> Histograms {
    let one = |f: usize| feature_histogram(binned, f, rows, g, h);
    if parallel {
        if_rayon!(
            Histograms((0..binned.d).into_par_iter().map(one).collect()),
            Histograms((0..binned.d).map(one).collect())
        )
    } else {
        Histograms((0..binned.d).map(one).collect())
    }
}

/// `G^2 / (H + lambda)`.
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// `1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)]`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    0.5 * (score(gl, hl, lambda) + score(gr, hr, lambda) - score(gl + gr, hl + hr, lambda))
}

/// Newton leaf value `-G / (H + lambda)`.
pub fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

/// Second-order surrogate of the loss for a constant leaf output `w`.
pub fn leaf_objective(g: f64, h: f64, lambda: f64, w: f64) -> f64 {
    g * w + 0.5 * (h + lambda) * w * w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    /// Rows with code `<= bin` go left.
    pub bin: usize,
    pub gain: f64,
    pub left_g: f64,
    pub left_h: f64,
}

/// Relative resolution below which two gains count as equal.
const GAIN_TIE: f64 = 1e-12;

/// Best split of a node by (larger gain, lower feature, lower bin). Gains
/// within rounding noise of each other tie. Splits with no clear positive
/// gain or a child Hessian below the minimum are rejected.
pub fn best_split(
    hist: &Histograms,
    total_g: f64,
    total_h: f64,
    cfg: &GbdtConfig,
) -> Option<SplitChoice> {
    let tie = GAIN_TIE * (1.0 + total_g * total_g / (total_h + cfg.lambda));
    let mut best: Option<SplitChoice> = None;
    for (f, bins) in hist.0.iter().enumerate() {
        let (mut gl, mut hl) = (0.0, 0.0);
        for (b, stats) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
            gl += stats.g;
            hl += stats.h;
            let (gr, hr) = (total_g - gl, total_h - hl);
            if hl < cfg.min_hessian_per_leaf || hr < cfg.min_hessian_per_leaf {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, cfg.lambda);
            if gain > tie && best.as_ref().is_none_or(|s| gain > s.gain + tie) {
                best = Some(SplitChoice {
                    feature: f,
                    bin: b,
                    gain,
                    left_g: gl,
                    left_h: hl,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegNode {
    Split {
        feature: usize,
        /// Bin-code split point; equivalent to `x <= threshold`.
        bin: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Regression tree over binned features, stored as a flat node array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict_raw(&self, x: &[f32]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if f64::from(x[*feature]) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                RegNode::Leaf { value } => return *value,
            }
        }
    }

    pub fn predict_binned(&self, binned: &BinnedMatrix, row: usize) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Split {
                    feature,
                    bin,
                    left,
                    right,
                    ..
                } => {
                    at = if binned.code(row, *feature) as usize <= *bin {
                        *left
                    } else {
                        *right
                    };
                }
                RegNode::Leaf { value } => return *value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, RegNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[RegNode], at: usize) -> usize {
            match &nodes[at] {
                RegNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
                RegNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for node in &mut self.nodes {
            if let RegNode::Leaf { value } = node {
                *value *= factor;
            }
        }
    }
}

struct Pending {
    slot: usize,
    depth: usize,
    rows: Vec<usize>,
    g: f64,
    h: f64,
    hist: Histograms,
    split: Option<SplitChoice>,
}

struct Grower<'a> {
    binned: &'a BinnedMatrix,
    g: &'a [f64],
    h: &'a [f64],
    cfg: &'a GbdtConfig,
    parallel: bool,
    nodes: Vec<RegNode>,
}

impl Grower<'_> {
    fn pending(&self, slot: usize, depth: usize, rows: Vec<usize>, hist: Histograms) -> Pending {
        let g: f64 = rows.iter().map(|&i| self.g[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.h[i]).sum();
        let split = best_split(&hist, g, h, self.cfg);
        Pending {
            slot,
            depth,
            rows,
            g,
            h,
            hist,
            split,
        }
    }

    fn finish_leaf(&mut self, p: &Pending) {
        self.nodes[p.slot] = RegNode::Leaf {
            value: leaf_value(p.g, p.h, self.cfg.lambda),
        };
    }

    /// Turn a pending node into a split and return its two children.
    fn split(&mut self, p: Pending) -> (Pending, Pending) {
        let s = p.split.expect("split requested for a node without one");
        let col = self.binned.column(s.feature);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            p.rows.iter().partition(|&&i| col[i] as usize <= s.bin);
        // build the smaller child directly, derive the larger by subtraction
        let (small, left_is_small) = if left_rows.len() <= right_rows.len() {
            (&left_rows, true)
        } else {
            (&right_rows, false)
        };
        let small_hist = build_histograms(self.binned, small, self.g, self.h, self.parallel);
        let large_hist = p.hist.subtract(&small_hist);
        let (left_hist, right_hist) = if left_is_small {
            (small_hist, large_hist)
        } else {
            (large_hist, small_hist)
        };
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(RegNode::Leaf { value: 0.0 });
        self.nodes.push(RegNode::Leaf { value: 0.0 });
        self.nodes[p.slot] = RegNode::Split {
            feature: s.feature,
            bin: s.bin,
            threshold: self.binned.edges[s.feature][s.bin],
            gain: s.gain,
            left,
            right,
        };
        (
            self.pending(left, p.depth + 1, left_rows, left_hist),
            self.pending(right, p.depth + 1, right_rows, right_hist),
        )
    }
}

/// Grow one regression tree on per-row gradients `g` and Hessians `h`.
///
/// Leaf values are raw Newton steps `-G / (H + lambda)`, before shrinkage.
pub fn grow_tree(binned: &BinnedMatrix, g: &[f64], h: &[f64], cfg: &GbdtConfig) -> RegressionTree {
    grow_tree_with(binned, g, h, cfg, cfg!(feature = "rayon"))
}

pub(crate) fn grow_tree_with(
    binned: &BinnedMatrix,
    g: &[f64],
    h: &[f64],
    cfg: &GbdtConfig,
    parallel: bool,
) -> RegressionTree {
    let rows: Vec<usize> = (0..binned.n).collect();
    let mut grower = Grower {
        binned,
        g,
        h,
        cfg,
        parallel,
        nodes: vec![RegNode::Leaf { value: 0.0 }],
    };
    let root_hist = build_histograms(binned, &rows, g, h, parallel);
    let root = grower.pending(0, 0, rows, root_hist);

    match cfg.growth {
        Growth::LeafWise { max_leaves } => {
            let mut frontier = vec![root];
            while frontier.len() < max_leaves.max(1) {
                // largest gain wins; ties go to the earliest-created leaf
                let mut pick: Option<usize> = None;
                for (i, p) in frontier.iter().enumerate() {
                    if let Some(s) = &p.split {
                        let better = match pick {
                            None => true,
                            Some(j) => {
                                let t = frontier[j].split.as_ref().unwrap();
                                let tie = GAIN_TIE * (1.0 + s.gain.abs().max(t.gain.abs()));
                                if (s.gain - t.gain).abs() <= tie {
                                    p.slot < frontier[j].slot
                                } else {
                                    s.gain > t.gain
                                }
                            }
                        };
                        if better {
                            pick = Some(i);
                        }
                    }
                }
                let Some(i) = pick else { break };
                let p = frontier.swap_remove(i);
                let (l, r) = grower.split(p);
                frontier.push(l);
                frontier.push(r);
            }
            for p in &frontier {
                grower.finish_leaf(p);
            }
        }
        Growth::LevelWise { max_depth } => {
            let mut level = vec![root];
            while !level.is_empty() {
                let mut next = Vec::new();
                for p in level {
                    if p.depth < max_depth && p.split.is_some() {
                        let (l, r) = grower.split(p);
                        next.push(l);
                        next.push(r);
                    } else {
                        grower.finish_leaf(&p);
                    }
                }
                level = next;
            }
        }
    }
    RegressionTree {
        nodes: grower.nodes,
    }
}
