use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// A disjoint, exhaustive partition of a dataset into train and holdout parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub holdout: Dataset,
    /// Source row indices of `train`, ascending.
    pub train_indices: Vec<usize>,
    /// Source row indices of `holdout`, ascending.
    pub holdout_indices: Vec<usize>,
    pub ratio: f64,
    pub seed: u64,
}

/// Per-class train count: `ratio * n_c` rounded half up.
pub(crate) fn train_count(ratio: f64, n_c: usize) -> usize {
    // The epsilon keeps products such as 0.7 * 5 on the intended side of .5.
    ((ratio * n_c as f64 + 0.5 + 1e-9).floor() as usize).min(n_c)
}

/// Stratified split: within every class, a seeded shuffle assigns
/// `round_half_up(ratio * n_c)` samples to train and the rest to holdout.
pub fn stratified_split(ds: &Dataset, ratio: f64, seed: u64) -> Result<SplitResult> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!(
            "split ratio {ratio} is not in (0, 1)"
        )));
    }
    let groups = ds.indices_by_class();
    if let Some(c) = groups.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!(
            "class {:?} has no samples",
            ds.class_names()[c]
        )));
    }
    let mut rng = rng::from_seed(seed);
    let mut train_indices = Vec::with_capacity(ds.n());
    let mut holdout_indices = Vec::with_capacity(ds.n());
    for mut group in groups {
        let take = train_count(ratio, group.len());
        group.shuffle(&mut rng);
        train_indices.extend_from_slice(&group[..take]);
        holdout_indices.extend_from_slice(&group[take..]);
    }
    train_indices.sort_unstable();
    holdout_indices.sort_unstable();
    Ok(SplitResult {
        train: ds.subset(&train_indices),
        holdout: ds.subset(&holdout_indices),
        train_indices,
        holdout_indices,
        ratio,
        seed,
    })
}
