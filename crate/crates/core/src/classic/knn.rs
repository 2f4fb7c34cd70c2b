use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Classifier;

/// Euclidean k-nearest-neighbour vote. Keeps the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub neighbors: usize,
    pub d: usize,
    pub k: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

pub fn fit_knn(ds: &Dataset, neighbors: usize) -> Result<KnnModel> {
    if neighbors == 0 || neighbors > ds.n() {
        return Err(Error::invalid(format!(
            "k = {neighbors} must lie in [1, n = {}]",
            ds.n()
        )));
    }
    Ok(KnnModel {
        neighbors,
        d: ds.d(),
        k: ds.k(),
        features: ds.features().iter().map(|&v| f64::from(v)).collect(),
        labels: ds.labels().to_vec(),
    })
}

impl KnnModel {
    /// Indices of the `neighbors` closest training rows, ordered by
    /// (distance, index).
    pub fn nearest(&self, x: &[f32]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .features
            .chunks_exact(self.d.max(1))
            .take(self.labels.len())
            .enumerate()
            .map(|(i, row)| {
                let s: f64 = row
                    .iter()
                    .zip(x)
                    .map(|(a, &b)| (a - f64::from(b)).powi(2))
                    .sum();
                (s, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.neighbors < dist.len() {
            dist.select_nth_unstable_by(self.neighbors - 1, cmp);
            dist.truncate(self.neighbors);
        }
        dist.sort_unstable_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }
}

impl Classifier for KnnModel {
    fn n_features(&self) -> usize {
        self.d
    }

    fn n_classes(&self) -> usize {
        self.k
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        let mut votes = vec![0.0; self.k];
        let nearest = self.nearest(x);
        for &i in &nearest {
            votes[self.labels[i]] += 1.0;
        }
        let total = nearest.len() as f64;
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }
}
