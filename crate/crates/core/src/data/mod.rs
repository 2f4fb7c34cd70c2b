//! Labelled feature matrices, feature files, manifests, splitting and balancing.

mod balance;
pub(crate) mod fvec;
mod manifest;
mod split;

use std::collections::HashSet;

pub use balance::undersample;
pub use fvec::{
    decode_feature_table, encode_feature_table, read_feature_file, read_feature_table,
    write_feature_file, write_feature_table, FeatureTable,
};
pub use manifest::{read_manifest, Manifest, ManifestEntry};
pub use split::{stratified_split, SplitResult};

use crate::error::{Error, Result};

/// An immutable labelled sample set: `n` rows of `d` single-precision features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f32>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Build a dataset from a row-major feature buffer, validating every invariant.
    pub fn new(
        features: Vec<f32>,
        d: usize,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if features.len() != n * d {
            return Err(Error::invalid(format!(
                "feature buffer has {} values, expected n*d = {}*{}",
                features.len(),
                n,
                d
            )));
        }
        if n > 0 && class_names.is_empty() {
            return Err(Error::invalid("dataset needs at least one class"));
        }
        check_class_names(&class_names)?;
        let k = class_names.len();
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= k) {
            return Err(Error::invalid(format!(
                "label {y} of sample {i} is out of range for {k} classes"
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at sample {}, column {}",
                pos / d.max(1),
                pos % d.max(1)
            )));
        }
        Ok(Dataset {
            features,
            labels,
            class_names,
            n,
            d,
        })
    }

    pub fn from_rows(
        rows: &[Vec<f32>],
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("ragged feature rows"));
        }
        if rows.len() != labels.len() {
            return Err(Error::invalid("row count and label count differ"));
        }
        Self::new(rows.concat(), d, labels, class_names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    /// Number of samples in each class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Sample indices grouped by class, each group in ascending order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k()];
        for (i, &y) in self.labels.iter().enumerate() {
            groups[y].push(i);
        }
        groups
    }

    /// New dataset holding the given rows in the given order; the class table is kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            class_names: self.class_names.clone(),
            n: indices.len(),
            d: self.d,
        }
    }

    pub(crate) fn check_nonempty(&self) -> Result<()> {
        if self.n == 0 {
            Err(Error::invalid("dataset is empty"))
        } else {
            Ok(())
        }
    }
}

pub(crate) fn check_class_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::invalid(format!("duplicate class name {name:?}")));
        }
    }
    Ok(())
}

/// Validate optional per-sample weights and return them normalised to mean 1.
///
/// `None` yields unit weights. Weights must be finite, non-negative and not all zero.
pub fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let Some(w) = weights else {
        return Ok(vec![1.0; n]);
    };
    if w.len() != n {
        return Err(Error::invalid(format!(
            "{} sample weights for {} samples",
            w.len(),
            n
        )));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(
            "sample weights must be finite and non-negative",
        ));
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("sample weights are all zero"));
    }
    let scale = n as f64 / total;
    Ok(w.iter().map(|v| v * scale).collect())
}
