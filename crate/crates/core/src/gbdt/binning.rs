use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const MAX_BINS: usize = 256;

/// Quantised feature matrix. Codes are stored feature-major so one feature's
/// column is contiguous during histogram construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedMatrix {
    pub n: usize,
    pub d: usize,
    pub codes: Vec<u8>,
    /// Per-feature ascending cut points; value `x` gets code `#{e in edges : e < x}`.
    pub edges: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn column(&self, feature: usize) -> &[u8] {
        &self.codes[feature * self.n..(feature + 1) * self.n]
    }

    pub fn code(&self, row: usize, feature: usize) -> u8 {
        self.codes[feature * self.n + row]
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }
}

pub fn bin_value(edges: &[f64], x: f64) -> u8 {
    edges.partition_point(|&e| e < x) as u8
}

/// Cut points for one feature.
///
/// With at most `n_bins` distinct values every value gets its own bin (cuts at
/// the midpoints between neighbours). Otherwise cuts sit just above the
/// empirical `b / n_bins` quantiles, moved to the next gap between distinct
/// values and deduplicated.
pub(crate) fn feature_edges(values: &mut [f64], n_bins: usize) -> Vec<f64> {
    values.sort_unstable_by(f64::total_cmp);
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.dedup();
    if distinct.len() <= n_bins {
        return distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    }
    let n = values.len();
    let mut edges: Vec<f64> = Vec::with_capacity(n_bins - 1);
    for b in 1..n_bins {
        let lower = values[(b * n / n_bins).max(1) - 1];
        let next = distinct.partition_point(|&v| v <= lower);
        if next == distinct.len() {
            continue;
        }
        let edge = (lower + distinct[next]) / 2.0;
        if edges.last().is_none_or(|&e| edge > e) {
            edges.push(edge);
        }
    }
    edges
}

pub fn quantile_bin(ds: &Dataset, n_bins: usize) -> Result<BinnedMatrix> {
    ds.check_nonempty()?;
    if !(2..=MAX_BINS).contains(&n_bins) {
        return Err(Error::invalid(format!(
            "n_bins {n_bins} is not in [2, 256]"
        )));
    }
    let (n, d) = (ds.n(), ds.d());
    let columns = crate::par::map_indices(d, |f| {
        let mut col: Vec<f64> = ds.rows().map(|r| f64::from(r[f])).collect();
        let edges = feature_edges(&mut col, n_bins);
        let codes: Vec<u8> = ds
            .rows()
            .map(|r| bin_value(&edges, f64::from(r[f])))
            .collect();
        (edges, codes)
    });
    let mut codes = Vec::with_capacity(n * d);
    let mut edges = Vec::with_capacity(d);
    for (e, c) in columns {
        edges.push(e);
        codes.extend_from_slice(&c);
    }
    Ok(BinnedMatrix { n, d, codes, edges })
}
