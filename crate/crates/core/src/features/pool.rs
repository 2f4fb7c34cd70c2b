use crate::error::{Error, Result};

/// `h x w x d` activation tensor, stored row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub h: usize,
    pub w: usize,
    pub d: usize,
    pub values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(h: usize, w: usize, d: usize, values: Vec<f32>) -> Result<Self> {
        if h == 0 || w == 0 || d == 0 {
            return Err(Error::invalid("feature map dimensions must be at least 1"));
        }
        if values.len() != h * w * d {
            return Err(Error::invalid(format!(
                "feature map has {} values, expected {}",
                values.len(),
                h * w * d
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature map contains non-finite values"));
        }
        Ok(FeatureMap { h, w, d, values })
    }
}

/// Global average pooling: the spatial mean of every channel, accumulated in f64.
pub fn gap(map: &FeatureMap) -> Vec<f32> {
    gap_f64(map).into_iter().map(|v| v as f32).collect()
}

pub(crate) fn gap_f64(map: &FeatureMap) -> Vec<f64> {
    let mut sums = vec![0.0f64; map.d];
    for cell in map.values.chunks_exact(map.d) {
        for (s, &v) in sums.iter_mut().zip(cell) {
            *s += f64::from(v);
        }
    }
    let area = (map.h * map.w) as f64;
    sums.iter_mut().for_each(|s| *s /= area);
    sums
}
