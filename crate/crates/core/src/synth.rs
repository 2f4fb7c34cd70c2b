//! Synthetic Gaussian blobs for tests, benches and desk-scale runs.

use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::rng;

/// `k` isotropic unit-variance Gaussian classes in `d` dimensions with
/// `n_per_class` samples each.
///
/// Class `c` is centred at `separation / sqrt(2)` along axis `c`, so every
/// pair of class means is exactly `separation` apart. Requires `k <= d`.
pub fn gaussian_blobs(
    n_per_class: usize,
    k: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    assert!(k >= 1 && k <= d, "blobs need 1 <= k <= d");
    let offset = separation / std::f64::consts::SQRT_2;
    let mut rng = rng::substream(seed, "blobs", 0);
    let n = n_per_class * k;
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let mean = if j == c { offset } else { 0.0 };
            features.push((mean + noise) as f32);
        }
        labels.push(c);
    }
    let names = (0..k).map(|c| format!("class_{c}")).collect();
    Dataset::new(features, d, labels, names).expect("blob fixture is valid")
}

/// [`gaussian_blobs`] followed by a seeded random rotation of feature space.
///
/// Distances, and so separation and Bayes error, are unchanged, but the
/// class signal is spread over every coordinate instead of one axis each.
pub fn rotated_gaussian_blobs(
    n_per_class: usize,
    k: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    let base = gaussian_blobs(n_per_class, k, d, separation, seed);
    let q = random_orthogonal(d, seed);
    let mut features = Vec::with_capacity(base.n() * d);
    for x in base.rows() {
        for row in &q {
            let v: f64 = row.iter().zip(x).map(|(a, &b)| a * f64::from(b)).sum();
            features.push(v as f32);
        }
    }
    Dataset::new(
        features,
        d,
        base.labels().to_vec(),
        base.class_names().to_vec(),
    )
    .expect("rotation keeps the fixture valid")
}

/// Rows of a `d`×`d` orthogonal matrix from Gram-Schmidt on Gaussian draws.
fn random_orthogonal(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::substream(seed, "blobs-rotation", 0);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..2 {
            for r in &rows {
                let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(r).for_each(|(x, a)| *x -= dot * a);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            rows.push(v);
        }
    }
    rows
}
