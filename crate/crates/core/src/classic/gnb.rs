use serde::{Deserialize, Serialize};

use crate::data::{normalized_weights, Dataset};
use crate::error::{Error, Result};
use crate::linear::softmax_in_place;
use crate::model::Classifier;

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with per-class, per-feature means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub d: usize,
    pub k: usize,
    pub log_priors: Vec<f64>,
    /// `K x d`, row-major.
    pub means: Vec<f64>,
    /// `K x d`, row-major, floored at [`VARIANCE_FLOOR`].
    pub variances: Vec<f64>,
}

pub fn fit_gaussian_nb(ds: &Dataset, weights: Option<&[f64]>) -> Result<GaussianNb> {
    ds.check_nonempty()?;
    let w = normalized_weights(ds.n(), weights)?;
    let (d, k) = (ds.d(), ds.k());
    let mut mass = vec![0.0; k];
    let mut means = vec![0.0; k * d];
    for ((x, &y), &wi) in ds.rows().zip(ds.labels()).zip(&w) {
        mass[y] += wi;
        for (m, &v) in means[y * d..(y + 1) * d].iter_mut().zip(x) {
            *m += wi * f64::from(v);
        }
    }
    if let Some(c) = mass.iter().position(|&m| m <= 0.0) {
        return Err(Error::invalid(format!(
            "class {:?} has no (weighted) samples",
            ds.class_names()[c]
        )));
    }
    for c in 0..k {
        means[c * d..(c + 1) * d]
            .iter_mut()
            .for_each(|m| *m /= mass[c]);
    }
    let mut variances = vec![0.0; k * d];
    for ((x, &y), &wi) in ds.rows().zip(ds.labels()).zip(&w) {
        let mu = &means[y * d..(y + 1) * d];
        for ((s, &v), m) in variances[y * d..(y + 1) * d].iter_mut().zip(x).zip(mu) {
            let dv = f64::from(v) - m;
            *s += wi * dv * dv;
        }
    }
    for c in 0..k {
        variances[c * d..(c + 1) * d]
            .iter_mut()
            .for_each(|v| *v = (*v / mass[c]).max(VARIANCE_FLOOR));
    }
    let total: f64 = mass.iter().sum();
    Ok(GaussianNb {
        d,
        k,
        log_priors: mass.iter().map(|m| (m / total).ln()).collect(),
        means,
        variances,
    })
}

impl GaussianNb {
    /// Unnormalised log joint `ln p(c) + sum_j ln N(x_j | mu, var)` per class.
    pub fn log_joint(&self, x: &[f32]) -> Vec<f64> {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        (0..self.k)
            .map(|c| {
                let mu = &self.means[c * self.d..(c + 1) * self.d];
                let var = &self.variances[c * self.d..(c + 1) * self.d];
                let ll: f64 = x
                    .iter()
                    .zip(mu)
                    .zip(var)
                    .map(|((&v, m), s)| {
                        let dv = f64::from(v) - m;
                        ln_2pi + s.ln() + dv * dv / s
                    })
                    .sum();
                self.log_priors[c] - 0.5 * ll
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn n_features(&self) -> usize {
        self.d
    }

    fn n_classes(&self) -> usize {
        self.k
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        let mut p = self.log_joint(x);
        softmax_in_place(&mut p);
        p
    }
}
