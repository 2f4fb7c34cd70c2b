//! Linear layer + softmax classification head trained with cross-entropy and Adam.
//!
//! Applied to raw feature vectors this is multinomial logistic regression, so the
//! same model also serves as the `lr` base learner.

mod adam;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use adam::AdamState;

use crate::data::{normalized_weights, Dataset};
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::rng;

/// Probability floor inside `ln` so confident mistakes cost a finite loss.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            eta: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

/// `u = W^T z + b` followed by softmax. `weights` is `d x K`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub d: usize,
    pub k: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Sample-weighted mean training loss of each epoch.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

impl LinearModel {
    pub fn new(d: usize, k: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != d * k || bias.len() != k {
            return Err(Error::invalid(format!(
                "linear model shapes: {} weights and {} biases for d={d}, K={k}",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear model has non-finite parameters"));
        }
        Ok(LinearModel {
            d,
            k,
            weights,
            bias,
            loss_history: Vec::new(),
        })
    }

    fn logits_into(&self, z: &[f32], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (j, &zj) in z.iter().enumerate() {
            let zj = f64::from(zj);
            let row = &self.weights[j * self.k..(j + 1) * self.k];
            for (u, w) in out.iter_mut().zip(row) {
                *u += w * zj;
            }
        }
    }
}

/// Logits `u_k = sum_j W[j,k] z_j + b_k`.
pub fn linear_forward(model: &LinearModel, z: &[f32]) -> Result<Vec<f64>> {
    if z.len() != model.d {
        return Err(Error::invalid(format!(
            "input has {} features, model expects {}",
            z.len(),
            model.d
        )));
    }
    let mut u = vec![0.0; model.k];
    model.logits_into(z, &mut u);
    Ok(u)
}

/// Max-shifted softmax, in place.
pub(crate) fn softmax_in_place(u: &mut [f64]) {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in u.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    u.iter_mut().for_each(|v| *v /= total);
}

pub fn softmax(u: &[f64]) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(Error::invalid("softmax of an empty vector"));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("softmax input is not finite"));
    }
    let mut p = u.to_vec();
    softmax_in_place(&mut p);
    Ok(p)
}

/// Mean negative log-probability of the true class over one-hot targets.
pub fn cross_entropy(probs: &[Vec<f64>], onehot: &[Vec<f64>]) -> Result<f64> {
    if probs.len() != onehot.len() || probs.is_empty() {
        return Err(Error::invalid(
            "cross-entropy needs equal, non-zero sample counts",
        ));
    }
    let mut total = 0.0;
    for (p, y) in probs.iter().zip(onehot) {
        if p.len() != y.len() {
            return Err(Error::invalid("probability and target widths differ"));
        }
        total -= p
            .iter()
            .zip(y)
            .map(|(&pk, &yk)| yk * pk.max(LOG_FLOOR).ln())
            .sum::<f64>();
    }
    Ok(total / probs.len() as f64)
}

/// Gradient of the mean cross-entropy over a batch with respect to `W` and `b`.
///
/// `rows` is a row-major `N x d` block; `onehot` has one `K`-vector per row.
pub fn head_gradient(
    model: &LinearModel,
    rows: &[f32],
    onehot: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = onehot.len();
    if n == 0 || rows.len() != n * model.d || onehot.iter().any(|y| y.len() != model.k) {
        return Err(Error::invalid("head_gradient shape mismatch"));
    }
    let mut gw = vec![0.0; model.d * model.k];
    let mut gb = vec![0.0; model.k];
    let mut p = vec![0.0; model.k];
    for (z, y) in rows.chunks_exact(model.d).zip(onehot) {
        model.logits_into(z, &mut p);
        softmax_in_place(&mut p);
        accumulate_gradient(z, &p, y, 1.0 / n as f64, &mut gw, &mut gb, model.k);
    }
    Ok((gw, gb))
}

fn accumulate_gradient(
    z: &[f32],
    p: &[f64],
    y: &[f64],
    scale: f64,
    gw: &mut [f64],
    gb: &mut [f64],
    k: usize,
) {
    for c in 0..k {
        let delta = (p[c] - y[c]) * scale;
        gb[c] += delta;
    }
    for (j, &zj) in z.iter().enumerate() {
        let zj = f64::from(zj);
        let row = &mut gw[j * k..(j + 1) * k];
        for c in 0..k {
            row[c] += (p[c] - y[c]) * scale * zj;
        }
    }
}

/// Mini-batch Adam training of the softmax head.
///
/// Each epoch visits a freshly shuffled order; the last short batch is kept.
/// Sample weights are normalised to mean one and scale each sample's loss.
pub fn train_softmax_head(
    ds: &Dataset,
    cfg: &TrainConfig,
    weights: Option<&[f64]>,
) -> Result<LinearModel> {
    ds.check_nonempty()?;
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::invalid("epochs and batch_size must be at least 1"));
    }
    let w = normalized_weights(ds.n(), weights)?;
    let (d, k) = (ds.d(), ds.k());

    let mut init = rng::substream(cfg.seed, "softmax-init", 0);
    let bound = 1.0 / (d.max(1) as f64).sqrt();
    let weights0 = (0..d * k).map(|_| init.gen_range(-bound..=bound)).collect();
    let mut model = LinearModel::new(d, k, weights0, vec![0.0; k])?;

    let mut adam = AdamState::new(d * k + k, cfg.eta, cfg.beta1, cfg.beta2, cfg.eps)?;
    let mut order: Vec<usize> = (0..ds.n()).collect();
    let mut params = vec![0.0; d * k + k];
    let mut gw = vec![0.0; d * k];
    let mut gb = vec![0.0; k];
    let mut p = vec![0.0; k];
    let mut onehot = vec![0.0; k];

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::substream(
            cfg.seed,
            "softmax-shuffle",
            epoch as u64,
        ));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            gw.iter_mut().for_each(|v| *v = 0.0);
            gb.iter_mut().for_each(|v| *v = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let z = ds.row(i);
                let y = ds.labels()[i];
                model.logits_into(z, &mut p);
                softmax_in_place(&mut p);
                epoch_loss -= w[i] * p[y].max(LOG_FLOOR).ln();
                onehot.iter_mut().for_each(|v| *v = 0.0);
                onehot[y] = 1.0;
                accumulate_gradient(z, &p, &onehot, scale * w[i], &mut gw, &mut gb, k);
            }
            params[..d * k].copy_from_slice(&model.weights);
            params[d * k..].copy_from_slice(&model.bias);
            let grads: Vec<f64> = gw.iter().chain(&gb).copied().collect();
            adam.step(&mut params, &grads)?;
            model.weights.copy_from_slice(&params[..d * k]);
            model.bias.copy_from_slice(&params[d * k..]);
        }
        model.loss_history.push(epoch_loss / ds.n() as f64);
    }
    if model
        .weights
        .iter()
        .chain(&model.bias)
        .any(|v| !v.is_finite())
    {
        return Err(Error::Training("softmax head diverged".into()));
    }
    Ok(model)
}

impl Classifier for LinearModel {
    fn n_features(&self) -> usize {
        self.d
    }

    fn n_classes(&self) -> usize {
        self.k
    }

    fn proba(&self, x: &[f32]) -> Vec<f64> {
        let mut u = vec![0.0; self.k];
        self.logits_into(x, &mut u);
        softmax_in_place(&mut u);
        u
    }
}
