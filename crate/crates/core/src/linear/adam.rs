use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bias-corrected first/second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, eta: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::invalid("Adam decay rates must lie in [0, 1)"));
        }
        if eps.is_nan() || eps <= 0.0 || !eta.is_finite() {
            return Err(Error::invalid(
                "Adam needs eps > 0 and a finite learning rate",
            ));
        }
        Ok(AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            eta,
            beta1,
            beta2,
            eps,
        })
    }

    pub fn with_defaults(len: usize) -> Self {
        Self::new(len, 1e-3, 0.9, 0.999, 1e-8).expect("defaults are valid")
    }

    /// `theta <- theta - eta * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid("Adam parameter/gradient length mismatch"));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.eta * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
