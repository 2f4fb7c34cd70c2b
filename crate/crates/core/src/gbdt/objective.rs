use crate::error::{Error, Result};
use crate::linear::softmax_in_place;

/// Gradient and diagonal Hessian of the multiclass log-loss with respect to
/// the raw scores: `g = p - onehot(y)`, `h = p (1 - p)`.
///
/// `scores` is `n x K` row-major; both outputs share that layout.
pub fn softmax_grad_hess(
    scores: &[f64],
    labels: &[usize],
    k: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 || scores.len() != labels.len() * k {
        return Err(Error::invalid("score matrix does not match labels"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("non-finite scores"));
    }
    let mut g = scores.to_vec();
    let mut h = vec![0.0; scores.len()];
    for ((grow, hrow), &y) in g.chunks_exact_mut(k).zip(h.chunks_exact_mut(k)).zip(labels) {
        softmax_in_place(grow);
        for (gv, hv) in grow.iter_mut().zip(hrow.iter_mut()) {
            *hv = *gv * (1.0 - *gv);
        }
        grow[y] -= 1.0;
    }
    Ok((g, h))
}

/// Mean of `-ln p_true` over rows of a score matrix, weighted by `w`.
pub(crate) fn mean_log_loss(scores: &[f64], labels: &[usize], weights: &[f64], k: usize) -> f64 {
    let mut p = vec![0.0; k];
    let mut total = 0.0;
    let mut mass = 0.0;
    for ((row, &y), &w) in scores.chunks_exact(k).zip(labels).zip(weights) {
        p.copy_from_slice(row);
        softmax_in_place(&mut p);
        total -= w * p[y].max(crate::linear::LOG_FLOOR).ln();
        mass += w;
    }
    total / mass
}
