/// Per-sample clipped surrogate `min(rho A, clip(rho, 1-eps, 1+eps) A)`.
pub fn surrogate_term(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    unclipped.min(clipped)
}

/// Derivative of [`surrogate_term`] with respect to the new log-probability.
/// Zero whenever the clipped branch is the active minimum.
pub fn surrogate_log_prob_grad(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    if unclipped <= clipped {
        unclipped
    } else {
        0.0
    }
}

/// Batch mean of the clipped surrogate objective.
pub fn clipped_surrogate(log_prob_new: &[f64], log_prob_old: &[f64], advantages: &[f64], eps: f64) -> f64 {
    let n = log_prob_new.len();
    assert!(n > 0 && log_prob_old.len() == n && advantages.len() == n, "length mismatch");
    log_prob_new
        .iter()
        .zip(log_prob_old)
        .zip(advantages)
        .map(|((new, old), a)| surrogate_term((new - old).exp(), *a, eps))
        .sum::<f64>()
        / n as f64
}
