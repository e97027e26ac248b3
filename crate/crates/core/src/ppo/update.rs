use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::{clip_grad_norm, Adam};
use super::policy::{gaussian_entropy, gaussian_log_prob, ActorCritic, ACTION_DIM, LOG_STD_MAX, LOG_STD_MIN};
use super::rollout::RolloutBatch;
use super::surrogate::{surrogate_log_prob_grad, surrogate_term};
use super::{PpoConfig, PpoError};
use crate::exec::Execution;

const CHUNK: usize = 32;

/// Minibatch averages of the optimised quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossStats {
    /// Mean clipped surrogate (maximised).
    pub surrogate: f64,
    /// Mean squared value error.
    pub value_loss: f64,
    pub entropy: f64,
    /// Mean of `(rho - 1) - ln rho`, a non-negative divergence estimate.
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Total minimised loss.
    pub loss: f64,
}

impl LossStats {
    fn add(&mut self, o: &LossStats) {
        self.surrogate += o.surrogate;
        self.value_loss += o.value_loss;
        self.entropy += o.entropy;
        self.approx_kl += o.approx_kl;
        self.clip_fraction += o.clip_fraction;
        self.loss += o.loss;
    }

    fn scale(&mut self, k: f64) {
        self.surrogate *= k;
        self.value_loss *= k;
        self.entropy *= k;
        self.approx_kl *= k;
        self.clip_fraction *= k;
        self.loss *= k;
    }

    pub fn is_finite(&self) -> bool {
        [self.surrogate, self.value_loss, self.entropy, self.approx_kl, self.loss]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Inputs of the PPO loss for a set of samples.
pub struct LossInputs<'a> {
    pub batch: &'a RolloutBatch,
    pub advantages: &'a [f64],
    pub indices: &'a [usize],
}

/// Loss `-L_clip + c_v (V - R)^2 - c_e H`, averaged over `indices`, and its
/// gradient with respect to every model parameter.
pub fn loss_and_gradient(model: &ActorCritic, inputs: &LossInputs, cfg: &PpoConfig, exec: Execution) -> (LossStats, Vec<f64>) {
    let chunks: Vec<&[usize]> = inputs.indices.chunks(CHUNK).collect();
    let parts = exec.map(&chunks, |idx| chunk_gradient(model, inputs, idx, cfg));
    let mut grad = vec![0.0; model.n_params()];
    let mut stats = LossStats::default();
    for (s, g) in &parts {
        stats.add(s);
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    let k = 1.0 / inputs.indices.len() as f64;
    stats.scale(k);
    grad.iter_mut().for_each(|g| *g *= k);
    (stats, grad)
}

fn chunk_gradient(model: &ActorCritic, inputs: &LossInputs, idx: &[usize], cfg: &PpoConfig) -> (LossStats, Vec<f64>) {
    let mut grad = vec![0.0; model.n_params()];
    let mut stats = LossStats::default();
    let ls_off = model.log_std_offset();
    let raw_log_std: Vec<f64> = model.params()[ls_off..ls_off + ACTION_DIM].to_vec();
    for &i in idx {
        let obs = inputs.batch.obs(i);
        let action = &inputs.batch.actions[i];
        let adv = inputs.advantages[i];
        let ret = inputs.batch.returns[i];

        let pt = model.policy_trace(obs);
        let lp = gaussian_log_prob(&pt.mean, &pt.log_std, action);
        let log_ratio = lp - inputs.batch.log_probs[i];
        let ratio = log_ratio.exp();
        let s = surrogate_term(ratio, adv, cfg.clip);
        let d_lp = -surrogate_log_prob_grad(ratio, adv, cfg.clip);
        let entropy = gaussian_entropy(&pt.log_std);

        let mut d_mean = [0.0; ACTION_DIM];
        for j in 0..ACTION_DIM {
            let var = (2.0 * pt.log_std[j]).exp();
            let diff = action[j] - pt.mean[j];
            d_mean[j] = d_lp * diff / var;
            if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw_log_std[j]) {
                grad[ls_off + j] += d_lp * (diff * diff / var - 1.0) - cfg.entropy_coef;
            }
        }
        model.backward_policy(&pt.trace, &d_mean, &mut grad);

        let vt = model.value_trace(obs);
        let v = vt.output()[0];
        let err = v - ret;
        model.backward_value(&vt, 2.0 * cfg.value_coef * err, &mut grad);

        stats.surrogate += s;
        stats.value_loss += err * err;
        stats.entropy += entropy;
        stats.approx_kl += (ratio - 1.0) - log_ratio;
        stats.clip_fraction += f64::from(u8::from((ratio - 1.0).abs() > cfg.clip));
        stats.loss += -s + cfg.value_coef * err * err - cfg.entropy_coef * entropy;
    }
    (stats, grad)
}

/// K epochs of shuffled minibatch Adam steps on a batch whose advantages and
/// returns are already computed. Returns the mean statistics over all
/// minibatches.
pub fn update<R: Rng + ?Sized>(
    model: &mut ActorCritic,
    opt: &mut Adam,
    batch: &RolloutBatch,
    cfg: &PpoConfig,
    rng: &mut R,
    exec: Execution,
) -> Result<LossStats, PpoError> {
    assert_eq!(batch.advantages.len(), batch.len(), "advantages not computed");
    let advantages = batch.normalized_advantages();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut total = LossStats::default();
    let mut count = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for idx in order.chunks(cfg.minibatch) {
            let inputs = LossInputs {
                batch,
                advantages: &advantages,
                indices: idx,
            };
            let (stats, mut grad) = loss_and_gradient(model, &inputs, cfg, exec);
            if !stats.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(PpoError::NonFiniteLoss { epoch, stats });
            }
            clip_grad_norm(&mut grad, cfg.max_grad_norm);
            opt.step(model.params_mut(), &grad);
            total.add(&stats);
            count += 1;
        }
    }
    if count > 0 {
        total.scale(1.0 / count as f64);
    }
    Ok(total)
}
