use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::{Mlp, Trace};

pub const ACTION_DIM: usize = 2;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Gaussian policy with state-independent log-std plus a separate value
/// network. All parameters share one flat vector laid out as
/// `[policy | log_std | value]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    policy: Mlp,
    value: Mlp,
    params: Vec<f64>,
}

/// Quantities needed to differentiate one sample.
pub(crate) struct PolicyTrace {
    pub trace: Trace,
    pub mean: [f64; ACTION_DIM],
    pub log_std: [f64; ACTION_DIM],
}

pub fn gaussian_log_prob(mean: &[f64; ACTION_DIM], log_std: &[f64; ACTION_DIM], action: &[f64; ACTION_DIM]) -> f64 {
    (0..ACTION_DIM)
        .map(|j| {
            let z = (action[j] - mean[j]) / log_std[j].exp();
            -0.5 * z * z - log_std[j] - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64; ACTION_DIM]) -> f64 {
    log_std.iter().map(|s| s + 0.5 * (2.0 * PI * std::f64::consts::E).ln()).sum()
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], init_log_std: f64, rng: &mut R) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let policy = Mlp::new(sizes(ACTION_DIM));
        let value = Mlp::new(sizes(1));
        let mut params = policy.init(rng, 0.01);
        params.extend([init_log_std; ACTION_DIM]);
        params.extend(value.init(rng, 1.0));
        Self { policy, value, params }
    }

    /// Rebuilds a model from layer widths and a flat parameter vector.
    pub fn from_parts(policy_sizes: Vec<usize>, value_sizes: Vec<usize>, params: Vec<f64>) -> Result<Self, String> {
        if policy_sizes.last() != Some(&ACTION_DIM) || value_sizes.last() != Some(&1) {
            return Err("policy must output 2 values and the critic 1".into());
        }
        if policy_sizes.first() != value_sizes.first() {
            return Err("policy and critic input sizes differ".into());
        }
        if policy_sizes.len() < 2 || value_sizes.len() < 2 || policy_sizes.iter().chain(&value_sizes).any(|&s| s == 0) {
            return Err("invalid layer sizes".into());
        }
        let policy = Mlp::new(policy_sizes);
        let value = Mlp::new(value_sizes);
        let expected = policy.n_params() + ACTION_DIM + value.n_params();
        if params.len() != expected {
            return Err(format!("expected {expected} parameters, found {}", params.len()));
        }
        Ok(Self { policy, value, params })
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn policy_sizes(&self) -> &[usize] {
        self.policy.sizes()
    }

    pub fn value_sizes(&self) -> &[usize] {
        self.value.sizes()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn split(&self) -> (&[f64], &[f64], &[f64]) {
        let np = self.policy.n_params();
        let (pol, rest) = self.params.split_at(np);
        let (ls, val) = rest.split_at(ACTION_DIM);
        (pol, ls, val)
    }

    pub(crate) fn log_std_offset(&self) -> usize {
        self.policy.n_params()
    }

    pub(crate) fn value_offset(&self) -> usize {
        self.policy.n_params() + ACTION_DIM
    }

    /// Raw log-std parameters clipped to the admissible band.
    pub fn log_std(&self) -> [f64; ACTION_DIM] {
        let (_, ls, _) = self.split();
        std::array::from_fn(|j| ls[j].clamp(LOG_STD_MIN, LOG_STD_MAX))
    }

    pub fn policy_forward(&self, obs: &[f64]) -> ([f64; ACTION_DIM], [f64; ACTION_DIM]) {
        let t = self.policy_trace(obs);
        (t.mean, t.log_std.map(f64::exp))
    }

    pub(crate) fn policy_trace(&self, obs: &[f64]) -> PolicyTrace {
        let (pol, _, _) = self.split();
        let trace = self.policy.forward_trace(pol, obs);
        let out = trace.output();
        PolicyTrace {
            mean: [out[0], out[1]],
            log_std: self.log_std(),
            trace,
        }
    }

    pub(crate) fn value_trace(&self, obs: &[f64]) -> Trace {
        let (_, _, val) = self.split();
        self.value.forward_trace(val, obs)
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        let (_, _, val) = self.split();
        self.value.forward(val, obs)[0]
    }

    pub(crate) fn backward_policy(&self, trace: &Trace, d_mean: &[f64], grad: &mut [f64]) {
        let (pol, _, _) = self.split();
        let np = pol.len();
        self.policy.backward(pol, trace, d_mean, &mut grad[..np]);
    }

    pub(crate) fn backward_value(&self, trace: &Trace, d_value: f64, grad: &mut [f64]) {
        let (_, _, val) = self.split();
        let off = self.value_offset();
        self.value.backward(val, trace, &[d_value], &mut grad[off..]);
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64; ACTION_DIM]) -> f64 {
        let t = self.policy_trace(obs);
        gaussian_log_prob(&t.mean, &t.log_std, action)
    }

    /// Mean action clipped to the actuator range.
    pub fn act_deterministic(&self, obs: &[f64]) -> [f64; ACTION_DIM] {
        self.policy_forward(obs).0.map(|m| m.clamp(-1.0, 1.0))
    }

    /// Draws an action; returns `(action, log_prob)` for the unclipped sample.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> ([f64; ACTION_DIM], f64) {
        let t = self.policy_trace(obs);
        let action: [f64; ACTION_DIM] = std::array::from_fn(|j| {
            let z: f64 = rng.sample(StandardNormal);
            t.mean[j] + t.log_std[j].exp() * z
        });
        (action, gaussian_log_prob(&t.mean, &t.log_std, &action))
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> ActorCritic {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        ActorCritic::new(78, &[64, 64], -0.5, &mut rng)
    }

    #[test]
    fn log_prob_at_mean() {
        let m = model();
        let obs = vec![0.1; 78];
        let (mean, std) = m.policy_forward(&obs);
        let expected: f64 = -std.iter().map(|s| (s * (2.0 * PI).sqrt()).ln()).sum::<f64>();
        assert!((m.log_prob(&obs, &mean) - expected).abs() < 1e-12);
    }

    #[test]
    fn forward_is_deterministic_and_small_at_init() {
        let m = model();
        let obs: Vec<f64> = (0..78).map(|i| ((i as f64) * 0.37).sin()).collect();
        assert_eq!(m.policy_forward(&obs), m.policy_forward(&obs));
        assert!(m.policy_forward(&obs).0.iter().all(|v| v.abs() < 0.1));
        assert_eq!(m.log_std(), [-0.5, -0.5]);
    }

    #[test]
    fn lipschitz_in_inputs() {
        let m = model();
        let obs = vec![0.2; 78];
        let (base, _) = m.policy_forward(&obs);
        let v0 = m.value(&obs);
        for delta in [1e-2, 1e-3, 1e-4] {
            let mut o = obs.clone();
            o[5] += delta;
            let (p, _) = m.policy_forward(&o);
            let change = (p[0] - base[0]).abs() + (p[1] - base[1]).abs() + (m.value(&o) - v0).abs();
            assert!(change < 10.0 * delta);
        }
    }

    #[test]
    fn log_std_is_bounded() {
        let mut m = model();
        let off = m.log_std_offset();
        m.params_mut()[off] = 10.0;
        m.params_mut()[off + 1] = -10.0;
        assert_eq!(m.log_std(), [LOG_STD_MAX, LOG_STD_MIN]);
    }

    #[test]
    fn parts_round_trip() {
        let m = model();
        let back = ActorCritic::from_parts(m.policy_sizes().to_vec(), m.value_sizes().to_vec(), m.params().to_vec()).unwrap();
        assert_eq!(back, m);
        assert!(ActorCritic::from_parts(vec![78, 64, 2], vec![78, 64, 1], vec![0.0; 3]).is_err());
    }
}
