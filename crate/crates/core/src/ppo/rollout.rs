use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gae::gae_with_ends;
use super::policy::{ActorCritic, ACTION_DIM};
use crate::environment::{make_scenario_with, Difficulty, EnvConfig, EnvError, Environment, EpisodeStatus};

/// Transitions collected by one or more actors, concatenated actor by actor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Value of each step's successor: zero after a terminal state.
    pub next_values: Vec<f64>,
    /// Marks an episode end or the end of an actor's segment.
    pub cuts: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn new(obs_dim: usize) -> Self {
        Self {
            obs_dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn obs(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) {
        self.advantages = gae_with_ends(&self.rewards, &self.values, &self.next_values, &self.cuts, gamma, lambda);
        self.returns = self.advantages.iter().zip(&self.values).map(|(a, v)| a + v).collect();
    }

    pub fn append(&mut self, other: RolloutBatch) {
        assert!(self.is_empty() || self.obs_dim == other.obs_dim, "observation size mismatch");
        self.obs_dim = other.obs_dim;
        self.observations.extend(other.observations);
        self.actions.extend(other.actions);
        self.log_probs.extend(other.log_probs);
        self.rewards.extend(other.rewards);
        self.values.extend(other.values);
        self.next_values.extend(other.next_values);
        self.cuts.extend(other.cuts);
        self.advantages.extend(other.advantages);
        self.returns.extend(other.returns);
    }

    /// Advantages shifted to zero mean and scaled to unit standard deviation.
    pub fn normalized_advantages(&self) -> Vec<f64> {
        normalize(&self.advantages)
    }
}

pub fn normalize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    xs.iter().map(|x| (x - mean) / (std + 1e-8)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub difficulty: Difficulty,
    pub status: EpisodeStatus,
    pub steps: usize,
    pub avg_tracking_error: f64,
    pub total_reward: f64,
}

/// One environment plus its private random stream.
pub struct Actor {
    env: Environment,
    rng: ChaCha8Rng,
    obs: Option<Vec<f64>>,
    level: Difficulty,
}

impl Actor {
    pub fn new(env_cfg: EnvConfig, seed: u64, index: u64) -> Result<Self, EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index + 1);
        Ok(Self {
            env: Environment::new(env_cfg)?,
            rng,
            obs: None,
            level: Difficulty::Beginner,
        })
    }

    fn start_episode(&mut self, level: Difficulty) -> Vec<f64> {
        self.level = level;
        let seed = self.rng.random::<u64>();
        let sc = make_scenario_with(level, seed, &self.env.config().scenario);
        self.env.reset(sc)
    }

    /// Runs `horizon` steps with the stochastic policy. Episodes in progress
    /// carry over between calls; new episodes start at `level`.
    pub fn collect(&mut self, model: &ActorCritic, level: Difficulty, horizon: usize) -> (RolloutBatch, Vec<EpisodeSummary>) {
        let mut batch = RolloutBatch::new(model.obs_dim());
        let mut episodes = Vec::new();
        let mut obs = match self.obs.take() {
            Some(o) => o,
            None => self.start_episode(level),
        };
        for t in 0..horizon {
            let (action, log_prob) = model.sample(&obs, &mut self.rng);
            let value = model.value(&obs);
            let r = self.env.step(action).expect("active episode");
            batch.observations.extend_from_slice(&obs);
            batch.actions.push(action);
            batch.log_probs.push(log_prob);
            batch.values.push(value);
            batch.rewards.push(r.reward);
            if r.done {
                batch.next_values.push(if r.terminal { 0.0 } else { model.value(&r.observation) });
                batch.cuts.push(true);
                let o = self.env.outcome().expect("finished episode");
                episodes.push(EpisodeSummary {
                    difficulty: self.level,
                    status: o.status,
                    steps: o.steps,
                    avg_tracking_error: o.avg_tracking_error,
                    total_reward: o.total_reward,
                });
                obs = self.start_episode(level);
            } else {
                let last = t + 1 == horizon;
                batch.next_values.push(if last { model.value(&r.observation) } else { f64::NAN });
                batch.cuts.push(last);
                obs = r.observation;
            }
        }
        // Fill in successor values that are simply the next stored value.
        for t in 0..horizon.saturating_sub(1) {
            if batch.next_values[t].is_nan() {
                batch.next_values[t] = batch.values[t + 1];
            }
        }
        self.obs = Some(obs);
        (batch, episodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalisation() {
        let n = normalize(&[1.0, 2.0, 3.0, 4.0]);
        let mean: f64 = n.iter().sum::<f64>() / 4.0;
        let var: f64 = n.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-15);
        assert!((var - 1.0).abs() < 1e-7);
    }

    #[test]
    fn collected_shapes_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = EnvConfig::default();
        let model = ActorCritic::new(cfg.obs_dim(), &[8], -0.5, &mut rng);
        let mut actor = Actor::new(cfg, 1, 0).unwrap();
        let (mut b, _) = actor.collect(&model, Difficulty::Beginner, 50);
        b.compute_advantages(0.99, 0.95);
        assert_eq!(b.len(), 50);
        assert_eq!(b.observations.len(), 50 * model.obs_dim());
        assert_eq!(b.advantages.len(), 50);
        assert!(b.cuts[49]);
        assert!(b.next_values.iter().all(|v| v.is_finite()));
        assert_eq!(b.next_values[10], b.values[11]);
    }
}
