//! Actor-critic PPO with clipped surrogate objective and GAE.

mod adam;
mod checkpoint;
mod gae;
mod mlp;
mod policy;
mod rollout;
mod surrogate;
mod train;
mod update;

pub use adam::{clip_grad_norm, Adam};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use gae::{gae, gae_with_ends};
pub use mlp::{Mlp, Trace};
pub use policy::{gaussian_entropy, gaussian_log_prob, ActorCritic, ACTION_DIM, LOG_STD_MAX, LOG_STD_MIN};
pub use rollout::{normalize, Actor, EpisodeSummary, RolloutBatch};
pub use surrogate::{clipped_surrogate, surrogate_log_prob_grad, surrogate_term};
pub use train::{curve_to_csv, initial_model, train, CurriculumConfig, CurvePoint, TrainConfig, TrainOutcome, CURVE_HEADER};
pub use update::{loss_and_gradient, update, LossInputs, LossStats};

use thiserror::Error;

use crate::environment::EnvError;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    /// Parallel actors N.
    pub actors: usize,
    /// Steps per actor per iteration T.
    pub horizon: usize,
    /// Optimisation epochs K.
    pub epochs: usize,
    /// Minibatch size M.
    pub minibatch: usize,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Environment step budget over the whole run.
    pub total_steps: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            actors: 8,
            horizon: 1024,
            epochs: 4,
            minibatch: 256,
            learning_rate: 3e-4,
            max_grad_norm: 0.5,
            value_coef: 0.5,
            entropy_coef: 0.0,
            total_steps: 1_000_000,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(format!("clip must lie in (0, 1), got {}", self.clip));
        }
        if self.actors == 0 || self.horizon == 0 || self.epochs == 0 || self.minibatch == 0 {
            return Err("actors, horizon, epochs and minibatch must be positive".into());
        }
        if self.minibatch >= self.actors * self.horizon {
            return Err("minibatch must be smaller than actors * horizon".into());
        }
        if !(self.learning_rate > 0.0 && self.max_grad_norm > 0.0) {
            return Err("learning rate and gradient clip must be positive".into());
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 {
            return Err("loss coefficients must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpoError {
    #[error("non-finite loss in epoch {epoch}: {stats:?}")]
    NonFiniteLoss { epoch: usize, stats: LossStats },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("numerical fault in iteration {iteration}: {message}")]
    NumericalFault {
        iteration: usize,
        message: String,
        last_good: Box<ActorCritic>,
    },
}
