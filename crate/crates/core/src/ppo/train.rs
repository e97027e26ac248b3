use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::policy::ActorCritic;
use super::rollout::{Actor, RolloutBatch};
use super::update::update;
use super::{PpoConfig, TrainError};
use crate::environment::{Difficulty, EnvConfig, EpisodeStatus};
use crate::exec::Execution;

/// Curriculum promotion rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumConfig {
    pub start: Difficulty,
    pub end: Difficulty,
    /// Rolling success rate that triggers promotion.
    pub promote_success_rate: f64,
    /// Number of recent episodes in the rolling window.
    pub window: usize,
    /// Environment steps after which a level is left regardless of success.
    pub level_budget: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            start: Difficulty::Beginner,
            end: Difficulty::Expert,
            promote_success_rate: 0.9,
            window: 50,
            level_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub ppo: PpoConfig,
    pub curriculum: CurriculumConfig,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ppo: PpoConfig::default(),
            curriculum: CurriculumConfig::default(),
            seed: 0,
            hidden: vec![64, 64],
            init_log_std: -0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.ppo.validate()?;
        let c = &self.curriculum;
        if c.start > c.end {
            return Err("curriculum start level is above its end level".into());
        }
        if c.window == 0 || !(0.0..=1.0).contains(&c.promote_success_rate) {
            return Err("curriculum window must be positive and the promotion rate in [0, 1]".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err("hidden layer widths must be positive".into());
        }
        Ok(())
    }
}

/// One row of the learning curve.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub iteration: usize,
    pub total_steps: usize,
    pub level: Difficulty,
    /// Episodes finished during this iteration.
    pub episodes: usize,
    /// Mean undiscounted return of those episodes (NaN when none finished).
    pub mean_return: f64,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub tracking_error: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
}

pub const CURVE_HEADER: &str =
    "iteration,total_steps,level,episodes,mean_return,success_rate,collision_rate,tracking_error,surrogate,value_loss,approx_kl";

pub fn curve_to_csv(curve: &[CurvePoint]) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for c in curve {
        let _ = writeln!(
            s,
            "{},{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            c.iteration,
            c.total_steps,
            c.level,
            c.episodes,
            c.mean_return,
            c.success_rate,
            c.collision_rate,
            c.tracking_error,
            c.surrogate,
            c.value_loss,
            c.approx_kl
        );
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ActorCritic,
    pub curve: Vec<CurvePoint>,
    pub level: Difficulty,
    pub total_steps: usize,
}

struct Curriculum {
    cfg: CurriculumConfig,
    level: Difficulty,
    level_steps: usize,
    recent: VecDeque<bool>,
}

impl Curriculum {
    fn new(cfg: CurriculumConfig) -> Self {
        Self {
            level: cfg.start,
            cfg,
            level_steps: 0,
            recent: VecDeque::new(),
        }
    }

    fn record(&mut self, level: Difficulty, success: bool) {
        if level != self.level {
            return;
        }
        self.recent.push_back(success);
        if self.recent.len() > self.cfg.window {
            self.recent.pop_front();
        }
    }

    fn maybe_promote(&mut self, steps: usize) {
        self.level_steps += steps;
        if self.level >= self.cfg.end {
            return;
        }
        let full = self.recent.len() == self.cfg.window;
        let rate = self.recent.iter().filter(|&&s| s).count() as f64 / self.cfg.window as f64;
        if (full && rate >= self.cfg.promote_success_rate) || self.level_steps >= self.cfg.level_budget {
            self.level = self.level.next().expect("level below end has a successor");
            self.level_steps = 0;
            self.recent.clear();
        }
    }
}

/// Initial model for a configuration; training starts from exactly this.
pub fn initial_model(env_cfg: &EnvConfig, cfg: &TrainConfig) -> ActorCritic {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    ActorCritic::new(env_cfg.obs_dim(), &cfg.hidden, cfg.init_log_std, &mut rng)
}

/// Curriculum PPO training. `on_iteration` sees every curve point together
/// with the parameters after that iteration's update.
pub fn train<F>(env_cfg: &EnvConfig, cfg: &TrainConfig, exec: Execution, mut on_iteration: F) -> Result<TrainOutcome, TrainError>
where
    F: FnMut(&CurvePoint, &ActorCritic),
{
    cfg.validate().map_err(TrainError::Config)?;
    let p = &cfg.ppo;
    let mut model = initial_model(env_cfg, cfg);
    let mut opt = Adam::new(model.n_params(), p.learning_rate);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(u64::MAX);
    let mut actors = (0..p.actors)
        .map(|i| Actor::new(env_cfg.clone(), cfg.seed, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let mut curriculum = Curriculum::new(cfg.curriculum.clone());
    let mut curve = Vec::new();
    let mut total_steps = 0;
    let mut iteration = 0;

    while total_steps < p.total_steps {
        let level = curriculum.level;
        let snapshot = &model;
        let results = exec.map_mut(&mut actors, |a| a.collect(snapshot, level, p.horizon));
        let mut batch = RolloutBatch::new(model.obs_dim());
        let mut episodes = Vec::new();
        for (b, e) in results {
            batch.append(b);
            episodes.extend(e);
        }
        batch.compute_advantages(p.gamma, p.lambda);
        let steps = batch.len();
        total_steps += steps;

        let last_good = model.clone();
        let stats = match update(&mut model, &mut opt, &batch, p, &mut shuffle_rng, exec) {
            Ok(s) if model.is_finite() => s,
            Ok(_) => {
                return Err(TrainError::NumericalFault {
                    iteration,
                    message: "non-finite parameters after update".into(),
                    last_good: Box::new(last_good),
                })
            }
            Err(e) => {
                return Err(TrainError::NumericalFault {
                    iteration,
                    message: e.to_string(),
                    last_good: Box::new(last_good),
                })
            }
        };

        for e in &episodes {
            curriculum.record(e.difficulty, e.status == EpisodeStatus::Success);
        }
        let n = episodes.len();
        let frac = |s: EpisodeStatus| episodes.iter().filter(|e| e.status == s).count() as f64 / n as f64;
        let mean = |f: fn(&super::rollout::EpisodeSummary) -> f64| episodes.iter().map(f).sum::<f64>() / n as f64;
        let point = CurvePoint {
            iteration,
            total_steps,
            level,
            episodes: n,
            mean_return: mean(|e| e.total_reward),
            success_rate: frac(EpisodeStatus::Success),
            collision_rate: frac(EpisodeStatus::Collision),
            tracking_error: mean(|e| e.avg_tracking_error),
            surrogate: stats.surrogate,
            value_loss: stats.value_loss,
            approx_kl: stats.approx_kl,
        };
        on_iteration(&point, &model);
        curve.push(point);
        curriculum.maybe_promote(steps);
        iteration += 1;
    }
    Ok(TrainOutcome {
        model,
        curve,
        level: curriculum.level,
        total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promotion_on_success_window() {
        let mut c = Curriculum::new(CurriculumConfig {
            window: 4,
            ..Default::default()
        });
        for _ in 0..3 {
            c.record(Difficulty::Beginner, true);
        }
        c.maybe_promote(10);
        assert_eq!(c.level, Difficulty::Beginner);
        c.record(Difficulty::Beginner, true);
        c.maybe_promote(10);
        assert_eq!(c.level, Difficulty::Intermediate);
        assert!(c.recent.is_empty());
    }

    #[test]
    fn promotion_on_budget_and_cap_at_end() {
        let mut c = Curriculum::new(CurriculumConfig {
            end: Difficulty::Intermediate,
            level_budget: 100,
            ..Default::default()
        });
        c.maybe_promote(100);
        assert_eq!(c.level, Difficulty::Intermediate);
        c.maybe_promote(1000);
        assert_eq!(c.level, Difficulty::Intermediate);
    }

    #[test]
    fn stale_level_episodes_are_ignored() {
        let mut c = Curriculum::new(CurriculumConfig {
            start: Difficulty::Intermediate,
            window: 1,
            ..Default::default()
        });
        c.record(Difficulty::Beginner, true);
        assert!(c.recent.is_empty());
    }
}
