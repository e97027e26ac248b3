//! Evaluation protocol: quantitative sampling per difficulty, special-purpose
//! scenarios, report tables and curve fits.
//!
//! The average tracking error of an episode is the mean over its steps of
//! `sqrt(e^2 + h^2)`, the combined cross- and vertical-track error. The
//! per-level figure is the plain mean of those episode averages.

mod fit;
mod report;
mod scenarios;

pub use fit::{disturbance_sensitivity, fit_exponential, fit_quadratic, CurveFit, FitError, FitKind};
pub use report::{
    fitted_curves_csv, metrics_csv, metrics_table, sensitivity_csv, sensitivity_table, EpisodeRecord, SensitivityRow,
    METRICS_HEADER, SENSITIVITY_HEADER,
};
pub use scenarios::{
    make_dead_end_scenario, make_pure_pf_scenario, make_stacked_scenario, StackDirection, DEAD_END_CENTRE, DEAD_END_RADIUS,
    PURE_PF_CURRENT, PURE_PF_WAYPOINTS, SHELL_SPHERE_RADIUS, STACK_SPHERES, STACK_SPHERE_RADIUS,
};

use crate::environment::{make_scenario_with, Difficulty, EnvConfig, EnvError, Environment, EpisodeOutcome, EpisodeStatus, ScenarioConfig};
use crate::exec::Execution;

/// Aggregate results of one difficulty level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMetrics {
    pub difficulty: Difficulty,
    pub episodes: usize,
    /// Percent of episodes that reached the goal.
    pub success_rate: f64,
    /// Percent of episodes that ended in a collision.
    pub collision_rate: f64,
    /// Mean of the per-episode average tracking errors (m).
    pub avg_tracking_error: f64,
}

impl LevelMetrics {
    pub fn from_records(difficulty: Difficulty, records: &[EpisodeRecord]) -> Self {
        let n = records.len();
        let pct = |s: EpisodeStatus| {
            if n == 0 {
                0.0
            } else {
                100.0 * records.iter().filter(|r| r.status == s).count() as f64 / n as f64
            }
        };
        let avg_tracking_error = if n == 0 {
            0.0
        } else {
            records.iter().map(|r| r.avg_tracking_error).sum::<f64>() / n as f64
        };
        Self {
            difficulty,
            episodes: n,
            success_rate: pct(EpisodeStatus::Success),
            collision_rate: pct(EpisodeStatus::Collision),
            avg_tracking_error,
        }
    }

    pub fn timeout_rate(&self) -> f64 {
        100.0 - self.success_rate - self.collision_rate
    }
}

/// Quantitative results of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub label: String,
    pub lambda_r: f64,
    pub levels: Vec<LevelMetrics>,
}

impl MetricsReport {
    pub fn level(&self, d: Difficulty) -> Option<&LevelMetrics> {
        self.levels.iter().find(|l| l.difficulty == d)
    }
}

/// Scenario seed of episode `i` in a quantitative run.
pub fn episode_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Runs one scenario to completion with a deterministic policy.
pub fn run_scenario<P>(policy: &P, env_cfg: &EnvConfig, scenario: ScenarioConfig) -> Result<EpisodeOutcome, EnvError>
where
    P: Fn(&[f64]) -> [f64; 2],
{
    let mut env = Environment::new(env_cfg.clone())?;
    let mut obs = env.reset(scenario);
    loop {
        let r = env.step(policy(&obs))?;
        if r.done {
            return Ok(env.outcome().expect("episode finished"));
        }
        obs = r.observation;
    }
}

/// Runs `n` seeded random scenarios of one difficulty and returns one record
/// per episode, in seed order.
pub fn run_episodes<P>(
    policy: &P,
    env_cfg: &EnvConfig,
    difficulty: Difficulty,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<EpisodeRecord>, EnvError>
where
    P: Fn(&[f64]) -> [f64; 2] + Sync,
{
    env_cfg.validate()?;
    exec.map_range(n, |i| {
        let s = episode_seed(seed, i);
        run_scenario(policy, env_cfg, make_scenario_with(difficulty, s, &env_cfg.scenario)).map(|o| EpisodeRecord::new(difficulty, s, &o))
    })
    .into_iter()
    .collect()
}

pub fn run_quantitative<P>(
    policy: &P,
    env_cfg: &EnvConfig,
    difficulty: Difficulty,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<LevelMetrics, EnvError>
where
    P: Fn(&[f64]) -> [f64; 2] + Sync,
{
    let records = run_episodes(policy, env_cfg, difficulty, n, seed, exec)?;
    Ok(LevelMetrics::from_records(difficulty, &records))
}
