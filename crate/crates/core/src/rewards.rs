//! Composite per-step reward: path following, sonar-weighted obstacle
//! avoidance, and penalties on roll, roll rate and fin usage.

use crate::perception::{closeness, SonarConfig, SonarImage};

#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    pub c_course: f64,
    pub c_elevation: f64,
    pub c_roll: f64,
    pub c_roll_rate: f64,
    pub c_rudder: f64,
    pub c_elevator: f64,
    /// Trade-off between path following (1) and obstacle avoidance (0).
    pub lambda_r: f64,
    pub gamma_c: f64,
    pub eps_c: f64,
    /// Angular normaliser of the orientation factor (rad).
    pub gamma_a: f64,
    pub eps_oa: f64,
}

/// Trade-off values studied for trained controllers.
pub const LAMBDA_PRESETS: [f64; 3] = [0.9, 0.5, 0.1];

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            c_course: -1.0,
            c_elevation: -1.0,
            c_roll: -0.5,
            c_roll_rate: -0.5,
            c_rudder: -0.1,
            c_elevator: -0.1,
            lambda_r: 0.9,
            gamma_c: 1.0,
            eps_c: 1e-4,
            gamma_a: SonarConfig::default().apex(),
            eps_oa: 0.05,
        }
    }
}

impl RewardConfig {
    pub fn with_lambda(lambda_r: f64) -> Self {
        Self {
            lambda_r,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.lambda_r) {
            return Err(format!("lambda_r must lie in [0, 1], got {}", self.lambda_r));
        }
        if !(self.eps_c > 0.0 && self.eps_oa > 0.0 && self.gamma_c > 0.0 && self.gamma_a > 0.0) {
            return Err("gamma_c, gamma_a, eps_c and eps_oa must be positive".into());
        }
        if self.c_course > 0.0 || self.c_elevation > 0.0 {
            return Err("path-following weights must be non-positive".into());
        }
        Ok(())
    }
}

pub fn reward_pf(course_error: f64, elevation_error: f64, cfg: &RewardConfig) -> f64 {
    cfg.c_course * course_error * course_error + cfg.c_elevation * elevation_error * elevation_error
}

/// Orientation factor of a sonar ray at elevation `theta` and azimuth `psi`.
pub fn beta_oa(theta: f64, psi: f64, cfg: &RewardConfig) -> f64 {
    (1.0 - 2.0 * theta.abs() / cfg.gamma_a) * (1.0 - 2.0 * psi.abs() / cfg.gamma_a) + cfg.eps_oa
}

/// Precomputed orientation factors for every ray of a sonar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleWeights {
    weights: Vec<f64>,
    total: f64,
}

impl ObstacleWeights {
    pub fn new(sonar: &SonarConfig, cfg: &RewardConfig) -> Self {
        let weights: Vec<f64> = (0..sonar.rows)
            .flat_map(|j| (0..sonar.cols).map(move |i| (j, i)))
            .map(|(j, i)| beta_oa(sonar.row_elevation(j), sonar.col_azimuth(i), cfg))
            .collect();
        let total = weights.iter().sum();
        Self { weights, total }
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        let total = weights.iter().sum();
        Self { weights, total }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Orientation-weighted average of the inverse squared "openness" of every ray.
pub fn reward_oa(image: &SonarImage, weights: &ObstacleWeights, cfg: &RewardConfig) -> f64 {
    assert_eq!(image.distances().len(), weights.weights.len(), "sonar shape mismatch");
    let num: f64 = image
        .distances()
        .iter()
        .zip(&weights.weights)
        .map(|(&d, &b)| {
            let open = 1.0 - closeness(d, image.range);
            b / (cfg.gamma_c * (open * open).max(cfg.eps_c))
        })
        .sum();
    -num / weights.total
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardInputs {
    pub course_error: f64,
    pub elevation_error: f64,
    pub roll: f64,
    pub roll_rate: f64,
    pub rudder: f64,
    pub elevator: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub path: f64,
    pub obstacle: f64,
    pub total: f64,
}

pub fn total_reward(
    inputs: &RewardInputs,
    image: &SonarImage,
    weights: &ObstacleWeights,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let path = reward_pf(inputs.course_error, inputs.elevation_error, cfg);
    let obstacle = reward_oa(image, weights, cfg);
    let aux = cfg.c_roll * inputs.roll.powi(2)
        + cfg.c_roll_rate * inputs.roll_rate.powi(2)
        + cfg.c_rudder * inputs.rudder.powi(2)
        + cfg.c_elevator * inputs.elevator.powi(2);
    RewardBreakdown {
        path,
        obstacle,
        total: cfg.lambda_r * path + (1.0 - cfg.lambda_r) * obstacle + aux,
    }
}
