//! Flat `section.key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Every key has a
//! default, unknown keys are rejected, and [`ExperimentConfig::to_text`]
//! writes a file that parses back to the same configuration. Angles are in
//! radians, lists are comma separated.

use std::fmt::Write as _;
use std::path::PathBuf;

use auv_core::environment::{Difficulty, EnvConfig};
use auv_core::ppo::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    /// Episodes per difficulty level in the quantitative suite.
    pub episodes: usize,
    /// Seed of the first evaluation scenario.
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            episodes: 20,
            seed: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub eval: EvalSettings,
    /// Directory that receives run folders unless `--out` is given.
    pub output_root: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, text: String },
    UnknownKey { line: usize, key: String },
    BadValue { line: usize, key: String, message: String },
    Duplicate { line: usize, key: String },
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Syntax { line, text } => write!(f, "line {line}: expected 'section.key = value', got '{text}'"),
            Self::UnknownKey { line, key } => write!(f, "line {line}: unknown key '{key}'"),
            Self::BadValue { line, key, message } => write!(f, "line {line}: bad value for '{key}': {message}"),
            Self::Duplicate { line, key } => write!(f, "line {line}: '{key}' set twice"),
            Self::Invalid(m) => write!(f, "invalid configuration: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

trait Value: Sized {
    fn parse(s: &str) -> Result<Self, String>;
    fn show(&self) -> String;
}

impl Value for f64 {
    fn parse(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| format!("'{s}' is not a number"))
    }
    fn show(&self) -> String {
        format!("{self:?}")
    }
}

impl Value for usize {
    fn parse(s: &str) -> Result<Self, String> {
        s.replace('_', "").parse().map_err(|_| format!("'{s}' is not a non-negative integer"))
    }
    fn show(&self) -> String {
        self.to_string()
    }
}

impl Value for u64 {
    fn parse(s: &str) -> Result<Self, String> {
        s.replace('_', "").parse().map_err(|_| format!("'{s}' is not a non-negative integer"))
    }
    fn show(&self) -> String {
        self.to_string()
    }
}

impl Value for bool {
    fn parse(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| format!("'{s}' is not true or false"))
    }
    fn show(&self) -> String {
        self.to_string()
    }
}

impl Value for String {
    fn parse(s: &str) -> Result<Self, String> {
        Ok(s.to_string())
    }
    fn show(&self) -> String {
        self.clone()
    }
}

impl Value for Difficulty {
    fn parse(s: &str) -> Result<Self, String> {
        s.parse()
    }
    fn show(&self) -> String {
        self.to_string()
    }
}

impl<T: Value> Value for Vec<T> {
    fn parse(s: &str) -> Result<Self, String> {
        s.split(',').map(|p| T::parse(p.trim())).collect()
    }
    fn show(&self) -> String {
        self.iter().map(Value::show).collect::<Vec<_>>().join(", ")
    }
}

impl<const N: usize> Value for [f64; N] {
    fn parse(s: &str) -> Result<Self, String> {
        let v = Vec::<f64>::parse(s)?;
        let n = v.len();
        v.try_into().map_err(|_| format!("expected {N} values, got {n}"))
    }
    fn show(&self) -> String {
        self.to_vec().show()
    }
}

macro_rules! fields {
    ($($key:literal => $($field:ident).+ : $doc:literal;)*) => {
        /// Every key with its description, in file order.
        pub const FIELDS: &[(&str, &str)] = &[$(($key, $doc)),*];

        fn get_field(c: &ExperimentConfig, key: &str) -> Option<String> {
            match key {
                $($key => Some(Value::show(&c.$($field).+)),)*
                _ => None,
            }
        }

        fn set_field(c: &mut ExperimentConfig, key: &str, value: &str) -> Option<Result<(), String>> {
            match key {
                $($key => Some(Value::parse(value).map(|v| c.$($field).+ = v)),)*
                _ => None,
            }
        }
    };
}

fields! {
    "hydro.mass" => env.hydro.mass: "vehicle mass (kg)";
    "hydro.inertia" => env.hydro.inertia: "moments of inertia Ix, Iy, Iz (kg m^2)";
    "hydro.added_mass" => env.hydro.added_mass: "added-mass magnitudes for surge, sway, heave, roll, pitch, yaw";
    "hydro.cg_offset_z" => env.hydro.cg_offset_z: "centre of gravity below centre of buoyancy (m)";
    "hydro.gravity" => env.hydro.gravity: "gravitational acceleration (m/s^2)";
    "hydro.buoyancy" => env.hydro.buoyancy: "buoyancy force (N)";
    "hydro.linear_damping" => env.hydro.linear_damping: "linear damping per degree of freedom";
    "hydro.quadratic_damping" => env.hydro.quadratic_damping: "quadratic damping per degree of freedom";
    "hydro.lift_damping" => env.hydro.lift_damping: "lift damping per degree of freedom, scaled by |u_r|";
    "hydro.thrust_coeff" => env.hydro.thrust_coeff: "thrust per squared shaft speed (N s^2)";
    "hydro.propeller_max" => env.hydro.propeller_max: "maximum shaft speed (rev/s)";
    "hydro.fin_lift" => env.hydro.fin_lift: "fin lift per radian and squared surge speed";
    "hydro.fin_arm" => env.hydro.fin_arm: "fin centre of pressure aft of the origin (m)";
    "hydro.fin_max" => env.hydro.fin_max: "fin deflection limit (rad)";
    "hydro.coriolis" => env.hydro.coriolis: "include Coriolis and centripetal terms";
    "hydro.restoring" => env.hydro.restoring: "include gravity and buoyancy restoring forces";
    "hydro.singularity_margin" => env.hydro.singularity_margin: "smallest admissible |cos(pitch)|";
    "sonar.rows" => env.sonar.rows: "ray rows";
    "sonar.cols" => env.sonar.cols: "ray columns";
    "sonar.spacing" => env.sonar.spacing: "angle between neighbouring rays (rad)";
    "sonar.range" => env.sonar.range: "maximum range (m)";
    "sonar.update_period" => env.sonar.update_period: "seconds between sonar refreshes";
    "reward.c_course" => env.reward.c_course: "course error weight";
    "reward.c_elevation" => env.reward.c_elevation: "elevation error weight";
    "reward.c_roll" => env.reward.c_roll: "roll angle weight";
    "reward.c_roll_rate" => env.reward.c_roll_rate: "roll rate weight";
    "reward.c_rudder" => env.reward.c_rudder: "rudder command weight";
    "reward.c_elevator" => env.reward.c_elevator: "elevator command weight";
    "reward.lambda_r" => env.reward.lambda_r: "path-following versus avoidance trade-off in [0, 1]";
    "reward.gamma_c" => env.reward.gamma_c: "closeness scaling of the avoidance penalty";
    "reward.eps_c" => env.reward.eps_c: "floor of the squared inverse closeness";
    "reward.gamma_a" => env.reward.gamma_a: "angular decay of the orientation factor (rad)";
    "reward.eps_oa" => env.reward.eps_oa: "orientation factor floor";
    "scenario.waypoints" => env.scenario.waypoints.count: "waypoints per random path";
    "scenario.min_segment" => env.scenario.waypoints.min_segment: "shortest waypoint segment (m)";
    "scenario.max_segment" => env.scenario.waypoints.max_segment: "longest waypoint segment (m)";
    "scenario.max_azimuth_turn" => env.scenario.waypoints.max_azimuth_turn: "largest azimuth change between segments (rad)";
    "scenario.max_elevation_turn" => env.scenario.waypoints.max_elevation_turn: "largest elevation change between segments (rad)";
    "scenario.max_elevation" => env.scenario.waypoints.max_elevation: "largest segment elevation (rad)";
    "scenario.min_radius" => env.scenario.min_radius: "smallest obstacle radius (m)";
    "scenario.max_radius" => env.scenario.max_radius: "largest obstacle radius (m)";
    "scenario.min_lateral_offset" => env.scenario.min_lateral_offset: "smallest off-path obstacle offset (m)";
    "scenario.max_lateral_offset" => env.scenario.max_lateral_offset: "largest off-path obstacle offset (m)";
    "scenario.clearance" => env.scenario.clearance: "surface clearance kept by off-path obstacles (m)";
    "scenario.start_clearance" => env.scenario.start_clearance: "obstacle-free distance around the start (m)";
    "scenario.max_attempts" => env.scenario.max_attempts: "resampling attempts per scenario";
    "env.dt" => env.dt: "integration step (s)";
    "env.cruise_speed" => env.cruise_speed: "surge speed set-point (m/s)";
    "env.start_at_cruise" => env.start_at_cruise: "start episodes at cruise speed";
    "env.pi_kp" => env.pi_kp: "speed controller proportional gain";
    "env.pi_ki" => env.pi_ki: "speed controller integral gain";
    "env.fin_time_constant" => env.fin_time_constant: "fin actuator time constant (s)";
    "env.lookahead" => env.lookahead: "guidance look-ahead distance (m)";
    "env.acceptance_radius" => env.acceptance_radius: "goal acceptance radius (m)";
    "env.safety_radius" => env.safety_radius: "collision distance to an obstacle surface (m)";
    "env.timeout_factor" => env.timeout_factor: "time limit as a multiple of path length over cruise speed";
    "env.current_mean_reversion" => env.current_mean_reversion: "current intensity mean reversion (1/s)";
    "env.current_noise_std" => env.current_noise_std: "current intensity noise standard deviation";
    "env.current_max_angle_of_attack" => env.current_max_angle_of_attack: "largest random current angle of attack (rad)";
    "ppo.gamma" => train.ppo.gamma: "discount factor";
    "ppo.lambda" => train.ppo.lambda: "advantage estimation smoothing";
    "ppo.clip" => train.ppo.clip: "ratio clip range";
    "ppo.actors" => train.ppo.actors: "parallel actors";
    "ppo.horizon" => train.ppo.horizon: "steps per actor per iteration";
    "ppo.epochs" => train.ppo.epochs: "optimisation epochs per iteration";
    "ppo.minibatch" => train.ppo.minibatch: "minibatch size";
    "ppo.learning_rate" => train.ppo.learning_rate: "Adam step size";
    "ppo.max_grad_norm" => train.ppo.max_grad_norm: "global gradient norm clip";
    "ppo.value_coef" => train.ppo.value_coef: "value loss weight";
    "ppo.entropy_coef" => train.ppo.entropy_coef: "entropy bonus weight";
    "ppo.total_steps" => train.ppo.total_steps: "environment step budget";
    "curriculum.start" => train.curriculum.start: "first difficulty level";
    "curriculum.end" => train.curriculum.end: "last difficulty level";
    "curriculum.promote_success_rate" => train.curriculum.promote_success_rate: "rolling success rate that promotes";
    "curriculum.window" => train.curriculum.window: "episodes in the rolling window";
    "curriculum.level_budget" => train.curriculum.level_budget: "steps after which a level is left anyway";
    "train.seed" => train.seed: "master seed of weights, actors and shuffling";
    "train.hidden" => train.hidden: "hidden layer widths";
    "train.init_log_std" => train.init_log_std: "initial action log standard deviation";
    "eval.episodes" => eval.episodes: "episodes per level in the quantitative suite";
    "eval.seed" => eval.seed: "seed of the first evaluation scenario";
    "output.root" => output_root: "directory receiving run folders";
}

impl ExperimentConfig {
    pub fn defaults() -> Self {
        Self {
            output_root: "runs".into(),
            ..Default::default()
        }
    }

    pub fn get(&self, key: &str) -> Option<String> {
        get_field(self, key)
    }

    /// Sets one key; `line` is only used in error messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        match set_field(self, key, value.trim()) {
            None => Err(ConfigError::UnknownKey { line, key: key.into() }),
            Some(Err(message)) => Err(ConfigError::BadValue {
                line,
                key: key.into(),
                message,
            }),
            Some(Ok(())) => Ok(()),
        }
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l.split_once('=').ok_or_else(|| ConfigError::Syntax { line, text: l.into() })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            self.set(key, value, line)?;
        }
        Ok(())
    }

    /// Parses a complete file on top of the defaults and validates it.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::defaults();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Self::from_text(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train.validate().map_err(ConfigError::Invalid)?;
        if self.eval.episodes == 0 {
            return Err(ConfigError::Invalid("eval.episodes must be positive".into()));
        }
        Ok(())
    }

    /// The resolved configuration as a commented file.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# auv experiment configuration\n");
        let mut section = "";
        for (key, doc) in FIELDS {
            let sec = key.split('.').next().unwrap_or("");
            if sec != section {
                section = sec;
                s.push('\n');
            }
            let _ = writeln!(s, "# {doc}");
            let _ = writeln!(s, "{key} = {}", self.get(key).expect("listed key"));
        }
        s
    }

    pub fn output_root(&self) -> PathBuf {
        std::env::var_os("AUV_OUTPUT_ROOT").map_or_else(|| PathBuf::from(&self.output_root), PathBuf::from)
    }
}
