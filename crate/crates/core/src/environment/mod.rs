//! Episode orchestration: scenario setup, reset/step and termination.

mod observation;
mod scenario;

pub use observation::{build_observation, obs_dim, OBS_SCALE, STATE_OBS};
pub use scenario::{make_scenario, make_scenario_with, CurrentMode, Difficulty, ScenarioConfig, ScenarioParams};

use std::fmt::Write as _;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::control::{low_pass, FilterConfig, PiGains};
use crate::dynamics::{wrap_angle, ActuatorState, CurrentState, DynamicsError, HydroParams, Hydrodynamics, VehicleState};
use crate::path::{guidance_angles, tracking_errors, PathPoint, TrackingError};
use crate::perception::{min_pool, pooled_len, scan, SonarConfig, SonarImage};
use crate::rewards::{total_reward, ObstacleWeights, RewardBreakdown, RewardConfig, RewardInputs};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("step called on a finished episode")]
    StepAfterDone,
    #[error("step called before reset")]
    NotReset,
    #[error("action must be two finite values")]
    InvalidAction,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid environment configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub hydro: HydroParams,
    pub sonar: SonarConfig,
    pub reward: RewardConfig,
    pub scenario: ScenarioParams,
    /// Simulation step (s).
    pub dt: f64,
    /// Desired surge speed u_d (m/s).
    pub cruise_speed: f64,
    pub start_at_cruise: bool,
    pub pi_kp: f64,
    pub pi_ki: f64,
    /// Fin low-pass time constant T_f (s).
    pub fin_time_constant: f64,
    /// Guidance lookahead distance (m).
    pub lookahead: f64,
    /// Success radius around the last waypoint (m).
    pub acceptance_radius: f64,
    /// Collision threshold on obstacle surface distance (m).
    pub safety_radius: f64,
    /// Episode length cap as a multiple of the nominal traversal time.
    pub timeout_factor: f64,
    pub current_mean_reversion: f64,
    pub current_noise_std: f64,
    /// Largest magnitude of a randomly drawn current angle of attack (rad).
    pub current_max_angle_of_attack: f64,
    pub record_trajectory: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            hydro: HydroParams::default(),
            sonar: SonarConfig::default(),
            reward: RewardConfig::default(),
            scenario: ScenarioParams::default(),
            dt: 0.1,
            cruise_speed: 1.5,
            start_at_cruise: true,
            pi_kp: 20.0,
            pi_ki: 5.0,
            fin_time_constant: 0.2,
            lookahead: 5.4,
            acceptance_radius: 1.0,
            safety_radius: 1.0,
            timeout_factor: 3.0,
            current_mean_reversion: 0.05,
            current_noise_std: 0.1,
            current_max_angle_of_attack: 15f64.to_radians(),
            record_trajectory: false,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Config(m.to_string()));
        self.hydro.validate()?;
        self.reward.validate().map_err(EnvError::Config)?;
        if !(self.dt > 0.0) || !(self.cruise_speed > 0.0) || !(self.lookahead > 0.0) {
            return bad("dt, cruise_speed and lookahead must be positive");
        }
        if !(self.timeout_factor > 0.0) || self.fin_time_constant < 0.0 {
            return bad("timeout_factor must be positive and fin_time_constant non-negative");
        }
        if !(self.sonar.update_period >= self.dt) {
            return bad("sonar update period shorter than the time step");
        }
        if self.sonar.rows < 2 || self.sonar.cols < 2 {
            return bad("sonar grid needs at least two rows and columns");
        }
        Ok(())
    }

    pub fn obs_dim(&self) -> usize {
        obs_dim(pooled_len(self.sonar.rows) * pooled_len(self.sonar.cols))
    }

    pub fn sonar_period_steps(&self) -> usize {
        ((self.sonar.update_period / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpisodeStatus {
    Success,
    Collision,
    Timeout,
    Fault,
}

impl EpisodeStatus {
    pub fn name(self) -> &'static str {
        match self {
            EpisodeStatus::Success => "success",
            EpisodeStatus::Collision => "collision",
            EpisodeStatus::Timeout => "timeout",
            EpisodeStatus::Fault => "fault",
        }
    }

    /// True when the episode ended in an absorbing state of the task, as
    /// opposed to being cut short.
    pub fn is_terminal(self) -> bool {
        matches!(self, EpisodeStatus::Success | EpisodeStatus::Collision)
    }
}

/// One logged simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    pub eta: [f64; 6],
    pub nu: [f64; 6],
    pub action: [f64; 2],
    pub rudder: f64,
    pub elevator: f64,
    pub propeller: f64,
    pub cross_track: f64,
    pub vertical_track: f64,
    pub course_error: f64,
    pub elevation_error: f64,
    pub reward_pf: f64,
    pub reward_oa: f64,
    pub reward: f64,
}

pub const TRAJECTORY_HEADER: &str = "time,x,y,z,phi,theta,psi,u,v,w,p,q,r,action_rudder,action_elevator,rudder,elevator,propeller,cross_track,vertical_track,course_error,elevation_error,reward_pf,reward_oa,reward";

pub fn trajectory_to_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        let vals = std::iter::once(r.time)
            .chain(r.eta)
            .chain(r.nu)
            .chain(r.action)
            .chain([
                r.rudder,
                r.elevator,
                r.propeller,
                r.cross_track,
                r.vertical_track,
                r.course_error,
                r.elevation_error,
                r.reward_pf,
                r.reward_oa,
                r.reward,
            ]);
        let line: Vec<String> = vals.map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub status: EpisodeStatus,
    pub steps: usize,
    /// Mean over steps of the combined cross- and vertical-track error (m).
    pub avg_tracking_error: f64,
    /// Smallest obstacle surface distance seen (m); infinite without obstacles.
    pub min_clearance: f64,
    pub final_distance: f64,
    pub total_reward: f64,
    pub trajectory: Vec<TrajectoryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub done: bool,
    /// Set with `done` when the final state is absorbing (value zero).
    pub terminal: bool,
    pub status: Option<EpisodeStatus>,
    pub tracking_error: f64,
}

struct Episode {
    scenario: ScenarioConfig,
    state: VehicleState,
    current: CurrentState,
    act: ActuatorState,
    pi: PiGains,
    rng: ChaCha8Rng,
    steps: usize,
    max_steps: usize,
    image: SonarImage,
    pooled: Vec<f64>,
    observation: Vec<f64>,
    status: Option<EpisodeStatus>,
    error_sum: f64,
    min_clearance: f64,
    total_reward: f64,
    trajectory: Vec<TrajectoryRow>,
}

/// Single-threaded simulation of one vehicle in one scenario at a time.
pub struct Environment {
    cfg: EnvConfig,
    hydro: Hydrodynamics,
    filter: FilterConfig,
    weights: ObstacleWeights,
    episode: Option<Episode>,
}

impl Environment {
    pub fn new(cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let hydro = Hydrodynamics::new(cfg.hydro.clone())?;
        let filter = FilterConfig::new(cfg.fin_time_constant, cfg.dt);
        let weights = ObstacleWeights::new(&cfg.sonar, &cfg.reward);
        Ok(Self {
            cfg,
            hydro,
            filter,
            weights,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    pub fn reset(&mut self, scenario: ScenarioConfig) -> Vec<f64> {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(1);
        let current = match scenario.current {
            CurrentMode::Off => CurrentState::calm(),
            CurrentMode::Random => CurrentState {
                intensity: rng.random_range(crate::dynamics::CURRENT_MIN..=crate::dynamics::CURRENT_MAX),
                sideslip: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                angle_of_attack: rng.random_range(-cfg.current_max_angle_of_attack..=cfg.current_max_angle_of_attack),
                mean_reversion: cfg.current_mean_reversion,
                noise_std: cfg.current_noise_std,
            },
            CurrentMode::Fixed {
                intensity,
                sideslip,
                angle_of_attack,
            } => CurrentState {
                intensity,
                sideslip,
                angle_of_attack,
                mean_reversion: 0.0,
                noise_std: 0.0,
            },
        };
        let start = scenario.path.start();
        let attitude = Vector3::new(0.0, start.elevation, start.azimuth);
        let vc = current.velocity_body(&attitude);
        let surge = if cfg.start_at_cruise { cfg.cruise_speed } else { 0.0 };
        let state = VehicleState {
            position: start.position,
            attitude,
            linear_velocity: Vector3::new(surge + vc[0], vc[1], vc[2]),
            angular_velocity: Vector3::zeros(),
        };
        let trim = cfg.hydro.trim_propeller(cfg.cruise_speed);
        let pi = PiGains::new(cfg.pi_kp, cfg.pi_ki, cfg.cruise_speed, cfg.hydro.propeller_max).with_feedforward(trim);
        let max_steps = (cfg.timeout_factor * scenario.path.length() / (cfg.cruise_speed * cfg.dt)).ceil() as usize;
        let image = scan(&state, &scenario.obstacles, &cfg.sonar);
        let pooled = min_pool(&image);
        let mut ep = Episode {
            state,
            current,
            act: ActuatorState {
                propeller_speed: if cfg.start_at_cruise { trim } else { 0.0 },
                rudder: 0.0,
                elevator: 0.0,
            },
            pi,
            rng,
            steps: 0,
            max_steps,
            image,
            pooled,
            observation: Vec::new(),
            status: None,
            error_sum: 0.0,
            min_clearance: min_clearance(&state, &scenario),
            total_reward: 0.0,
            trajectory: Vec::new(),
            scenario,
        };
        let g = self.guidance(&ep);
        ep.observation = self.observe(&ep, &g);
        let obs = ep.observation.clone();
        self.episode = Some(ep);
        obs
    }

    pub fn step(&mut self, action: [f64; 2]) -> Result<StepResult, EnvError> {
        let ep = self.episode.as_ref().ok_or(EnvError::NotReset)?;
        if ep.status.is_some() {
            return Err(EnvError::StepAfterDone);
        }
        if !action.iter().all(|a| a.is_finite()) {
            return Err(EnvError::InvalidAction);
        }
        let mut ep = self.episode.take().expect("episode present");
        let result = self.advance(&mut ep, action);
        self.episode = Some(ep);
        Ok(result)
    }

    fn advance(&self, ep: &mut Episode, action: [f64; 2]) -> StepResult {
        let cfg = &self.cfg;
        let fin_max = cfg.hydro.fin_max;
        let u_r = ep.state.linear_velocity.x - ep.current.velocity_body(&ep.state.attitude)[0];
        let act = ActuatorState {
            propeller_speed: ep.pi.pi_thrust(u_r, cfg.dt),
            rudder: low_pass(ep.act.rudder, action[0].clamp(-1.0, 1.0) * fin_max, &self.filter),
            elevator: low_pass(ep.act.elevator, action[1].clamp(-1.0, 1.0) * fin_max, &self.filter),
        }
        .saturated(&cfg.hydro);
        ep.act = act;
        ep.steps += 1;
        let next = match self.hydro.step(&ep.state, &act, &ep.current, cfg.dt) {
            Ok(s) => s,
            Err(_) => {
                ep.status = Some(EpisodeStatus::Fault);
                return StepResult {
                    observation: ep.observation.clone(),
                    reward: 0.0,
                    breakdown: RewardBreakdown::default(),
                    done: true,
                    terminal: false,
                    status: ep.status,
                    tracking_error: 0.0,
                };
            }
        };
        ep.state = next;
        if !ep.current.is_calm() {
            let w: f64 = ep.rng.sample(StandardNormal);
            ep.current = ep.current.step(cfg.dt, w * ep.current.noise_std);
        }
        if ep.steps % cfg.sonar_period_steps() == 0 {
            ep.image = scan(&ep.state, &ep.scenario.obstacles, &cfg.sonar);
            ep.pooled = min_pool(&ep.image);
        }

        let g = self.guidance(ep);
        let tracking_error = g.error.cross_track.hypot(g.error.vertical_track);
        ep.error_sum += tracking_error;
        let inputs = RewardInputs {
            course_error: g.course_error,
            elevation_error: g.elevation_error,
            roll: ep.state.attitude.x,
            roll_rate: ep.state.angular_velocity.x,
            rudder: act.rudder,
            elevator: act.elevator,
        };
        let breakdown = total_reward(&inputs, &ep.image, &self.weights, &cfg.reward);
        ep.total_reward += breakdown.total;

        let clearance = min_clearance(&ep.state, &ep.scenario);
        ep.min_clearance = ep.min_clearance.min(clearance);
        let len = ep.scenario.path.length();
        let to_goal = (ep.state.position - ep.scenario.path.end().position).norm();
        let overshoot = g.point.arc_length >= len - 1e-9 && g.error.along_track > cfg.acceptance_radius;
        ep.status = if clearance < cfg.safety_radius {
            Some(EpisodeStatus::Collision)
        } else if to_goal < cfg.acceptance_radius {
            Some(EpisodeStatus::Success)
        } else if ep.steps >= ep.max_steps || overshoot {
            Some(EpisodeStatus::Timeout)
        } else {
            None
        };
        ep.observation = self.observe(ep, &g);

        if cfg.record_trajectory {
            let eta = ep.state.eta();
            let nu = ep.state.nu();
            ep.trajectory.push(TrajectoryRow {
                time: ep.steps as f64 * cfg.dt,
                eta: std::array::from_fn(|i| eta[i]),
                nu: std::array::from_fn(|i| nu[i]),
                action,
                rudder: act.rudder,
                elevator: act.elevator,
                propeller: act.propeller_speed,
                cross_track: g.error.cross_track,
                vertical_track: g.error.vertical_track,
                course_error: g.course_error,
                elevation_error: g.elevation_error,
                reward_pf: breakdown.path,
                reward_oa: breakdown.obstacle,
                reward: breakdown.total,
            });
        }
        StepResult {
            observation: ep.observation.clone(),
            reward: breakdown.total,
            breakdown,
            done: ep.status.is_some(),
            terminal: ep.status.is_some_and(EpisodeStatus::is_terminal),
            status: ep.status,
            tracking_error,
        }
    }

    fn guidance(&self, ep: &Episode) -> Guidance {
        let point = ep.scenario.path.closest_point(&ep.state.position);
        let error = tracking_errors(&point, &ep.state.position);
        let (chi_d, ups_d) = guidance_angles(&error, &point, self.cfg.lookahead);
        let (chi, ups) = ep.state.course_and_elevation();
        Guidance {
            point,
            error,
            course_error: wrap_angle(chi_d - chi),
            elevation_error: wrap_angle(ups_d - ups),
        }
    }

    fn observe(&self, ep: &Episode, g: &Guidance) -> Vec<f64> {
        let vc = ep.current.velocity_body(&ep.state.attitude);
        let vc = Vector3::new(vc[0], vc[1], vc[2]);
        let rel = ep.state.linear_velocity - vc;
        build_observation(&ep.state, &rel, &vc, g.course_error, g.elevation_error, &ep.pooled)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_none_or(|e| e.status.is_some())
    }

    pub fn state(&self) -> Option<&VehicleState> {
        self.episode.as_ref().map(|e| &e.state)
    }

    pub fn current(&self) -> Option<&CurrentState> {
        self.episode.as_ref().map(|e| &e.current)
    }

    pub fn actuators(&self) -> Option<&ActuatorState> {
        self.episode.as_ref().map(|e| &e.act)
    }

    pub fn sonar_image(&self) -> Option<&SonarImage> {
        self.episode.as_ref().map(|e| &e.image)
    }

    pub fn scenario(&self) -> Option<&ScenarioConfig> {
        self.episode.as_ref().map(|e| &e.scenario)
    }

    pub fn steps(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.steps)
    }

    pub fn max_steps(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.max_steps)
    }

    /// Summary of the finished episode; `None` while running.
    pub fn outcome(&self) -> Option<EpisodeOutcome> {
        let ep = self.episode.as_ref()?;
        let status = ep.status?;
        Some(EpisodeOutcome {
            status,
            steps: ep.steps,
            avg_tracking_error: if ep.steps > 0 { ep.error_sum / ep.steps as f64 } else { 0.0 },
            min_clearance: ep.min_clearance,
            final_distance: (ep.state.position - ep.scenario.path.end().position).norm(),
            total_reward: ep.total_reward,
            trajectory: ep.trajectory.clone(),
        })
    }
}

struct Guidance {
    point: PathPoint,
    error: TrackingError,
    course_error: f64,
    elevation_error: f64,
}

fn min_clearance(state: &VehicleState, scenario: &ScenarioConfig) -> f64 {
    scenario
        .obstacles
        .iter()
        .map(|o| o.surface_distance(&state.position))
        .fold(f64::INFINITY, f64::min)
}

/// Runs a full episode with a state-feedback policy.
pub fn run_episode<F>(env: &mut Environment, scenario: ScenarioConfig, mut policy: F) -> EpisodeOutcome
where
    F: FnMut(&[f64]) -> [f64; 2],
{
    let mut obs = env.reset(scenario);
    loop {
        let r = env.step(policy(&obs)).expect("episode is active");
        if r.done {
            return env.outcome().expect("episode finished");
        }
        obs = r.observation;
    }
}

/// Proportional line-of-sight autopilot acting on the observed course and
/// elevation errors.
pub fn los_autopilot(gain: f64) -> impl Fn(&[f64]) -> [f64; 2] + Clone {
    move |obs: &[f64]| {
        let chi = obs[9] * std::f64::consts::PI;
        let ups = obs[10] * std::f64::consts::PI;
        [(gain * chi).clamp(-1.0, 1.0), (gain * ups).clamp(-1.0, 1.0)]
    }
}
