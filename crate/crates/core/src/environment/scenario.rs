use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::path::{serret_frenet_rotation, QpmiPath, WaypointConfig, WaypointSet};
use crate::perception::Obstacle;

/// Curriculum levels, in training order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Difficulty {
    Beginner,
    Intermediate,
    Proficient,
    Advanced,
    Expert,
}

impl Difficulty {
    pub const ALL: [Difficulty; 5] = [
        Difficulty::Beginner,
        Difficulty::Intermediate,
        Difficulty::Proficient,
        Difficulty::Advanced,
        Difficulty::Expert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Beginner => "beginner",
            Difficulty::Intermediate => "intermediate",
            Difficulty::Proficient => "proficient",
            Difficulty::Advanced => "advanced",
            Difficulty::Expert => "expert",
        }
    }

    pub fn next(self) -> Option<Difficulty> {
        let i = Self::ALL.iter().position(|&d| d == self)?;
        Self::ALL.get(i + 1).copied()
    }

    pub fn on_path_obstacles(self) -> usize {
        match self {
            Difficulty::Beginner => 0,
            Difficulty::Intermediate => 1,
            _ => 3,
        }
    }

    pub fn off_path_obstacles(self) -> usize {
        match self {
            Difficulty::Advanced | Difficulty::Expert => 5,
            _ => 0,
        }
    }

    pub fn has_current(self) -> bool {
        self == Difficulty::Expert
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown difficulty '{s}'"))
    }
}

/// Ocean current setting of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurrentMode {
    Off,
    /// Direction and initial intensity drawn at reset from the scenario seed.
    Random,
    /// Constant intensity and direction, no Gauss-Markov drift.
    Fixed {
        intensity: f64,
        sideslip: f64,
        angle_of_attack: f64,
    },
}

impl CurrentMode {
    pub fn is_enabled(&self) -> bool {
        !matches!(self, CurrentMode::Off)
    }
}

/// Generation limits for random scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub waypoints: WaypointConfig,
    pub min_radius: f64,
    pub max_radius: f64,
    pub min_lateral_offset: f64,
    pub max_lateral_offset: f64,
    /// Minimum surface clearance between off-path obstacles and the path,
    /// and between every obstacle and the first and last thirds (m).
    pub clearance: f64,
    /// Obstacles must lie beyond this surface distance from the start (m).
    pub start_clearance: f64,
    pub max_attempts: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            waypoints: WaypointConfig::default(),
            min_radius: 2.0,
            max_radius: 6.0,
            min_lateral_offset: 5.0,
            max_lateral_offset: 15.0,
            clearance: 1.0,
            start_clearance: 25.0,
            max_attempts: 1000,
        }
    }
}

/// A complete episode setup: path, obstacles and current.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub difficulty: Option<Difficulty>,
    pub seed: u64,
    pub path: QpmiPath,
    pub obstacles: Vec<Obstacle>,
    /// The first `on_path` obstacles are centred on the path.
    pub on_path: usize,
    pub current: CurrentMode,
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, seed: u64, path: QpmiPath, obstacles: Vec<Obstacle>, current: CurrentMode) -> Self {
        Self {
            name: name.into(),
            difficulty: None,
            seed,
            path,
            obstacles,
            on_path: 0,
            current,
        }
    }

    pub fn waypoints(&self) -> &WaypointSet {
        self.path.waypoints()
    }

    /// Checks the layout rules shared by all random difficulty levels.
    pub fn check_invariants(&self, params: &ScenarioParams) -> Result<(), String> {
        let Some(level) = self.difficulty else {
            return Ok(());
        };
        let expected = level.on_path_obstacles() + level.off_path_obstacles();
        if self.obstacles.len() != expected || self.on_path != level.on_path_obstacles() {
            return Err(format!("{level}: expected {expected} obstacles, got {}", self.obstacles.len()));
        }
        if self.current.is_enabled() != level.has_current() {
            return Err(format!("{level}: wrong current setting"));
        }
        let len = self.path.length();
        for (k, o) in self.obstacles.iter().enumerate() {
            let cp = self.path.closest_point(&o.center);
            let off = (cp.position - o.center).norm();
            if k < self.on_path {
                if off > 1e-6 || cp.arc_length < len / 3.0 || cp.arc_length > 2.0 * len / 3.0 {
                    return Err(format!("obstacle {k} is not on the middle third of the path"));
                }
            } else if off - o.radius < params.clearance || off > params.max_lateral_offset + 1e-9 {
                return Err(format!("off-path obstacle {k} violates the lateral band"));
            }
        }
        if outer_thirds_obstructed(&self.path, &self.obstacles, params.clearance) {
            return Err("first or last third of the path is obstructed".into());
        }
        let start = self.path.start().position;
        if self.obstacles.iter().any(|o| o.surface_distance(&start) <= params.start_clearance) {
            return Err("obstacle within sonar range of the start".into());
        }
        Ok(())
    }
}

fn outer_thirds_obstructed(path: &QpmiPath, obstacles: &[Obstacle], clearance: f64) -> bool {
    let len = path.length();
    path.sample(0.5)
        .iter()
        .filter(|p| p.arc_length <= len / 3.0 || p.arc_length >= 2.0 * len / 3.0)
        .any(|p| obstacles.iter().any(|o| o.surface_distance(&p.position) < clearance))
}

/// Deterministic random scenario for a curriculum level.
pub fn make_scenario(difficulty: Difficulty, seed: u64) -> ScenarioConfig {
    make_scenario_with(difficulty, seed, &ScenarioParams::default())
}

pub fn make_scenario_with(difficulty: Difficulty, seed: u64, params: &ScenarioParams) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.max_attempts {
        if let Some(sc) = try_generate(difficulty, seed, params, &mut rng) {
            return sc;
        }
    }
    panic!("no valid {difficulty} scenario for seed {seed} after {} attempts", params.max_attempts);
}

fn try_generate(difficulty: Difficulty, seed: u64, params: &ScenarioParams, rng: &mut ChaCha8Rng) -> Option<ScenarioConfig> {
    let path = QpmiPath::new(WaypointSet::random(rng, &params.waypoints)).ok()?;
    let len = path.length();
    let mid = len / 2.0;
    let mut obstacles = Vec::new();
    let stations: &[f64] = match difficulty.on_path_obstacles() {
        0 => &[],
        1 => &[0.0],
        _ => &[0.0, -1.0, 1.0],
    };
    for &k in stations {
        let r = rng.random_range(params.min_radius..=params.max_radius);
        obstacles.push(Obstacle::new(path.position_at(mid + k * len / 12.0), r));
    }
    let on_path = obstacles.len();
    for _ in 0..difficulty.off_path_obstacles() {
        obstacles.push(sample_off_path(&path, params, rng)?);
    }
    let sc = ScenarioConfig {
        name: difficulty.name().to_string(),
        difficulty: Some(difficulty),
        seed,
        path,
        obstacles,
        on_path,
        current: if difficulty.has_current() { CurrentMode::Random } else { CurrentMode::Off },
    };
    sc.check_invariants(params).is_ok().then_some(sc)
}

fn sample_off_path(path: &QpmiPath, params: &ScenarioParams, rng: &mut ChaCha8Rng) -> Option<Obstacle> {
    let len = path.length();
    for _ in 0..64 {
        let s = rng.random_range(len / 3.0..2.0 * len / 3.0);
        let rot = serret_frenet_rotation(&path.point_at(s));
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let offset = rng.random_range(params.min_lateral_offset..=params.max_lateral_offset);
        let r = rng.random_range(params.min_radius..=params.max_radius);
        let dir: Vector3<f64> = rot.column(1) * phi.cos() + rot.column(2) * phi.sin();
        let center = path.position_at(s) + dir * offset;
        let dist = (path.closest_point(&center).position - center).norm();
        if dist - r >= params.clearance {
            return Some(Obstacle::new(center, r));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for d in Difficulty::ALL {
            assert_eq!(d.name().parse::<Difficulty>().unwrap(), d);
        }
        assert!("novice".parse::<Difficulty>().is_err());
        assert_eq!(Difficulty::Expert.next(), None);
        assert_eq!(Difficulty::Beginner.next(), Some(Difficulty::Intermediate));
    }

    #[test]
    fn beginner_is_empty() {
        let sc = make_scenario(Difficulty::Beginner, 3);
        assert!(sc.obstacles.is_empty());
        assert_eq!(sc.current, CurrentMode::Off);
    }

    #[test]
    fn intermediate_obstacle_at_midpoint() {
        for seed in 0..10 {
            let sc = make_scenario(Difficulty::Intermediate, seed);
            assert_eq!(sc.obstacles.len(), 1);
            let mid = sc.path.position_at(sc.path.length() / 2.0);
            assert!((sc.obstacles[0].center - mid).norm() < 1e-6);
        }
    }

    #[test]
    fn expert_extends_advanced_with_current() {
        for seed in 0..5 {
            let a = make_scenario(Difficulty::Advanced, seed);
            let e = make_scenario(Difficulty::Expert, seed);
            assert_eq!(a.obstacles, e.obstacles);
            assert_eq!(a.current, CurrentMode::Off);
            assert_eq!(e.current, CurrentMode::Random);
        }
    }

    #[test]
    fn deterministic_from_seed() {
        let a = make_scenario(Difficulty::Advanced, 11);
        let b = make_scenario(Difficulty::Advanced, 11);
        assert_eq!(a.obstacles, b.obstacles);
        assert_eq!(a.waypoints(), b.waypoints());
    }
}
