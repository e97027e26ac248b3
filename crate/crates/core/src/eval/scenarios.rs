//! Fixed qualitative test scenarios. Every constructor is deterministic; the
//! geometry below is part of the scenario version and must not drift.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::Vector3;

use crate::environment::{CurrentMode, ScenarioConfig};
use crate::path::{QpmiPath, WaypointSet};
use crate::perception::Obstacle;

/// Waypoints of the pure path-following scenario (NED, m).
pub const PURE_PF_WAYPOINTS: [[f64; 3]; 6] = [
    [0.0, 0.0, 0.0],
    [35.0, 10.0, -4.0],
    [65.0, -5.0, -10.0],
    [95.0, 5.0, 0.0],
    [125.0, 25.0, 5.0],
    [150.0, 20.0, 0.0],
];

pub const PURE_PF_CURRENT: CurrentMode = CurrentMode::Fixed {
    intensity: 0.5,
    sideslip: FRAC_PI_4,
    angle_of_attack: 0.1,
};

pub const DEAD_END_CENTRE: [f64; 3] = [100.0, 0.0, 0.0];
pub const DEAD_END_RADIUS: f64 = 20.0;
pub const SHELL_SPHERE_RADIUS: f64 = 2.5;
const SHELL_SPACING: f64 = 3.5;

pub const STACK_SPHERES: usize = 7;
pub const STACK_SPHERE_RADIUS: f64 = 3.0;
const STACK_X: f64 = 75.0;

fn path(points: impl IntoIterator<Item = Vector3<f64>>) -> QpmiPath {
    QpmiPath::new(WaypointSet::new(points.into_iter().collect()).expect("fixed waypoints are valid")).expect("fixed path is valid")
}

/// Straight 150 m path along north.
fn straight_path() -> QpmiPath {
    path((0..5).map(|i| Vector3::new(37.5 * i as f64, 0.0, 0.0)))
}

/// Non-random path curving in both the horizontal and the vertical plane,
/// free of obstacles, optionally under a constant current.
pub fn make_pure_pf_scenario(current_on: bool) -> ScenarioConfig {
    let p = path(PURE_PF_WAYPOINTS.iter().map(|w| Vector3::new(w[0], w[1], w[2])));
    let current = if current_on { PURE_PF_CURRENT } else { CurrentMode::Off };
    let name = if current_on { "pure-pf-current" } else { "pure-pf" };
    ScenarioConfig::new(name, 0, p, Vec::new(), current)
}

/// Hemispherical shell of spheres centred on a straight path, open towards
/// the approaching vehicle.
pub fn make_dead_end_scenario() -> ScenarioConfig {
    let centre = Vector3::from(DEAD_END_CENTRE);
    let area = 2.0 * PI * DEAD_END_RADIUS * DEAD_END_RADIUS;
    let n = (area / (SHELL_SPACING * SHELL_SPACING * 3f64.sqrt() / 2.0)).ceil() as usize;
    let golden = PI * (3.0 - 5f64.sqrt());
    let dome = (0..n).map(|i| {
        let axial = (i as f64 + 0.5) / n as f64;
        let ring = (1.0 - axial * axial).sqrt();
        let phi = golden * i as f64;
        Vector3::new(axial, ring * phi.cos(), ring * phi.sin())
    });
    // The spiral thins out at its open edge, so the rim gets its own ring.
    let rim_n = (2.0 * PI * DEAD_END_RADIUS / SHELL_SPACING).ceil() as usize;
    let rim = (0..rim_n).map(|k| {
        let phi = 2.0 * PI * k as f64 / rim_n as f64;
        Vector3::new(0.0, phi.cos(), phi.sin())
    });
    let obstacles = rim
        .chain(dome)
        .map(|dir| Obstacle::new(centre + DEAD_END_RADIUS * dir, SHELL_SPHERE_RADIUS))
        .collect();
    ScenarioConfig::new("dead-end", 0, straight_path(), obstacles, CurrentMode::Off)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackDirection {
    /// Spheres side by side along east: passing above or below is short.
    Horizontal,
    /// Spheres on top of each other along down: passing sideways is short.
    Vertical,
}

impl std::str::FromStr for StackDirection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "horizontal" => Ok(Self::Horizontal),
            "vertical" => Ok(Self::Vertical),
            _ => Err(format!("unknown stack direction '{s}' (expected horizontal or vertical)")),
        }
    }
}

/// A row of tangent spheres across a straight path.
pub fn make_stacked_scenario(direction: StackDirection) -> ScenarioConfig {
    let axis = match direction {
        StackDirection::Horizontal => Vector3::y(),
        StackDirection::Vertical => Vector3::z(),
    };
    let half = (STACK_SPHERES as f64 - 1.0) / 2.0;
    let obstacles = (0..STACK_SPHERES)
        .map(|k| {
            let offset = 2.0 * STACK_SPHERE_RADIUS * (k as f64 - half);
            Obstacle::new(Vector3::new(STACK_X, 0.0, 0.0) + offset * axis, STACK_SPHERE_RADIUS)
        })
        .collect();
    let name = match direction {
        StackDirection::Horizontal => "stacked-horizontal",
        StackDirection::Vertical => "stacked-vertical",
    };
    ScenarioConfig::new(name, 0, straight_path(), obstacles, CurrentMode::Off)
}
