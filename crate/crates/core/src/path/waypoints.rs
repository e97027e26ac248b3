use std::fmt::Write as _;

use nalgebra::Vector3;
use rand::Rng;

use super::PathError;

/// Ordered 3D waypoints in NED (m).
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSet {
    points: Vec<Vector3<f64>>,
}

/// Limits for randomly generated waypoint sets.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointConfig {
    pub count: usize,
    pub min_segment: f64,
    pub max_segment: f64,
    /// Largest azimuth change between consecutive segments (rad).
    pub max_azimuth_turn: f64,
    /// Largest elevation change between consecutive segments (rad).
    pub max_elevation_turn: f64,
    /// Largest absolute segment elevation (rad).
    pub max_elevation: f64,
}

impl Default for WaypointConfig {
    fn default() -> Self {
        Self {
            count: 7,
            min_segment: 25.0,
            max_segment: 45.0,
            max_azimuth_turn: 60f64.to_radians(),
            max_elevation_turn: 30f64.to_radians(),
            max_elevation: 25f64.to_radians(),
        }
    }
}

fn segment_angles(d: &Vector3<f64>) -> (f64, f64) {
    (d.y.atan2(d.x), (-d.z).atan2(d.x.hypot(d.y)))
}

impl WaypointSet {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, PathError> {
        if points.len() < 3 {
            return Err(PathError::TooFewWaypoints(points.len()));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(PathError::NonFinite);
        }
        for (i, w) in points.windows(2).enumerate() {
            if (w[1] - w[0]).norm() < 1e-9 {
                return Err(PathError::Degenerate(i + 1));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Samples a random set honouring the turn limits in `cfg`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cfg: &WaypointConfig) -> Self {
        assert!(cfg.count >= 3, "need at least three waypoints");
        let mut azimuth = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let mut elevation = rng.random_range(-cfg.max_elevation..=cfg.max_elevation);
        let mut points = vec![Vector3::zeros()];
        for k in 1..cfg.count {
            if k > 1 {
                azimuth += rng.random_range(-cfg.max_azimuth_turn..=cfg.max_azimuth_turn);
                let lo = (elevation - cfg.max_elevation_turn).max(-cfg.max_elevation);
                let hi = (elevation + cfg.max_elevation_turn).min(cfg.max_elevation);
                elevation = rng.random_range(lo..=hi);
            }
            let len = rng.random_range(cfg.min_segment..=cfg.max_segment);
            let dir = Vector3::new(
                azimuth.cos() * elevation.cos(),
                azimuth.sin() * elevation.cos(),
                -elevation.sin(),
            );
            let last = points[k - 1];
            points.push(last + dir * len);
        }
        Self { points }
    }

    /// True when every consecutive segment pair turns by at most the given
    /// azimuth and elevation changes.
    pub fn satisfies_turn_limits(&self, max_azimuth_turn: f64, max_elevation_turn: f64) -> bool {
        let dirs: Vec<_> = self
            .points
            .windows(2)
            .map(|w| segment_angles(&(w[1] - w[0])))
            .collect();
        dirs.windows(2).all(|d| {
            let da = crate::dynamics::wrap_angle(d[1].0 - d[0].0).abs();
            let de = (d[1].1 - d[0].1).abs();
            da <= max_azimuth_turn + 1e-9 && de <= max_elevation_turn + 1e-9
        })
    }

    /// One `x,y,z` triple per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            let _ = writeln!(s, "{},{},{}", p.x, p.y, p.z);
        }
        s
    }

    /// Parses the format written by [`WaypointSet::to_text`]. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self, PathError> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == 3 => points.push(Vector3::new(v[0], v[1], v[2])),
                _ => return Err(PathError::Parse { line: n + 1 }),
            }
        }
        Self::new(points)
    }
}
