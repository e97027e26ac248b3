//! Forward-looking sonar simulated as a grid of ray casts against spheres.
//!
//! Row `j` of the image looks at elevation `((rows-1)/2 - j) * spacing`
//! (row 0 is the top), column `i` at azimuth `(i - (cols-1)/2) * spacing`
//! (column 0 is port). With 15 x 15 rays at 10 degrees the grid spans
//! +-70 degrees, i.e. a 140 degree apex.

use std::fmt::Write as _;

use nalgebra::Vector3;
use thiserror::Error;

use crate::dynamics::{rotation_body_to_ned, VehicleState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("malformed obstacle on line {line}")]
    Parse { line: usize },
    #[error("obstacle radius must be positive (line {line})")]
    BadRadius { line: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SonarConfig {
    pub rows: usize,
    pub cols: usize,
    /// Angular spacing between neighbouring rays (rad).
    pub spacing: f64,
    /// Maximum range d_max (m).
    pub range: f64,
    /// Seconds between sonar refreshes.
    pub update_period: f64,
}

impl Default for SonarConfig {
    fn default() -> Self {
        Self {
            rows: 15,
            cols: 15,
            spacing: 10f64.to_radians(),
            range: 25.0,
            update_period: 1.0,
        }
    }
}

impl SonarConfig {
    /// Total angular extent of the ray grid along its wider axis (rad).
    pub fn apex(&self) -> f64 {
        self.spacing * (self.rows.max(self.cols) - 1) as f64
    }

    /// Elevation of image row `j` (rad), positive up.
    pub fn row_elevation(&self, j: usize) -> f64 {
        ((self.rows - 1) as f64 / 2.0 - j as f64) * self.spacing
    }

    /// Azimuth of image column `i` (rad), positive to starboard.
    pub fn col_azimuth(&self, i: usize) -> f64 {
        (i as f64 - (self.cols - 1) as f64 / 2.0) * self.spacing
    }

    /// Unit ray direction in the body frame.
    pub fn ray_body(&self, j: usize, i: usize) -> Vector3<f64> {
        let (st, ct) = self.row_elevation(j).sin_cos();
        let (sp, cp) = self.col_azimuth(i).sin_cos();
        Vector3::new(ct * cp, ct * sp, -st)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(center: Vector3<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "obstacle radius must be positive");
        Self { center, radius }
    }

    /// Signed distance from `p` to the sphere surface.
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.center).norm() - self.radius
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (p - self.center).norm_squared() <= self.radius * self.radius
    }

    /// Distance along a unit ray to the first surface hit, if any.
    pub fn ray_hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let oc = origin - self.center;
        let c = oc.norm_squared() - self.radius * self.radius;
        if c <= 0.0 {
            return Some(0.0);
        }
        let b = dir.dot(&oc);
        if b >= 0.0 {
            return None;
        }
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        // Equivalent to -b - sqrt(disc) without the cancellation near tangency.
        Some(c / (-b + disc.sqrt()))
    }
}

/// Row-major grid of ray distances (m).
#[derive(Debug, Clone, PartialEq)]
pub struct SonarImage {
    pub rows: usize,
    pub cols: usize,
    pub range: f64,
    distances: Vec<f64>,
}

impl SonarImage {
    pub fn filled(rows: usize, cols: usize, range: f64, d: f64) -> Self {
        Self {
            rows,
            cols,
            range,
            distances: vec![d; rows * cols],
        }
    }

    pub fn empty(cfg: &SonarConfig) -> Self {
        Self::filled(cfg.rows, cfg.cols, cfg.range, cfg.range)
    }

    pub fn from_distances(rows: usize, cols: usize, range: f64, distances: Vec<f64>) -> Self {
        assert_eq!(distances.len(), rows * cols, "image shape mismatch");
        Self {
            rows,
            cols,
            range,
            distances,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.distances[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, d: f64) {
        self.distances[row * self.cols + col] = d;
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// One CSV line per image row.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.distances.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

/// Casts every sonar ray from the vehicle position.
///
/// A vehicle inside an obstacle reads zero on every ray.
pub fn scan(state: &VehicleState, obstacles: &[Obstacle], cfg: &SonarConfig) -> SonarImage {
    let origin = state.position;
    if obstacles.iter().any(|o| o.contains(&origin)) {
        return SonarImage::filled(cfg.rows, cfg.cols, cfg.range, 0.0);
    }
    let rot = rotation_body_to_ned(&state.attitude);
    let mut image = SonarImage::empty(cfg);
    // Only spheres that can intersect the sonar range matter.
    let near: Vec<&Obstacle> = obstacles
        .iter()
        .filter(|o| o.surface_distance(&origin) < cfg.range)
        .collect();
    if near.is_empty() {
        return image;
    }
    for j in 0..cfg.rows {
        for i in 0..cfg.cols {
            let dir = rot * cfg.ray_body(j, i);
            let d = near
                .iter()
                .filter_map(|o| o.ray_hit(&origin, &dir))
                .fold(cfg.range, f64::min);
            image.set(j, i, d);
        }
    }
    image
}

pub fn closeness(d: f64, d_max: f64) -> f64 {
    (1.0 - d / d_max).clamp(0.0, 1.0)
}

/// Start index of pooling block `k` along an axis of length `n`: blocks of
/// two starting at even indices, the last one shifted back to end at `n - 1`.
/// For 15 cells this gives 8 blocks, the last two sharing cell 13.
pub fn pool_block_start(k: usize, n: usize) -> usize {
    (2 * k).min(n - 2)
}

pub fn pooled_len(n: usize) -> usize {
    n.div_ceil(2)
}

/// Minimum-distance pooling followed by the closeness transform. Output is
/// row-major, `pooled_len(rows) x pooled_len(cols)`.
pub fn min_pool(image: &SonarImage) -> Vec<f64> {
    let (pr, pc) = (pooled_len(image.rows), pooled_len(image.cols));
    let mut out = Vec::with_capacity(pr * pc);
    for bj in 0..pr {
        let r0 = pool_block_start(bj, image.rows);
        for bi in 0..pc {
            let c0 = pool_block_start(bi, image.cols);
            let d = image
                .get(r0, c0)
                .min(image.get(r0, c0 + 1))
                .min(image.get(r0 + 1, c0))
                .min(image.get(r0 + 1, c0 + 1));
            out.push(closeness(d, image.range));
        }
    }
    out
}

/// `x,y,z,radius` per line.
pub fn obstacles_to_text(obstacles: &[Obstacle]) -> String {
    let mut s = String::new();
    for o in obstacles {
        let _ = writeln!(s, "{},{},{},{}", o.center.x, o.center.y, o.center.z, o.radius);
    }
    s
}

pub fn obstacles_from_text(text: &str) -> Result<Vec<Obstacle>, PerceptionError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| PerceptionError::Parse { line: n + 1 })?;
        if v.len() != 4 {
            return Err(PerceptionError::Parse { line: n + 1 });
        }
        if !(v[3] > 0.0) {
            return Err(PerceptionError::BadRadius { line: n + 1 });
        }
        out.push(Obstacle::new(Vector3::new(v[0], v[1], v[2]), v[3]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at_origin() -> VehicleState {
        VehicleState::default()
    }

    #[test]
    fn geometry_of_default_grid() {
        let cfg = SonarConfig::default();
        assert_eq!(cfg.rows * cfg.cols, 225);
        assert!((cfg.apex() - 140f64.to_radians()).abs() < 1e-12);
        assert!((cfg.col_azimuth(0) + 70f64.to_radians()).abs() < 1e-12);
        assert!((cfg.row_elevation(0) - 70f64.to_radians()).abs() < 1e-12);
        assert_eq!(cfg.ray_body(7, 7), Vector3::x());
    }

    #[test]
    fn empty_scene_reads_max_range() {
        let img = scan(&at_origin(), &[], &SonarConfig::default());
        assert!(img.distances().iter().all(|&d| d == 25.0));
    }

    #[test]
    fn sphere_dead_ahead() {
        let obs = [Obstacle::new(Vector3::new(10.0, 0.0, 0.0), 2.0)];
        let img = scan(&at_origin(), &obs, &SonarConfig::default());
        assert!((img.get(7, 7) - 8.0).abs() < 1e-12);
        assert_eq!(img.get(0, 0), 25.0);
    }

    #[test]
    fn inside_obstacle_reads_zero() {
        let obs = [Obstacle::new(Vector3::new(0.5, 0.0, 0.0), 2.0)];
        let img = scan(&at_origin(), &obs, &SonarConfig::default());
        assert!(img.distances().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn obstacle_behind_is_invisible() {
        let obs = [Obstacle::new(Vector3::new(-10.0, 0.0, 0.0), 3.0)];
        let img = scan(&at_origin(), &obs, &SonarConfig::default());
        assert!(img.distances().iter().all(|&d| d == 25.0));
    }

    #[test]
    fn closeness_examples() {
        assert_eq!(closeness(25.0, 25.0), 0.0);
        assert_eq!(closeness(0.0, 25.0), 1.0);
        assert_eq!(closeness(12.5, 25.0), 0.5);
        assert_eq!(closeness(40.0, 25.0), 0.0);
    }

    #[test]
    fn pooling_partition() {
        let starts: Vec<usize> = (0..8).map(|k| pool_block_start(k, 15)).collect();
        assert_eq!(starts, vec![0, 2, 4, 6, 8, 10, 12, 13]);
        assert_eq!(pooled_len(15), 8);
    }

    #[test]
    fn uniform_image_pools_uniformly() {
        let img = SonarImage::filled(15, 15, 25.0, 10.0);
        let pooled = min_pool(&img);
        assert_eq!(pooled.len(), 64);
        assert!(pooled.iter().all(|&c| c == closeness(10.0, 25.0)));
    }

    #[test]
    fn single_contact_lights_its_blocks() {
        let mut img = SonarImage::filled(15, 15, 25.0, 25.0);
        img.set(13, 4, 0.0);
        let pooled = min_pool(&img);
        for bj in 0..8 {
            for bi in 0..8 {
                let hit = (bj == 6 || bj == 7) && bi == 2;
                assert_eq!(pooled[bj * 8 + bi], if hit { 1.0 } else { 0.0 }, "block {bj},{bi}");
            }
        }
    }

    proptest! {
        #[test]
        fn pooled_closeness_is_max_of_members(vals in prop::collection::vec(0.0..25.0f64, 225)) {
            let img = SonarImage::from_distances(15, 15, 25.0, vals);
            let pooled = min_pool(&img);
            for bj in 0..8 {
                for bi in 0..8 {
                    let mut best: f64 = 0.0;
                    for r in 0..15 {
                        for c in 0..15 {
                            let member = (r == 2 * bj || r == 2 * bj + 1 || (bj == 7 && r == 13))
                                && (c == 2 * bi || c == 2 * bi + 1 || (bi == 7 && c == 13))
                                && r < 15 && c < 15;
                            if member {
                                best = best.max(closeness(img.get(r, c), 25.0));
                            }
                        }
                    }
                    prop_assert_eq!(pooled[bj * 8 + bi], best);
                    prop_assert!((0.0..=1.0).contains(&best));
                }
            }
        }

        #[test]
        fn adding_obstacles_never_increases_range(
            a in prop::array::uniform3(-20.0..20.0f64),
            b in prop::array::uniform3(-20.0..20.0f64),
            ra in 0.5..5.0f64, rb in 0.5..5.0f64,
        ) {
            let s = VehicleState { position: Vector3::new(0.0, 0.0, 0.0), attitude: Vector3::new(0.1, 0.2, -0.3), ..Default::default() };
            let first = [Obstacle::new(Vector3::from(a), ra)];
            let both = [first[0], Obstacle::new(Vector3::from(b), rb)];
            let cfg = SonarConfig::default();
            let one = scan(&s, &first, &cfg);
            let two = scan(&s, &both, &cfg);
            for (x, y) in one.distances().iter().zip(two.distances()) {
                prop_assert!(y <= x);
            }
        }
    }

    #[test]
    fn obstacle_text_round_trip() {
        let obs = vec![
            Obstacle::new(Vector3::new(1.5, -2.25, 3.0), 2.0),
            Obstacle::new(Vector3::new(0.1, 0.2, 0.3), 5.5),
        ];
        assert_eq!(obstacles_from_text(&obstacles_to_text(&obs)).unwrap(), obs);
        assert!(matches!(obstacles_from_text("1,2,3\n"), Err(PerceptionError::Parse { line: 1 })));
        assert!(matches!(obstacles_from_text("1,2,3,0\n"), Err(PerceptionError::BadRadius { line: 1 })));
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let img = SonarImage::empty(&SonarConfig::default());
        let csv = img.to_csv();
        assert_eq!(csv.lines().count(), 15);
        assert!(csv.lines().all(|l| l.split(',').count() == 15));
    }
}
