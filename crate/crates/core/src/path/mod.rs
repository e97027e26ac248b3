//! Smooth reference paths through waypoints and path-relative guidance.
//!
//! A quadratic is fitted through every overlapping triple of waypoints
//! (chord-length parametrized). On each interval between two waypoints the
//! two quadratics covering it are merged with a cubic smoothstep membership
//! function. Both quadratics pass through the interval end points, so the
//! merged curve interpolates the waypoints and is twice continuously
//! differentiable at the junctions.

mod waypoints;

pub use waypoints::{WaypointConfig, WaypointSet};

use nalgebra::Vector3;
use thiserror::Error;

use crate::dynamics::{rotation_body_to_ned, wrap_angle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("a path needs at least 3 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("degenerate waypoint configuration at waypoint {0}")]
    Degenerate(usize),
    #[error("non-finite waypoint coordinate")]
    NonFinite,
    #[error("malformed waypoint on line {line}")]
    Parse { line: usize },
}

/// Arc-length lookup table resolution (m).
const LUT_STEP: f64 = 0.1;

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `q(u) = a + b (u - center) + c (u - center)^2`, vector valued.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Quadratic {
    center: f64,
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
}

impl Quadratic {
    fn through(p: [Vector3<f64>; 3], u: [f64; 3]) -> Self {
        let h0 = u[0] - u[1];
        let h2 = u[2] - u[1];
        let d0 = (p[0] - p[1]) / h0;
        let d2 = (p[2] - p[1]) / h2;
        let c = (d2 - d0) / (h2 - h0);
        let b = d0 - c * h0;
        Self {
            center: u[1],
            a: p[1],
            b,
            c,
        }
    }

    fn eval(&self, u: f64) -> [Vector3<f64>; 3] {
        let t = u - self.center;
        [self.a + self.b * t + self.c * (t * t), self.b + self.c * (2.0 * t), self.c * 2.0]
    }
}

fn smoothstep(w: f64) -> [f64; 3] {
    [w * w * (3.0 - 2.0 * w), 6.0 * w * (1.0 - w), 6.0 - 12.0 * w]
}

/// Point on the path with its tangent direction angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub position: Vector3<f64>,
    /// Tangent azimuth chi_p (rad).
    pub azimuth: f64,
    /// Tangent elevation upsilon_p (rad), positive climbing.
    pub elevation: f64,
    /// Arc length s (m).
    pub arc_length: f64,
}

impl PathPoint {
    pub fn tangent(&self) -> Vector3<f64> {
        let (ce, se) = (self.elevation.cos(), self.elevation.sin());
        Vector3::new(self.azimuth.cos() * ce, self.azimuth.sin() * ce, -se)
    }
}

/// Along-, cross- and vertical-track errors in the Serret-Frenet frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingError {
    pub along_track: f64,
    pub cross_track: f64,
    pub vertical_track: f64,
}

impl TrackingError {
    /// Distance to the path in the normal plane, `|(e, h)|`.
    pub fn magnitude(&self) -> f64 {
        self.cross_track.hypot(self.vertical_track)
    }
}

#[derive(Debug, Clone, Copy)]
struct LutNode {
    param: f64,
    arc: f64,
    position: Vector3<f64>,
}

/// Curvature-continuous path through a waypoint set.
#[derive(Debug, Clone)]
pub struct QpmiPath {
    waypoints: WaypointSet,
    knots: Vec<f64>,
    quads: Vec<Quadratic>,
    lut: Vec<LutNode>,
    knot_arcs: Vec<f64>,
}

impl QpmiPath {
    pub fn new(waypoints: WaypointSet) -> Result<Self, PathError> {
        let pts = waypoints.points();
        let n = pts.len();
        if n < 3 {
            return Err(PathError::TooFewWaypoints(n));
        }
        let mut knots = vec![0.0];
        for w in pts.windows(2) {
            let d = (w[1] - w[0]).norm();
            if d < 1e-9 {
                return Err(PathError::Degenerate(knots.len()));
            }
            knots.push(knots.last().unwrap() + d);
        }
        for (i, w) in pts.windows(3).enumerate() {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            if a.normalize().dot(&b.normalize()) < -1.0 + 1e-9 {
                return Err(PathError::Degenerate(i + 1));
            }
        }
        let quads = (0..n - 2)
            .map(|m| Quadratic::through([pts[m], pts[m + 1], pts[m + 2]], [knots[m], knots[m + 1], knots[m + 2]]))
            .collect();
        let mut path = Self {
            waypoints,
            knots,
            quads,
            lut: Vec::new(),
            knot_arcs: Vec::new(),
        };
        path.build_lut();
        Ok(path)
    }

    fn build_lut(&mut self) {
        let mut lut = vec![LutNode {
            param: 0.0,
            arc: 0.0,
            position: self.eval_param(0.0)[0],
        }];
        let mut knot_arcs = vec![0.0];
        for j in 0..self.knots.len() - 1 {
            let (u0, u1) = (self.knots[j], self.knots[j + 1]);
            let subs = ((u1 - u0) / LUT_STEP).ceil().max(1.0) as usize;
            for k in 1..=subs {
                let a = lut.last().unwrap().param;
                let b = if k == subs {
                    u1
                } else {
                    u0 + (u1 - u0) * k as f64 / subs as f64
                };
                let arc = lut.last().unwrap().arc + self.speed_integral(a, b);
                lut.push(LutNode {
                    param: b,
                    arc,
                    position: self.eval_param(b)[0],
                });
            }
            knot_arcs.push(lut.last().unwrap().arc);
        }
        self.lut = lut;
        self.knot_arcs = knot_arcs;
    }

    fn speed_integral(&self, a: f64, b: f64) -> f64 {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS)
            .map(|(x, w)| w * self.eval_param(mid + half * x)[1].norm())
            .sum::<f64>()
            * half
    }

    /// Position, first and second derivative with respect to the chord parameter.
    pub fn eval_param(&self, u: f64) -> [Vector3<f64>; 3] {
        let u = u.clamp(0.0, *self.knots.last().unwrap());
        let last = self.knots.len() - 2;
        let j = match self.knots.partition_point(|&k| k <= u) {
            0 => 0,
            i => (i - 1).min(last),
        };
        if j == 0 {
            return self.quads[0].eval(u);
        }
        if j == last {
            return self.quads[last - 1].eval(u);
        }
        let h = self.knots[j + 1] - self.knots[j];
        let w = (u - self.knots[j]) / h;
        let [m, dm, ddm] = smoothstep(w);
        let (dm, ddm) = (dm / h, ddm / (h * h));
        let qa = self.quads[j - 1].eval(u);
        let qb = self.quads[j].eval(u);
        let diff0 = qb[0] - qa[0];
        let diff1 = qb[1] - qa[1];
        [
            qa[0] + diff0 * m,
            qa[1] + diff1 * m + diff0 * dm,
            qa[2] + (qb[2] - qa[2]) * m + diff1 * (2.0 * dm) + diff0 * ddm,
        ]
    }

    pub fn waypoints(&self) -> &WaypointSet {
        &self.waypoints
    }

    pub fn length(&self) -> f64 {
        self.lut.last().unwrap().arc
    }

    /// Chord-parameter values at which the waypoints are interpolated.
    pub fn waypoint_params(&self) -> &[f64] {
        &self.knots
    }

    /// Arc length at each waypoint.
    pub fn waypoint_arc_lengths(&self) -> &[f64] {
        &self.knot_arcs
    }

    /// Number of quadratic pieces, `n_w - 2`.
    pub fn segment_count(&self) -> usize {
        self.quads.len()
    }

    pub fn arc_at_param(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, *self.knots.last().unwrap());
        let k = self.lut.partition_point(|n| n.param <= u).saturating_sub(1);
        let node = &self.lut[k];
        node.arc + self.speed_integral(node.param, u)
    }

    pub fn param_at_arc(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let k = self.lut.partition_point(|n| n.arc <= s);
        if k >= self.lut.len() {
            return self.lut.last().unwrap().param;
        }
        let k = k.max(1);
        let (a, b) = (&self.lut[k - 1], &self.lut[k]);
        if b.arc <= a.arc {
            return a.param;
        }
        let mut u = a.param + (b.param - a.param) * (s - a.arc) / (b.arc - a.arc);
        for _ in 0..3 {
            let f = a.arc + self.speed_integral(a.param, u) - s;
            let speed = self.eval_param(u)[1].norm();
            if speed <= 0.0 {
                break;
            }
            u = (u - f / speed).clamp(a.param, b.param);
        }
        u
    }

    pub fn position_at(&self, s: f64) -> Vector3<f64> {
        self.eval_param(self.param_at_arc(s))[0]
    }

    fn point_at_param(&self, u: f64, s: f64) -> PathPoint {
        let [p, d, _] = self.eval_param(u);
        PathPoint {
            position: p,
            azimuth: d.y.atan2(d.x),
            elevation: (-d.z).atan2(d.x.hypot(d.y)),
            arc_length: s,
        }
    }

    pub fn point_at(&self, s: f64) -> PathPoint {
        let s = s.clamp(0.0, self.length());
        self.point_at_param(self.param_at_arc(s), s)
    }

    /// Curvature `|r' x r''| / |r'|^3` at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let [_, d1, d2] = self.eval_param(self.param_at_arc(s));
        d1.cross(&d2).norm() / d1.norm().powi(3)
    }

    pub fn start(&self) -> PathPoint {
        self.point_at(0.0)
    }

    pub fn end(&self) -> PathPoint {
        self.point_at(self.length())
    }

    /// Positions sampled every `step` metres of arc, end point included.
    pub fn sample(&self, step: f64) -> Vec<PathPoint> {
        let n = (self.length() / step).ceil() as usize;
        (0..=n)
            .map(|i| self.point_at((i as f64 * step).min(self.length())))
            .collect()
    }

    /// Global closest point: coarse scan over the lookup table followed by a
    /// golden-section refinement around each candidate basin. Ties resolve to
    /// the smaller arc length.
    pub fn closest_point(&self, p: &Vector3<f64>) -> PathPoint {
        let d2: Vec<f64> = self.lut.iter().map(|n| (n.position - p).norm_squared()).collect();
        let best = d2.iter().cloned().fold(f64::INFINITY, f64::min);
        let slack = (best.sqrt() + 0.05).powi(2);
        let last = d2.len() - 1;
        let mut winner: Option<(f64, f64)> = None;
        for k in 0..=last {
            let left = k == 0 || d2[k] <= d2[k - 1];
            let right = k == last || d2[k] < d2[k + 1];
            if !(left && right) || d2[k] > slack {
                continue;
            }
            let lo = self.lut[k.saturating_sub(1)].param;
            let hi = self.lut[(k + 1).min(last)].param;
            let u = self.golden_section(p, lo, hi);
            let dist = (self.eval_param(u)[0] - p).norm_squared();
            if winner.is_none_or(|(_, bd)| dist < bd) {
                winner = Some((u, dist));
            }
        }
        let (u, _) = winner.unwrap_or((self.lut[0].param, d2[0]));
        self.point_at_param(u, self.arc_at_param(u))
    }

    fn golden_section(&self, p: &Vector3<f64>, mut a: f64, mut b: f64) -> f64 {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let f = |u: f64| (self.eval_param(u)[0] - p).norm_squared();
        let mut c = b - (b - a) * INV_PHI;
        let mut d = a + (b - a) * INV_PHI;
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > 1e-10 {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - (b - a) * INV_PHI;
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + (b - a) * INV_PHI;
                fd = f(d);
            }
        }
        let mid = (a + b) / 2.0;
        // End points win when the minimum sits on the bracket edge.
        [a, mid, b]
            .into_iter()
            .min_by(|x, y| f(*x).total_cmp(&f(*y)))
            .unwrap()
    }
}

/// Serret-Frenet frame rotation: tangent x, horizontal normal y, z completing
/// the right-handed frame.
pub fn serret_frenet_rotation(point: &PathPoint) -> nalgebra::Matrix3<f64> {
    rotation_body_to_ned(&Vector3::new(0.0, point.elevation, point.azimuth))
}

pub fn tracking_errors(point: &PathPoint, p: &Vector3<f64>) -> TrackingError {
    let eps = serret_frenet_rotation(point).transpose() * (p - point.position);
    TrackingError {
        along_track: eps.x,
        cross_track: eps.y,
        vertical_track: eps.z,
    }
}

/// Desired azimuth and elevation from the 3D lookahead guidance law.
pub fn guidance_angles(err: &TrackingError, point: &PathPoint, lookahead: f64) -> (f64, f64) {
    assert!(lookahead > 0.0, "lookahead must be positive");
    let e = err.cross_track;
    let h = err.vertical_track;
    let chi = point.azimuth + (-e / lookahead).atan();
    let ups = point.elevation + (h / e.hypot(lookahead)).atan();
    (wrap_angle(chi), wrap_angle(ups))
}
