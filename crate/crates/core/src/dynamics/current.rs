use nalgebra::{Vector3, Vector6};

use super::rotation_body_to_ned;

pub const CURRENT_MIN: f64 = 0.5;
pub const CURRENT_MAX: f64 = 1.0;

/// Irrotational ocean current with a first-order Gauss-Markov intensity.
///
/// Direction angles are fixed for the lifetime of an episode; only the
/// intensity evolves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentState {
    /// Intensity V_c (m/s).
    pub intensity: f64,
    /// Sideslip angle beta_c (rad).
    pub sideslip: f64,
    /// Angle of attack alpha_c (rad).
    pub angle_of_attack: f64,
    /// Mean reversion rate mu (1/s).
    pub mean_reversion: f64,
    /// Standard deviation of the white-noise forcing w.
    pub noise_std: f64,
}

impl CurrentState {
    /// A current that contributes nothing; used in scenarios without disturbance.
    pub fn calm() -> Self {
        Self {
            intensity: 0.0,
            sideslip: 0.0,
            angle_of_attack: 0.0,
            mean_reversion: 0.0,
            noise_std: 0.0,
        }
    }

    pub fn is_calm(&self) -> bool {
        self.intensity == 0.0
    }

    /// Euler step of `dV = (-mu V + w) dt`, clamped to the admissible band.
    ///
    /// A calm current stays calm.
    pub fn step(&self, dt: f64, noise_sample: f64) -> Self {
        if self.is_calm() {
            return *self;
        }
        let v = self.intensity + dt * (-self.mean_reversion * self.intensity + noise_sample);
        Self {
            intensity: v.clamp(CURRENT_MIN, CURRENT_MAX),
            ..*self
        }
    }

    pub fn velocity_ned(&self) -> Vector3<f64> {
        let (a, b) = (self.angle_of_attack, self.sideslip);
        self.intensity * Vector3::new(a.cos() * b.cos(), b.sin(), a.sin() * b.cos())
    }

    /// Current velocity in the body frame, zero in the angular components.
    pub fn velocity_body(&self, attitude: &Vector3<f64>) -> Vector6<f64> {
        let lin = rotation_body_to_ned(attitude).transpose() * self.velocity_ned();
        Vector6::new(lin.x, lin.y, lin.z, 0.0, 0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn current(v: f64, mu: f64) -> CurrentState {
        CurrentState {
            intensity: v,
            sideslip: 0.0,
            angle_of_attack: 0.0,
            mean_reversion: mu,
            noise_std: 0.1,
        }
    }

    #[test]
    fn zero_drift_keeps_intensity() {
        let c = current(0.7, 0.0);
        assert_eq!(c.step(0.1, 0.0).intensity, 0.7);
    }

    #[test]
    fn large_noise_is_clamped() {
        let c = current(1.0, 0.05);
        assert_eq!(c.step(0.1, 100.0).intensity, 1.0);
        assert_eq!(c.step(0.1, -100.0).intensity, 0.5);
    }

    #[test]
    fn decay_follows_exponential_until_floor() {
        // dV/dt = -mu V has V(t) = V0 exp(-mu t); Euler with a fine step tracks it.
        let mu = 0.05;
        let dt = 0.001;
        let mut c = current(1.0, mu);
        let mut t = 0.0;
        while t < 5.0 - 1e-12 {
            c = c.step(dt, 0.0);
            t += dt;
        }
        let exact = (-mu * 5.0f64).exp();
        assert!((c.intensity - exact).abs() < 1e-4, "{} vs {exact}", c.intensity);
        for _ in 0..100_000 {
            c = c.step(dt, 0.0);
        }
        assert_eq!(c.intensity, CURRENT_MIN);
    }

    #[test]
    fn direction_is_invariant() {
        let mut c = CurrentState {
            sideslip: 0.3,
            angle_of_attack: -0.2,
            ..current(0.8, 0.05)
        };
        for k in 0..100 {
            c = c.step(0.1, (k as f64).sin());
        }
        assert_eq!(c.sideslip, 0.3);
        assert_eq!(c.angle_of_attack, -0.2);
    }

    #[test]
    fn body_velocity_examples() {
        let zero = Vector3::zeros();
        let aligned = current(1.0, 0.0).velocity_body(&zero);
        assert!((aligned - Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)).norm() < 1e-15);
        let sway = CurrentState {
            sideslip: FRAC_PI_2,
            ..current(1.0, 0.0)
        }
        .velocity_body(&zero);
        assert!((sway - Vector6::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn calm_current_stays_calm() {
        let c = CurrentState::calm();
        assert!(c.step(0.1, 5.0).is_calm());
        assert_eq!(c.velocity_body(&Vector3::new(0.1, 0.2, 0.3)), Vector6::zeros());
    }
}
