//! Fin command filtering and propeller speed regulation.

/// First-order discrete low-pass filter, `a = h / (T_f + h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub time_constant: f64,
    pub step: f64,
}

impl FilterConfig {
    pub fn new(time_constant: f64, step: f64) -> Self {
        assert!(time_constant >= 0.0 && step > 0.0, "invalid filter configuration");
        Self { time_constant, step }
    }

    pub fn alpha(&self) -> f64 {
        self.step / (self.time_constant + self.step)
    }
}

pub fn low_pass(prev_output: f64, raw_command: f64, cfg: &FilterConfig) -> f64 {
    let a = cfg.alpha();
    (1.0 - a) * prev_output + a * raw_command
}

/// PI surge-speed controller driving the propeller shaft speed.
///
/// Anti-windup by conditional integration: the integral is frozen whenever
/// the output is saturated and the error would push it further out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
    /// Desired surge speed u_d (m/s).
    pub setpoint: f64,
    /// Accumulated speed error (m).
    pub integral: f64,
    pub output_max: f64,
}

impl PiGains {
    pub fn new(kp: f64, ki: f64, setpoint: f64, output_max: f64) -> Self {
        Self {
            kp,
            ki,
            setpoint,
            integral: 0.0,
            output_max,
        }
    }

    /// Pre-loads the integral so that zero error yields `output`.
    pub fn with_feedforward(mut self, output: f64) -> Self {
        if self.ki > 0.0 {
            self.integral = output.clamp(0.0, self.output_max) / self.ki;
        }
        self
    }

    pub fn pi_thrust(&mut self, measured_u: f64, dt: f64) -> f64 {
        assert!(dt > 0.0, "time step must be positive");
        let e = self.setpoint - measured_u;
        let trial = self.kp * e + self.ki * (self.integral + e * dt);
        let winding_up = (trial > self.output_max && e > 0.0) || (trial < 0.0 && e < 0.0);
        if !winding_up {
            self.integral += e * dt;
        }
        (self.kp * e + self.ki * self.integral).clamp(0.0, self.output_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ActuatorState, CurrentState, HydroParams, Hydrodynamics, VehicleState};
    use proptest::prelude::*;

    #[test]
    fn unit_alpha_passes_through() {
        let cfg = FilterConfig::new(0.0, 0.1);
        assert_eq!(cfg.alpha(), 1.0);
        assert_eq!(low_pass(0.3, -0.2, &cfg), -0.2);
    }

    #[test]
    fn constant_input_converges_geometrically() {
        let cfg = FilterConfig::new(0.2, 0.1);
        let a = cfg.alpha();
        let c = 0.4;
        let mut y = 0.0;
        for n in 1..=50 {
            y = low_pass(y, c, &cfg);
            let closed_form = c * (1.0 - (1.0 - a).powi(n));
            assert!((y - closed_form).abs() < 1e-14);
        }
    }

    #[test]
    fn alternating_input_is_attenuated() {
        let cfg = FilterConfig::new(0.2, 0.1);
        let c = 0.5;
        let mut y = 0.0;
        let mut peak: f64 = 0.0;
        for k in 0..100 {
            let raw = if k % 2 == 0 { c } else { -c };
            y = low_pass(y, raw, &cfg);
            if k >= 50 {
                peak = peak.max(y.abs());
            }
        }
        let a = cfg.alpha();
        assert!(peak < c);
        assert!((peak - c * a / (2.0 - a)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn filter_is_convex_combination(prev in -1.0..1.0f64, raw in -1.0..1.0f64, tf in 0.0..2.0f64) {
            let y = low_pass(prev, raw, &FilterConfig::new(tf, 0.1));
            prop_assert!(y >= prev.min(raw) - 1e-15 && y <= prev.max(raw) + 1e-15);
            prop_assert!(y.abs() <= prev.abs().max(raw.abs()) + 1e-15);
        }

        #[test]
        fn pi_output_within_bounds(u in -5.0..5.0f64, i0 in -100.0..100.0f64) {
            let mut pi = PiGains::new(20.0, 5.0, 1.5, 40.0);
            pi.integral = i0;
            let out = pi.pi_thrust(u, 0.1);
            prop_assert!((0.0..=40.0).contains(&out));
        }
    }

    #[test]
    fn zero_error_zero_integral_gives_zero() {
        let mut pi = PiGains::new(20.0, 5.0, 1.5, 40.0);
        assert_eq!(pi.pi_thrust(1.5, 0.1), 0.0);
    }

    #[test]
    fn anti_windup_freezes_integral() {
        let mut pi = PiGains::new(20.0, 5.0, 1.5, 40.0);
        pi.pi_thrust(-10.0, 0.1);
        let frozen = pi.integral;
        for _ in 0..100 {
            assert_eq!(pi.pi_thrust(-10.0, 0.1), 40.0);
        }
        assert_eq!(pi.integral, frozen);
    }

    #[test]
    fn closed_loop_surge_settles() {
        let model = Hydrodynamics::new(HydroParams::default()).unwrap();
        let mut pi = PiGains::new(20.0, 5.0, 1.5, model.params().propeller_max);
        let mut s = VehicleState::default();
        let dt = 0.1;
        let mut settled_at = None;
        for k in 0..600 {
            let n = pi.pi_thrust(s.linear_velocity.x, dt);
            let act = ActuatorState {
                propeller_speed: n,
                ..Default::default()
            };
            s = model.step(&s, &act, &CurrentState::calm(), dt).unwrap();
            let err = (s.linear_velocity.x - 1.5).abs() / 1.5;
            match (err < 0.05, settled_at) {
                (true, None) => settled_at = Some(k),
                (false, Some(_)) => settled_at = None,
                _ => {}
            }
        }
        let k = settled_at.expect("surge never settled");
        assert!((k as f64) * dt < 30.0, "settled after {} s", k as f64 * dt);
    }
}
