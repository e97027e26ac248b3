//! Six degree-of-freedom rigid-body model of an underactuated AUV.
//!
//! The pose `eta = [x, y, z, phi, theta, psi]` lives in the NED frame and the
//! velocity `nu = [u, v, w, p, q, r]` in the body frame. Kinetics are solved
//! for the velocity relative to an irrotational ocean current, using a
//! Coriolis parametrization that does not depend on the linear velocities.

mod current;
mod params;

pub use current::{CurrentState, CURRENT_MAX, CURRENT_MIN};
pub use params::HydroParams;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix6, SVector, Vector3, Vector6};
use thiserror::Error;

pub type StateVector = SVector<f64, 12>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("Euler-rate transform is singular at pitch {pitch:.6} rad")]
    Singularity { pitch: f64 },
    #[error("simulation diverged: non-finite state or derivative")]
    Diverged,
    #[error("invalid hydrodynamic parameters: {0}")]
    InvalidParams(String),
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Cross-product matrix: `skew(a) * b == a x b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    /// NED position (m).
    pub position: Vector3<f64>,
    /// Roll, pitch, yaw (rad).
    pub attitude: Vector3<f64>,
    /// Body-frame linear velocity u, v, w (m/s).
    pub linear_velocity: Vector3<f64>,
    /// Body-frame angular velocity p, q, r (rad/s).
    pub angular_velocity: Vector3<f64>,
}

impl VehicleState {
    pub fn nu(&self) -> Vector6<f64> {
        let (v, w) = (self.linear_velocity, self.angular_velocity);
        Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z)
    }

    pub fn eta(&self) -> Vector6<f64> {
        let (p, a) = (self.position, self.attitude);
        Vector6::new(p.x, p.y, p.z, a.x, a.y, a.z)
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<6>(0).copy_from(&self.eta());
        x.fixed_rows_mut::<6>(6).copy_from(&self.nu());
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            position: x.fixed_rows::<3>(0).into(),
            attitude: x.fixed_rows::<3>(3).into(),
            linear_velocity: x.fixed_rows::<3>(6).into(),
            angular_velocity: x.fixed_rows::<3>(9).into(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }

    /// NED velocity over ground.
    pub fn velocity_ned(&self) -> Vector3<f64> {
        rotation_body_to_ned(&self.attitude) * self.linear_velocity
    }

    /// Azimuth (course) and elevation of the velocity vector; elevation is
    /// positive when climbing.
    pub fn course_and_elevation(&self) -> (f64, f64) {
        let v = self.velocity_ned();
        (v.y.atan2(v.x), (-v.z).atan2(v.x.hypot(v.y)))
    }
}

/// Actuator positions applied to the hull over one control step.
///
/// The fin angles are the outputs of the fin low-pass filters and serve as
/// the filter memory for the next step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorState {
    /// Propeller shaft speed (rev/s).
    pub propeller_speed: f64,
    /// Rudder angle delta_r (rad).
    pub rudder: f64,
    /// Elevator angle delta_s (rad).
    pub elevator: f64,
}

impl ActuatorState {
    pub fn saturated(&self, params: &HydroParams) -> Self {
        Self {
            propeller_speed: self.propeller_speed.clamp(0.0, params.propeller_max),
            rudder: self.rudder.clamp(-params.fin_max, params.fin_max),
            elevator: self.elevator.clamp(-params.fin_max, params.fin_max),
        }
    }
}

/// Body-to-NED rotation, z-y-x (yaw, pitch, roll) convention.
pub fn rotation_body_to_ned(attitude: &Vector3<f64>) -> Matrix3<f64> {
    let (sf, cf) = attitude.x.sin_cos();
    let (st, ct) = attitude.y.sin_cos();
    let (sp, cp) = attitude.z.sin_cos();
    Matrix3::new(
        cp * ct,
        -sp * cf + cp * st * sf,
        sp * sf + cp * cf * st,
        sp * ct,
        cp * cf + sf * st * sp,
        -cp * sf + st * sp * cf,
        -st,
        ct * sf,
        ct * cf,
    )
}

/// Maps body angular velocity to Euler-angle rates.
pub fn euler_rate_transform(attitude: &Vector3<f64>, margin: f64) -> Result<Matrix3<f64>, DynamicsError> {
    let (sf, cf) = attitude.x.sin_cos();
    let (st, ct) = attitude.y.sin_cos();
    if ct.abs() < margin || !ct.is_finite() {
        return Err(DynamicsError::Singularity { pitch: attitude.y });
    }
    let tt = st / ct;
    Ok(Matrix3::new(
        1.0,
        sf * tt,
        cf * tt,
        0.0,
        cf,
        -sf,
        0.0,
        sf / ct,
        cf / ct,
    ))
}

/// `eta_dot = J(eta) nu`.
pub fn kinematics_derivative(state: &VehicleState, margin: f64) -> Result<Vector6<f64>, DynamicsError> {
    let pos = rotation_body_to_ned(&state.attitude) * state.linear_velocity;
    let ang = euler_rate_transform(&state.attitude, margin)? * state.angular_velocity;
    Ok(Vector6::new(pos.x, pos.y, pos.z, ang.x, ang.y, ang.z))
}

/// Vehicle model with the mass matrix factored once.
#[derive(Debug, Clone)]
pub struct Hydrodynamics {
    params: HydroParams,
    mass: Matrix6<f64>,
    mass_inv: Matrix6<f64>,
}

impl Hydrodynamics {
    pub fn new(params: HydroParams) -> Result<Self, DynamicsError> {
        params.validate()?;
        let mass = params.mass_matrix();
        let mass_inv = mass
            .cholesky()
            .ok_or_else(|| DynamicsError::InvalidParams("mass matrix not invertible".into()))?
            .inverse();
        Ok(Self {
            params,
            mass,
            mass_inv,
        })
    }

    pub fn params(&self) -> &HydroParams {
        &self.params
    }

    pub fn mass_matrix(&self) -> &Matrix6<f64> {
        &self.mass
    }

    /// Coriolis-centripetal matrix, independent of the linear velocities.
    ///
    /// Skew-symmetric for every input, so it does no work.
    pub fn coriolis(&self, nu_r: &Vector6<f64>) -> Matrix6<f64> {
        let p = &self.params;
        let mut c = Matrix6::zeros();
        if !p.coriolis {
            return c;
        }
        let w = Vector3::new(nu_r[3], nu_r[4], nu_r[5]);
        let sw = skew(&w);
        let sg = skew(&p.cg());
        let i_w = p.rigid_inertia() * w;
        let a_w = Vector3::new(p.added_mass[3] * w.x, p.added_mass[4] * w.y, p.added_mass[5] * w.z);
        c.fixed_view_mut::<3, 3>(0, 0).copy_from(&(p.mass * sw));
        c.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-p.mass * sw * sg));
        c.fixed_view_mut::<3, 3>(3, 0).copy_from(&(p.mass * sg * sw));
        c.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-skew(&i_w) - skew(&a_w)));
        c
    }

    /// Diagonal damping: linear, quadratic and surge-proportional lift terms.
    pub fn damping(&self, nu_r: &Vector6<f64>) -> Matrix6<f64> {
        let p = &self.params;
        let u = nu_r[0].abs();
        Matrix6::from_fn(|i, j| {
            if i == j {
                p.linear_damping[i] + p.quadratic_damping[i] * nu_r[i].abs() + p.lift_damping[i] * u
            } else {
                0.0
            }
        })
    }

    /// Gravity and buoyancy restoring forces, with the centre of buoyancy at the origin.
    pub fn restoring(&self, attitude: &Vector3<f64>) -> Vector6<f64> {
        let p = &self.params;
        if !p.restoring {
            return Vector6::zeros();
        }
        let (sf, cf) = attitude.x.sin_cos();
        let (st, ct) = attitude.y.sin_cos();
        let w = p.weight();
        let net = w - p.buoyancy;
        let zgw = p.cg_offset_z * w;
        Vector6::new(
            net * st,
            -net * ct * sf,
            -net * ct * cf,
            zgw * ct * sf,
            zgw * st,
            0.0,
        )
    }

    /// Propeller thrust and fin lift. Positive rudder yaws to starboard,
    /// positive elevator pitches nose up.
    pub fn control_forces(&self, act: &ActuatorState, u_r: f64) -> Vector6<f64> {
        let p = &self.params;
        let act = act.saturated(p);
        let thrust = p.thrust_coeff * act.propeller_speed * act.propeller_speed;
        let q = p.fin_lift * u_r * u_r.abs();
        let side = -q * act.rudder;
        let heave = q * act.elevator;
        Vector6::new(thrust, side, heave, 0.0, p.fin_arm * heave, -p.fin_arm * side)
    }

    /// Relative-velocity acceleration `M^-1 (tau - C nu_r - D nu_r - g)`.
    pub fn kinetics_derivative(
        &self,
        state: &VehicleState,
        act: &ActuatorState,
        current: &CurrentState,
    ) -> Result<Vector6<f64>, DynamicsError> {
        let nu_r = state.nu() - current.velocity_body(&state.attitude);
        let tau = self.control_forces(act, nu_r[0]);
        let rhs = tau - self.coriolis(&nu_r) * nu_r - self.damping(&nu_r) * nu_r - self.restoring(&state.attitude);
        let acc = self.mass_inv * rhs;
        if acc.iter().all(|v| v.is_finite()) {
            Ok(acc)
        } else {
            Err(DynamicsError::Diverged)
        }
    }

    /// Full 12-state derivative. The body-frame current velocity of a current
    /// fixed in NED rotates with the hull, hence the `-w x v_c` correction.
    pub fn state_derivative(
        &self,
        state: &VehicleState,
        act: &ActuatorState,
        current: &CurrentState,
    ) -> Result<StateVector, DynamicsError> {
        let eta_dot = kinematics_derivative(state, self.params.singularity_margin)?;
        let mut nu_dot = self.kinetics_derivative(state, act, current)?;
        if !current.is_calm() {
            let vc = current.velocity_body(&state.attitude);
            let corr = -state.angular_velocity.cross(&Vector3::new(vc[0], vc[1], vc[2]));
            nu_dot[0] += corr.x;
            nu_dot[1] += corr.y;
            nu_dot[2] += corr.z;
        }
        let mut d = StateVector::zeros();
        d.fixed_rows_mut::<6>(0).copy_from(&eta_dot);
        d.fixed_rows_mut::<6>(6).copy_from(&nu_dot);
        Ok(d)
    }

    /// One classical fourth-order Runge-Kutta step with actuators and current
    /// held constant. Euler angles are wrapped afterwards.
    pub fn step(
        &self,
        state: &VehicleState,
        act: &ActuatorState,
        current: &CurrentState,
        dt: f64,
    ) -> Result<VehicleState, DynamicsError> {
        assert!(dt > 0.0, "time step must be positive");
        let f = |x: &StateVector| self.state_derivative(&VehicleState::from_vector(x), act, current);
        let x0 = state.to_vector();
        let k1 = f(&x0)?;
        let k2 = f(&(x0 + k1 * (dt / 2.0)))?;
        let k3 = f(&(x0 + k2 * (dt / 2.0)))?;
        let k4 = f(&(x0 + k3 * dt))?;
        let x1 = x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let mut next = VehicleState::from_vector(&x1);
        if !next.is_finite() {
            return Err(DynamicsError::Diverged);
        }
        next.attitude = next.attitude.map(wrap_angle);
        euler_rate_transform(&next.attitude, self.params.singularity_margin)?;
        Ok(next)
    }

    /// Kinetic energy of the relative motion, `0.5 nu^T M nu`.
    pub fn kinetic_energy(&self, nu_r: &Vector6<f64>) -> f64 {
        0.5 * nu_r.dot(&(self.mass * nu_r))
    }
}
