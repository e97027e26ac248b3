use nalgebra::{Matrix3, Matrix6, Vector3};

use super::{skew, DynamicsError};

/// Hydrodynamic, mass and actuator coefficients of the vehicle.
///
/// Defaults describe a slender spheroid hull of 1.08 m length and 18 kg with
/// its centre of gravity 1 cm under the centre of buoyancy and roughly 0.5 N
/// of net positive buoyancy. Added mass and damping are diagonal. Lift is
/// modelled as a surge-speed proportional diagonal damping term.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroParams {
    pub mass: f64,
    /// Rigid-body moments of inertia about the body axes (kg m^2).
    pub inertia: [f64; 3],
    /// Added-mass magnitudes for (surge, sway, heave, roll, pitch, yaw), all >= 0.
    pub added_mass: [f64; 6],
    /// Vertical offset of the centre of gravity below the centre of buoyancy (m).
    pub cg_offset_z: f64,
    pub gravity: f64,
    /// Buoyancy force (N); exceeds `mass * gravity` for a slightly buoyant hull.
    pub buoyancy: f64,
    pub linear_damping: [f64; 6],
    pub quadratic_damping: [f64; 6],
    /// Lift-induced damping, scaled by |u_r|.
    pub lift_damping: [f64; 6],
    /// Thrust (N) per squared shaft speed (rev/s)^2.
    pub thrust_coeff: f64,
    /// Maximum propeller shaft speed (rev/s).
    pub propeller_max: f64,
    /// Fin lift per unit fin angle and squared relative surge speed.
    pub fin_lift: f64,
    /// Distance from the centre of origin to the fin centre of pressure, aft (m).
    pub fin_arm: f64,
    /// Fin deflection limit (rad).
    pub fin_max: f64,
    pub coriolis: bool,
    pub restoring: bool,
    /// Smallest admissible |cos(pitch)| before the Euler-rate transform is refused.
    pub singularity_margin: f64,
}

impl Default for HydroParams {
    fn default() -> Self {
        let mass = 18.0;
        let gravity = 9.81;
        Self {
            mass,
            inertia: [0.056, 1.078, 1.078],
            added_mass: [0.9, 16.5, 16.5, 0.0, 0.8, 0.8],
            cg_offset_z: 0.01,
            gravity,
            buoyancy: mass * gravity + 0.5,
            linear_damping: [2.0, 10.0, 10.0, 0.3, 0.5, 0.5],
            quadratic_damping: [3.0, 20.0, 20.0, 0.05, 1.0, 1.0],
            lift_damping: [0.0, 20.0, 20.0, 0.0, 2.0, 2.0],
            thrust_coeff: 0.01,
            propeller_max: 40.0,
            fin_lift: 2.2,
            fin_arm: 0.45,
            fin_max: 30f64.to_radians(),
            coriolis: true,
            restoring: true,
            singularity_margin: 1e-3,
        }
    }
}

impl HydroParams {
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    pub fn cg(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.cg_offset_z)
    }

    pub fn rigid_inertia(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.inertia))
    }

    /// Rigid-body plus added mass matrix.
    pub fn mass_matrix(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        let s = skew(&self.cg());
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(Matrix3::identity() * self.mass));
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-self.mass * s));
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(self.mass * s));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rigid_inertia());
        for i in 0..6 {
            m[(i, i)] += self.added_mass[i];
        }
        m
    }

    /// Steady surge speed reached with the propeller at `shaft` rev/s and fins centred.
    pub fn steady_surge(&self, shaft: f64) -> f64 {
        let thrust = self.thrust_coeff * shaft * shaft;
        let (a, b) = (self.quadratic_damping[0], self.linear_damping[0]);
        if a > 0.0 {
            (-b + (b * b + 4.0 * a * thrust).sqrt()) / (2.0 * a)
        } else {
            thrust / b
        }
    }

    /// Shaft speed holding `u` in steady straight flight.
    pub fn trim_propeller(&self, u: f64) -> f64 {
        let drag = (self.linear_damping[0] + self.quadratic_damping[0] * u.abs()) * u;
        (drag.max(0.0) / self.thrust_coeff).sqrt().min(self.propeller_max)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: &str| Err(DynamicsError::InvalidParams(what.to_string()));
        if !(self.mass > 0.0) {
            return bad("mass must be positive");
        }
        if self.inertia.iter().any(|&i| !(i > 0.0)) {
            return bad("inertia must be positive");
        }
        let all = self
            .added_mass
            .iter()
            .chain(&self.linear_damping)
            .chain(&self.quadratic_damping)
            .chain(&self.lift_damping);
        if all.clone().any(|&c| !(c >= 0.0)) {
            return bad("added mass and damping coefficients must be non-negative");
        }
        if !(self.fin_max > 0.0 && self.propeller_max > 0.0 && self.thrust_coeff > 0.0) {
            return bad("actuator limits must be positive");
        }
        if !(self.singularity_margin > 0.0 && self.singularity_margin < 1.0) {
            return bad("singularity margin must lie in (0, 1)");
        }
        let m = self.mass_matrix();
        if (m - m.transpose()).abs().max() > 1e-12 || m.cholesky().is_none() {
            return bad("mass matrix must be symmetric positive definite");
        }
        Ok(())
    }
}
