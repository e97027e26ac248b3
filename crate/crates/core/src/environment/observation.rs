use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::dynamics::VehicleState;

/// Number of state, error and current scalars ahead of the pooled sonar values.
pub const STATE_OBS: usize = 14;

/// Normalisers for `[u_r, v_r, w_r, phi, theta, psi, p, q, r, chi~, ups~, u_c, v_c, w_c]`.
pub const OBS_SCALE: [f64; STATE_OBS] = [2.0, 0.3, 0.3, PI, PI, PI, 1.2, 0.4, 0.4, PI, PI, 1.0, 1.0, 1.0];

/// Observation length for a pooled sonar image of `pooled` cells.
pub fn obs_dim(pooled: usize) -> usize {
    STATE_OBS + pooled
}

/// Normalised feedback vector, every element clipped to `[-1, 1]`.
///
/// `current_body` is the body-frame current velocity and `relative_velocity`
/// the linear velocity through the water.
pub fn build_observation(
    state: &VehicleState,
    relative_velocity: &Vector3<f64>,
    current_body: &Vector3<f64>,
    course_error: f64,
    elevation_error: f64,
    pooled: &[f64],
) -> Vec<f64> {
    let raw = [
        relative_velocity.x,
        relative_velocity.y,
        relative_velocity.z,
        state.attitude.x,
        state.attitude.y,
        state.attitude.z,
        state.angular_velocity.x,
        state.angular_velocity.y,
        state.angular_velocity.z,
        course_error,
        elevation_error,
        current_body.x,
        current_body.y,
        current_body.z,
    ];
    let mut obs = Vec::with_capacity(obs_dim(pooled.len()));
    obs.extend(raw.iter().zip(OBS_SCALE).map(|(v, s)| (v / s).clamp(-1.0, 1.0)));
    obs.extend(pooled.iter().map(|c| c.clamp(-1.0, 1.0)));
    obs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs_for(state: &VehicleState) -> Vec<f64> {
        build_observation(state, &state.linear_velocity, &Vector3::zeros(), 0.0, 0.0, &[0.0; 64])
    }

    #[test]
    fn table_normalisers() {
        let mut s = VehicleState::default();
        s.linear_velocity.x = 2.0;
        s.angular_velocity.x = 1.2;
        let o = obs_for(&s);
        assert_eq!(o.len(), 78);
        assert_eq!(o[0], 1.0);
        assert_eq!(o[6], 1.0);
        s.linear_velocity.x = 3.0;
        assert_eq!(obs_for(&s)[0], 1.0);
        s.linear_velocity.y = -0.15;
        assert_eq!(obs_for(&s)[1], -0.5);
    }

    #[test]
    fn errors_and_current_placement() {
        let s = VehicleState::default();
        let o = build_observation(&s, &Vector3::zeros(), &Vector3::new(0.5, -0.25, 2.0), PI / 2.0, -PI / 4.0, &[0.3; 64]);
        assert_eq!(&o[9..14], &[0.5, -0.25, 0.5, -0.25, 1.0]);
        assert!(o[14..].iter().all(|&c| c == 0.3));
    }
}
