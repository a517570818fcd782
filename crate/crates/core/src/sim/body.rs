use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::config::RobotConfig;
use crate::cpg::NUM_LEGS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    /// World position of the body origin (hip plane centre), m.
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    /// World frame, m/s.
    pub linear_velocity: Vector3<f64>,
    /// Body frame, rad/s.
    pub angular_velocity: Vector3<f64>,
    /// Measured joint angles, `[leg][joint]`.
    pub joint_angles: [[f64; 3]; NUM_LEGS],
    /// Total contact force on each foot, world frame, N.
    pub foot_forces: [Vector3<f64>; NUM_LEGS],
}

impl RobotState {
    pub fn at_rest(position: Vector3<f64>, joint_angles: [[f64; 3]; NUM_LEGS]) -> Self {
        RobotState {
            position,
            orientation: UnitQuaternion::identity(),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            joint_angles,
            foot_forces: [Vector3::zeros(); NUM_LEGS],
        }
    }

    /// Angle between the world up vector and the body up vector.
    pub fn up_angle(&self) -> f64 {
        let up = self.orientation * Vector3::z();
        (up.x * up.x + up.y * up.y).sqrt().atan2(up.z)
    }

    /// Magnitude of each foot's contact force.
    pub fn grf_magnitudes(&self) -> [f64; NUM_LEGS] {
        self.foot_forces.map(|f| f.norm())
    }

    /// Kinetic plus gravitational potential energy of the body.
    pub fn mechanical_energy(&self, robot: &RobotConfig, gravity: f64) -> f64 {
        let w = self.angular_velocity;
        let [ix, iy, iz] = robot.inertia;
        0.5 * robot.mass * self.linear_velocity.norm_squared()
            + 0.5 * (ix * w.x * w.x + iy * w.y * w.y + iz * w.z * w.z)
            + robot.mass * gravity * self.position.z
    }
}

/// One semi-implicit Euler step of the single rigid body under gravity and
/// point forces `(world application point, world force)`.
pub fn body_step(
    state: &RobotState,
    forces: &[(Vector3<f64>, Vector3<f64>)],
    robot: &RobotConfig,
    gravity: f64,
    dt: f64,
) -> Result<RobotState> {
    let mut total_force = Vector3::new(0.0, 0.0, -robot.mass * gravity);
    let mut total_torque = Vector3::zeros();
    for (point, force) in forces {
        if !force.iter().all(|c| c.is_finite()) || !point.iter().all(|c| c.is_finite()) {
            return Err(Error::Diverged {
                step: 0,
                reason: format!("non-finite contact force {force:?} at {point:?}"),
            });
        }
        total_force += force;
        total_torque += (point - state.position).cross(force);
    }

    // Angular momentum is advanced in the world frame, which keeps torque-free
    // rotation from gaining energy through an explicit gyroscopic term.
    let inertia = Vector3::from(robot.inertia);
    let momentum = state.orientation * inertia.component_mul(&state.angular_velocity) + total_torque * dt;

    let linear_velocity = state.linear_velocity + total_force * (dt / robot.mass);
    let position = state.position + linear_velocity * dt;
    let spin = state
        .orientation
        .inverse_transform_vector(&momentum)
        .component_div(&inertia);
    let mut orientation = state.orientation * UnitQuaternion::from_scaled_axis(spin * dt);
    orientation.renormalize();
    let angular_velocity = orientation
        .inverse_transform_vector(&momentum)
        .component_div(&inertia);

    let next = RobotState {
        position,
        orientation,
        linear_velocity,
        angular_velocity,
        joint_angles: state.joint_angles,
        foot_forces: state.foot_forces,
    };
    if !next.position.iter().chain(next.linear_velocity.iter()).all(|c| c.is_finite())
        || !next.angular_velocity.iter().all(|c| c.is_finite())
    {
        return Err(Error::Diverged {
            step: 0,
            reason: "non-finite body state".into(),
        });
    }
    Ok(next)
}
