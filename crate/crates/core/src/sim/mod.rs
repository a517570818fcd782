//! Quadruped surrogate: a single rigid body carried by four massless
//! three-joint legs with servo-lagged joints and spring-damper point feet.

mod body;
mod config;
mod contact;
mod evaluate;
mod kinematics;
mod trace;

pub use body::{body_step, RobotState};
pub use config::{GroundModel, RobotConfig, SimConfig, SimSettings};
pub use contact::{contact_force, contact_forces, servo_step};
pub use evaluate::{initial_phases, run_evaluation, run_evaluation_from, standing_height};
pub use kinematics::leg_forward_kinematics;
pub use trace::{EvalTrace, TraceSample};
