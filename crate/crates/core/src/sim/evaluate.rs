use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::body::{body_step, RobotState};
use super::config::{RobotConfig, SimConfig};
use super::contact::{contact_forces, servo_step};
use super::kinematics::leg_forward_kinematics;
use super::trace::{EvalTrace, TraceSample};
use crate::cpg::{ControllerParams, Coupling, CpgNetwork, NUM_LEGS, TWO_PI};
use crate::error::{Error, Result};

/// Initial joint-0 phases. Open loop starts on its desired leg phases;
/// closed loop starts every leg at 0 plus a seeded uniform perturbation.
pub fn initial_phases(params: &ControllerParams, sim: &SimConfig, seed: u64) -> [f64; NUM_LEGS] {
    match params.global.coupling {
        Coupling::OpenLoop { leg_phases, .. } => leg_phases.map(|f| TWO_PI * f),
        Coupling::ClosedLoop { .. } => {
            let half = sim.settings.initial_phase_perturbation;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            std::array::from_fn(|_| {
                if half > 0.0 {
                    rng.random_range(-half..=half)
                } else {
                    0.0
                }
            })
        }
    }
}

fn clamp_angles(targets: [[f64; 3]; NUM_LEGS], robot: &RobotConfig) -> [[f64; 3]; NUM_LEGS] {
    targets.map(|leg| std::array::from_fn(|j| leg[j].clamp(robot.joint_limits[j][0], robot.joint_limits[j][1])))
}

/// Body height at which the lowest foot of a level body just touches the
/// ground for the given joint angles.
pub fn standing_height(angles: &[[f64; 3]; NUM_LEGS], robot: &RobotConfig) -> f64 {
    (0..NUM_LEGS)
        .map(|leg| -leg_forward_kinematics(&angles[leg], leg, robot).z)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Runs one evaluation with phases drawn by [`initial_phases`].
pub fn run_evaluation(
    params: &ControllerParams,
    sim: &SimConfig,
    duration: f64,
    seed: u64,
) -> Result<EvalTrace> {
    run_evaluation_from(params, sim, duration, initial_phases(params, sim, seed))
}

/// Runs one evaluation from explicit initial joint-0 phases.
///
/// The body starts level and at rest with its lowest foot touching the
/// ground and joints at the controller's first targets. Control and physics
/// advance together at `settings.dt`; in closed loop each leg's force
/// magnitude from the previous step drives its phase.
pub fn run_evaluation_from(
    params: &ControllerParams,
    sim: &SimConfig,
    duration: f64,
    phases: [f64; NUM_LEGS],
) -> Result<EvalTrace> {
    if !(duration > 0.0) {
        return Err(Error::ParameterDomain {
            name: "duration",
            value: duration,
            domain: "(0, inf)",
        });
    }
    sim.validate()?;
    let robot = &sim.robot;
    let settings = &sim.settings;
    let dt = settings.dt;
    let steps = (duration / dt).round() as usize;
    let stride = settings.sample_stride();
    let closed = matches!(params.global.coupling, Coupling::ClosedLoop { .. });

    let mut net = CpgNetwork::new(params, phases)?;
    let angles = clamp_angles(net.joint_targets(), robot);
    let height = standing_height(&angles, robot);
    let mut state = RobotState::at_rest(Vector3::new(0.0, 0.0, height), angles);
    let fall_height = settings.fall_height_fraction * height;

    let mut samples = Vec::with_capacity(steps / stride + 2);
    samples.push(sample(0.0, &state, &net));
    let mut fell = false;

    for k in 0..steps {
        let grf = state.grf_magnitudes();
        net.step(closed.then_some(&grf), dt)?;
        let targets = net.joint_targets();

        let previous = state.joint_angles;
        let current: [[f64; 3]; NUM_LEGS] = std::array::from_fn(|leg| {
            std::array::from_fn(|j| {
                servo_step(previous[leg][j], targets[leg][j], robot.servo_tau, dt, robot.joint_limits[j])
            })
        });

        let rotation = state.orientation;
        let feet: [(Vector3<f64>, Vector3<f64>); NUM_LEGS] = std::array::from_fn(|leg| {
            let foot_body = leg_forward_kinematics(&current[leg], leg, robot);
            let foot_rate = (foot_body - leg_forward_kinematics(&previous[leg], leg, robot)) / dt;
            let foot_world = state.position + rotation * foot_body;
            let foot_vel = state.linear_velocity
                + rotation * (state.angular_velocity.cross(&foot_body) + foot_rate);
            (foot_world, foot_vel)
        });
        let grf = contact_forces(&feet, &state.position, &rotation, robot, &sim.ground, dt);
        let forces: [(Vector3<f64>, Vector3<f64>); NUM_LEGS] = std::array::from_fn(|leg| (feet[leg].0, grf[leg]));

        state.joint_angles = current;
        state.foot_forces = forces.map(|(_, f)| f);
        state = body_step(&state, &forces, robot, settings.gravity, dt).map_err(|e| match e {
            Error::Diverged { reason, .. } => Error::Diverged { step: k, reason },
            other => other,
        })?;

        let time = (k + 1) as f64 * dt;
        let falling = state.position.z < fall_height || state.up_angle() > settings.fall_angle;
        if (k + 1) % stride == 0 || falling {
            samples.push(sample(time, &state, &net));
        }
        if falling {
            fell = true;
            break;
        }
    }

    let p_start = samples[0].position;
    let p_end = samples.last().map(|s| s.position).unwrap_or(p_start);
    Ok(EvalTrace {
        samples,
        duration,
        sample_period: stride as f64 * dt,
        p_start,
        p_end,
        fell,
    })
}

fn sample(time: f64, state: &RobotState, net: &CpgNetwork) -> TraceSample {
    TraceSample {
        time,
        position: state.position.into(),
        up_angle: state.up_angle(),
        joint_angles: std::array::from_fn(|i| state.joint_angles[i / 3][i % 3]),
        grf: state.grf_magnitudes(),
        grf_vertical: state.foot_forces.map(|f| f.z),
        phases: net.base_phases(),
    }
}
