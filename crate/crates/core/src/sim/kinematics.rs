use nalgebra::{Rotation3, Vector3};

use super::config::RobotConfig;

/// Point-foot position of `leg` in the body frame.
///
/// Chain: hip mount, joint 0 (abduction about body Y), a downward segment,
/// joint 1 (pitch about body X), the thigh, joint 2 (pitch about body X),
/// the shank. All-zero angles give a straight leg hanging below the hip.
pub fn leg_forward_kinematics(angles: &[f64; 3], leg: usize, robot: &RobotConfig) -> Vector3<f64> {
    let signs = robot.joint_axis_signs[leg];
    let [l0, l1, l2] = robot.segment_lengths;
    let down = |l: f64| Vector3::new(0.0, 0.0, -l);

    let hip = Rotation3::from_axis_angle(&Vector3::y_axis(), signs[0] * angles[0]);
    let thigh = Rotation3::from_axis_angle(&Vector3::x_axis(), signs[1] * angles[1]);
    let knee = Rotation3::from_axis_angle(&Vector3::x_axis(), signs[2] * angles[2]);

    let mount = Vector3::from(robot.hip_mounts[leg]);
    mount + hip * (down(l0) + thigh * (down(l1) + knee * down(l2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_configuration_is_straight_down() {
        let robot = RobotConfig::default();
        for leg in 0..4 {
            let p = leg_forward_kinematics(&[0.0; 3], leg, &robot);
            let hip = Vector3::from(robot.hip_mounts[leg]);
            assert_abs_diff_eq!(p, hip + Vector3::new(0.0, 0.0, -0.46), epsilon = 1e-15);
        }
    }

    #[test]
    fn left_right_mirror() {
        let robot = RobotConfig::default();
        let q = [0.18, 0.7, 1.3];
        for (left, right) in [(0, 1), (2, 3)] {
            let l = leg_forward_kinematics(&q, left, &robot);
            let r = leg_forward_kinematics(&q, right, &robot);
            assert_abs_diff_eq!(l.x, -r.x, epsilon = 1e-15);
            assert_abs_diff_eq!(l.y, r.y, epsilon = 1e-15);
            assert_abs_diff_eq!(l.z, r.z, epsilon = 1e-15);
            // positive abduction moves the foot outward on both sides
            assert!(l.x < robot.hip_mounts[left][0]);
            assert!(r.x > robot.hip_mounts[right][0]);
        }
    }

    #[test]
    fn thigh_pitch_moves_knee_backward() {
        let robot = RobotConfig::default();
        let base = leg_forward_kinematics(&[0.0, 0.0, 0.0], 0, &robot);
        let pitched = leg_forward_kinematics(&[0.0, 0.3, 0.3], 0, &robot);
        // with the knee bent by the same amount the shank stays vertical
        assert!(pitched.y < base.y);
    }

    #[test]
    fn knee_sweep_raises_foot_monotonically() {
        let robot = RobotConfig::default();
        let q1 = 0.71;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=100 {
            let q2 = 0.85 + (1.55 + 0.7 - 0.85) * k as f64 / 100.0;
            let z = leg_forward_kinematics(&[0.18, q1, q2], 0, &robot).z;
            assert!(z > prev, "q2 = {q2}");
            prev = z;
        }
    }
}
