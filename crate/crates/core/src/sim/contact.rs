use nalgebra::{Matrix3, SMatrix, SVector, UnitQuaternion, Vector3};

use super::config::{GroundModel, RobotConfig};

/// Ground reaction force on a point foot against the plane `z = 0`.
///
/// The normal component is a one-sided spring-damper; the tangential
/// component is viscous and clamped to the Coulomb cone.
pub fn contact_force(foot_pos: &Vector3<f64>, foot_vel: &Vector3<f64>, ground: &GroundModel) -> Vector3<f64> {
    let normal = normal_force(foot_pos, foot_vel, ground);
    if normal == 0.0 {
        return Vector3::zeros();
    }
    let tangential = Vector3::new(foot_vel.x, foot_vel.y, 0.0) * -ground.tangential_damping;
    clamp_to_cone(tangential, normal, ground.friction)
}

fn normal_force(foot_pos: &Vector3<f64>, foot_vel: &Vector3<f64>, ground: &GroundModel) -> f64 {
    if foot_pos.z >= 0.0 {
        return 0.0;
    }
    (ground.stiffness * -foot_pos.z + ground.damping * -foot_vel.z).max(0.0)
}

fn clamp_to_cone(tangential: Vector3<f64>, normal: f64, friction: f64) -> Vector3<f64> {
    let limit = friction * normal;
    let magnitude = tangential.norm();
    let t = if magnitude > limit { tangential * (limit / magnitude) } else { tangential };
    Vector3::new(t.x, t.y, normal)
}

/// Contact forces for all four feet of one rigid body.
///
/// The viscous tangential term is integrated implicitly: the damper acts on
/// the foot velocities at the end of the step, found by solving the coupled
/// system through the body's mass and inertia. An explicit damper between
/// feet far below a light body oscillates at `dt = 2 ms` and lets the body
/// ratchet across the ground. `feet` holds world positions and velocities,
/// `orientation` and `com` describe the body.
pub fn contact_forces(
    feet: &[(Vector3<f64>, Vector3<f64>); 4],
    com: &Vector3<f64>,
    orientation: &UnitQuaternion<f64>,
    robot: &RobotConfig,
    ground: &GroundModel,
    dt: f64,
) -> [Vector3<f64>; 4] {
    let normals = feet.map(|(p, v)| normal_force(&p, &v, ground));
    let mut a = SMatrix::<f64, 8, 8>::identity();
    let mut rhs = SVector::<f64, 8>::zeros();
    let rot = orientation.to_rotation_matrix();
    let inv_inertia = rot * Matrix3::from_diagonal(&Vector3::from(robot.inertia).map(|i| 1.0 / i)) * rot.transpose();
    let arms = feet.map(|(p, _)| (p - com).cross_matrix());
    let gain = ground.tangential_damping * dt;
    for i in 0..4 {
        if normals[i] == 0.0 {
            continue;
        }
        rhs[2 * i] = feet[i].1.x;
        rhs[2 * i + 1] = feet[i].1.y;
        for j in 0..4 {
            if normals[j] == 0.0 {
                continue;
            }
            // foot i velocity change per unit impulse at foot j
            let k = Matrix3::identity() / robot.mass - arms[i] * inv_inertia * arms[j];
            for r in 0..2 {
                for c in 0..2 {
                    a[(2 * i + r, 2 * j + c)] += gain * k[(r, c)];
                }
            }
        }
    }
    let slip = a.lu().solve(&rhs).unwrap_or(rhs);
    std::array::from_fn(|i| {
        if normals[i] == 0.0 {
            return Vector3::zeros();
        }
        let t = Vector3::new(slip[2 * i], slip[2 * i + 1], 0.0) * -ground.tangential_damping;
        clamp_to_cone(t, normals[i], ground.friction)
    })
}

/// First-order lag of a servo toward `target`, clamped to `[lo, hi]`.
pub fn servo_step(actual: f64, target: f64, tau: f64, dt: f64, limits: [f64; 2]) -> f64 {
    let next = actual + (target - actual) * -(-dt / tau).exp_m1();
    next.clamp(limits[0], limits[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn airborne_foot_has_no_force() {
        let g = GroundModel::default();
        let f = contact_force(&Vector3::new(0.0, 0.0, 0.01), &Vector3::new(1.0, 0.0, -1.0), &g);
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn static_penetration_is_pure_spring() {
        let g = GroundModel::default();
        let f = contact_force(&Vector3::new(0.3, 0.1, -0.002), &Vector3::zeros(), &g);
        assert_abs_diff_eq!(f, Vector3::new(0.0, 0.0, 10.0), epsilon = 1e-12);
    }

    #[test]
    fn separating_foot_never_pulls() {
        let g = GroundModel::default();
        let f = contact_force(&Vector3::new(0.0, 0.0, -0.001), &Vector3::new(0.0, 0.0, 1.0), &g);
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn sliding_is_clamped_to_cone() {
        let g = GroundModel::default();
        let f = contact_force(&Vector3::new(0.0, 0.0, -0.002), &Vector3::new(3.0, -4.0, 0.0), &g);
        let t = (f.x * f.x + f.y * f.y).sqrt();
        assert_abs_diff_eq!(t, g.friction * f.z, epsilon = 1e-12);
        // opposes the sliding direction
        assert!(f.x < 0.0 && f.y > 0.0);
    }

    fn four_feet(z: f64, v: Vector3<f64>) -> [(Vector3<f64>, Vector3<f64>); 4] {
        [(0.2, 0.1), (0.2, -0.1), (-0.2, 0.1), (-0.2, -0.1)].map(|(x, y)| (Vector3::new(x, y, z), v))
    }

    #[test]
    fn implicit_damping_under_pure_translation() {
        // with negligible rotation every foot shares the body's velocity change,
        // so backward Euler gives u+ = u / (1 + 4 c dt / m)
        let robot = RobotConfig {
            inertia: [1e12; 3],
            ..RobotConfig::default()
        };
        let ground = GroundModel {
            friction: 1e3,
            ..GroundModel::default()
        };
        let dt = 0.002;
        let v = Vector3::new(0.03, -0.01, 0.0);
        let f = contact_forces(&four_feet(-0.002, v), &Vector3::new(0.0, 0.0, 0.4), &UnitQuaternion::identity(), &robot, &ground, dt);
        let c = ground.tangential_damping;
        let expected = -v * c / (1.0 + 4.0 * c * dt / robot.mass);
        for fi in f {
            assert_abs_diff_eq!(fi.x, expected.x, epsilon = 1e-9);
            assert_abs_diff_eq!(fi.y, expected.y, epsilon = 1e-9);
            assert_abs_diff_eq!(fi.z, 10.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn implicit_forces_respect_contact_and_cone() {
        let robot = RobotConfig::default();
        let ground = GroundModel::default();
        let com = Vector3::new(0.0, 0.0, 0.4);
        let q = UnitQuaternion::from_euler_angles(0.1, -0.05, 0.3);
        let airborne = contact_forces(&four_feet(0.01, Vector3::new(1.0, 1.0, 0.0)), &com, &q, &robot, &ground, 0.002);
        assert!(airborne.iter().all(|f| *f == Vector3::zeros()));

        let mut feet = four_feet(-0.001, Vector3::new(2.0, -1.0, -0.1));
        feet[3].0.z = 0.02;
        let f = contact_forces(&feet, &com, &q, &robot, &ground, 0.002);
        assert_eq!(f[3], Vector3::zeros());
        for (fi, (p, v)) in f.iter().zip(&feet).take(3) {
            assert!(fi.x.hypot(fi.y) <= ground.friction * fi.z + 1e-12);
            assert_abs_diff_eq!(fi.z, contact_force(p, v, &ground).z, epsilon = 1e-12);
            // never stronger than the explicit damper
            assert!(fi.x.hypot(fi.y) <= contact_force(p, v, &ground).xy().norm() + 1e-12);
        }
    }

    #[test]
    fn servo_behaviour() {
        let limits = [-1.0, 1.0];
        assert_eq!(servo_step(0.4, 0.4, 0.05, 0.002, limits), 0.4);
        let mut x = 0.0;
        for _ in 0..25 {
            x = servo_step(x, 0.5, 0.05, 0.002, limits);
        }
        assert_abs_diff_eq!(x, 0.5 * (1.0 - (-1.0f64).exp()), epsilon = 1e-12);
        let mut y = 0.9;
        for _ in 0..1000 {
            y = servo_step(y, 2.0, 0.05, 0.002, limits);
        }
        assert_eq!(y, 1.0);
    }
}
