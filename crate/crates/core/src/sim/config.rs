use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cpg::NUM_LEGS;
use crate::error::{Error, Result};

/// Body and leg geometry. The body frame has +Y forward, +X to the right and
/// +Z up. Legs are ordered front-left, front-right, back-left, back-right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// kg
    pub mass: f64,
    /// Principal moments about the body X, Y, Z axes, kg m^2. Includes the
    /// lumped contribution of the (otherwise massless) legs.
    pub inertia: [f64; 3],
    /// Hip positions in the body frame, m.
    pub hip_mounts: [[f64; 3]; NUM_LEGS],
    /// Hip-to-knee-mount, thigh and shank lengths, m.
    pub segment_lengths: [f64; 3],
    /// Sign applied to each joint angle before it rotates its axis. Joint 0
    /// rotates about body Y (abduction), joints 1 and 2 about body X (pitch).
    /// Opposite joint-0 signs on left and right legs mirror the legs across
    /// the sagittal plane.
    pub joint_axis_signs: [[f64; 3]; NUM_LEGS],
    /// First-order servo time constant, s.
    pub servo_tau: f64,
    /// `[min, max]` per joint, rad.
    pub joint_limits: [[f64; 2]; 3],
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            mass: 5.0,
            inertia: [0.08, 0.05, 0.1],
            hip_mounts: [
                [-0.1, 0.2, 0.0],
                [0.1, 0.2, 0.0],
                [-0.1, -0.2, 0.0],
                [0.1, -0.2, 0.0],
            ],
            segment_lengths: [0.1, 0.18, 0.18],
            joint_axis_signs: [
                [1.0, -1.0, 1.0],
                [-1.0, -1.0, 1.0],
                [1.0, -1.0, 1.0],
                [-1.0, -1.0, 1.0],
            ],
            servo_tau: 0.05,
            joint_limits: [[-0.5, 0.5], [-0.5, 1.6], [0.0, 2.6]],
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("robot: {what}")));
        if !(self.mass > 0.0) {
            return bad("mass must be > 0");
        }
        if !self.inertia.iter().all(|&i| i > 0.0) {
            return bad("inertia entries must be > 0");
        }
        if !self.segment_lengths.iter().all(|&l| l > 0.0) {
            return bad("segment lengths must be > 0");
        }
        if !(self.servo_tau > 0.0) {
            return bad("servo_tau must be > 0");
        }
        if !self.joint_limits.iter().all(|[lo, hi]| lo <= hi) {
            return bad("joint limits must satisfy min <= max");
        }
        if !self
            .joint_axis_signs
            .iter()
            .flatten()
            .all(|s| *s == 1.0 || *s == -1.0)
        {
            return bad("joint axis signs must be +1 or -1");
        }
        Ok(())
    }
}

/// Spring-damper ground contact with a viscous friction cone.
///
/// Explicit integration of the normal spring stays stable while
/// `stiffness * dt^2 / (mass / 4)` is well below 1; the defaults give about
/// 0.016 at `dt = 2 ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundModel {
    /// N/m
    pub stiffness: f64,
    /// N s/m
    pub damping: f64,
    /// Coulomb coefficient bounding tangential force by `friction * normal`.
    pub friction: f64,
    /// N s/m, viscous gain opposing tangential foot velocity.
    pub tangential_damping: f64,
}

impl Default for GroundModel {
    fn default() -> Self {
        GroundModel {
            stiffness: 5000.0,
            damping: 100.0,
            friction: 0.8,
            tangential_damping: 400.0,
        }
    }
}

impl GroundModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness >= 0.0
            && self.damping >= 0.0
            && self.friction >= 0.0
            && self.tangential_damping >= 0.0)
        {
            return Err(Error::Config(
                "ground: stiffness, damping, friction and tangential_damping must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Stepping, sampling and termination settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    /// Physics and control step, s.
    pub dt: f64,
    /// Trace sampling rate, Hz.
    pub sample_rate: f64,
    /// Terminate when body height falls below this fraction of the
    /// initial standing height.
    pub fall_height_fraction: f64,
    /// Terminate when the body up-vector tilts beyond this angle, rad.
    pub fall_angle: f64,
    /// Half-width of the uniform perturbation added to the closed-loop
    /// initial phases, rad.
    pub initial_phase_perturbation: f64,
    /// m/s^2
    pub gravity: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            dt: 0.002,
            sample_rate: 100.0,
            fall_height_fraction: 0.25,
            fall_angle: std::f64::consts::FRAC_PI_2,
            initial_phase_perturbation: 0.05,
            gravity: 9.81,
        }
    }
}

impl SimSettings {
    /// Physics steps between trace samples.
    pub fn sample_stride(&self) -> usize {
        ((1.0 / (self.sample_rate * self.dt)).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.sample_rate > 0.0) {
            return Err(Error::Config("settings: dt and sample_rate must be > 0".into()));
        }
        if !(self.initial_phase_perturbation >= 0.0) {
            return Err(Error::Config(
                "settings: initial_phase_perturbation must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Everything the simulator needs besides the controller. Read from TOML:
///
/// ```toml
/// [robot]
/// mass = 5.0
/// [ground]
/// stiffness = 5000.0
/// [settings]
/// dt = 0.002
/// ```
///
/// Missing tables and keys fall back to their defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub robot: RobotConfig,
    pub ground: GroundModel,
    pub settings: SimSettings,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.ground.validate()?;
        self.settings.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("sim config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("sim config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = SimConfig::from_toml_str("[robot]\nmass = 7.5\n[ground]\nfriction = 0.5\n").unwrap();
        assert_eq!(cfg.robot.mass, 7.5);
        assert_eq!(cfg.ground.friction, 0.5);
        assert_eq!(cfg.ground.stiffness, 5000.0);
        assert_eq!(cfg.settings, SimSettings::default());
    }

    #[test]
    fn round_trip_and_validation() {
        let cfg = SimConfig::default();
        assert_eq!(SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        assert!(SimConfig::from_toml_str("[robot]\nmass = 0.0\n").is_err());
        assert!(SimConfig::from_toml_str("[ground]\ndamping = -1.0\n").is_err());
        assert!(SimConfig::from_toml_str("[robot]\nmas = 1.0\n").is_err());
    }

    #[test]
    fn default_contact_is_stiffness_stable() {
        let cfg = SimConfig::default();
        let ratio = cfg.ground.stiffness * cfg.settings.dt.powi(2) / (cfg.robot.mass / 4.0);
        assert!(ratio < 0.05, "{ratio}");
        assert_eq!(cfg.settings.sample_stride(), 5);
    }
}
