//! Central pattern generator: one three-joint oscillator chain per leg.
//!
//! Each leg carries three oscillators. Joints 0 and 1 produce
//! `a * cos(F_L(phase)) + o`; joint 2 produces a two-bump swing/stance
//! waveform whose amplitude switches between the two halves of the warped
//! cycle. Amplitudes and offsets relax toward their targets with gain `gamma`.
//!
//! Only the joint-0 phase of each leg is integrated. Joints 1 and 2 are tied
//! to it by a fixed phase shift. Inter-leg coordination comes either from
//! explicit all-to-all phase coupling (open loop) or from local ground
//! reaction force feedback on each leg (closed loop).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;
pub const NUM_LEGS: usize = 4;
pub const JOINTS_PER_LEG: usize = 3;

/// Which inter-leg coordination rule drives the base phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Explicit all-to-all phase coupling, no sensing.
    OpenLoop,
    /// Per-leg ground reaction force feedback, no explicit coupling.
    ClosedLoop,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::OpenLoop => "open_loop",
            Mode::ClosedLoop => "closed_loop",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "open_loop" | "open" => Ok(Mode::OpenLoop),
            "closed_loop" | "closed" => Ok(Mode::ClosedLoop),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// State of a single oscillator.
///
/// `swing_amp` and `stance_amp` are only read for joint 2; joints 0 and 1
/// use `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OscillatorState {
    /// Unbounded phase accumulator in radians.
    pub phase: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub swing_amp: f64,
    pub stance_amp: f64,
}

/// Per-leg targets the oscillators relax toward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegParams {
    /// Target amplitude for joints 0 and 1.
    pub target_amp: [f64; 2],
    /// Target offset for joints 0, 1 and 2.
    pub target_offset: [f64; 3],
    /// Joint-2 amplitude used while the warped phase is in `[0, pi)`.
    pub target_swing: f64,
    /// Joint-2 amplitude used while the warped phase is in `[pi, 2pi)`.
    pub target_stance: f64,
    /// Phase shift of joint 1 relative to joint 0, and of joint 2 relative to joint 1.
    pub phase_shift: [f64; 2],
}

/// Inter-leg coordination settings. Exactly one rule is active per mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Coupling {
    OpenLoop {
        /// Shared coupling weight `w` for every leg pair.
        strength: f64,
        /// Desired phase of each leg as a fraction of a cycle.
        leg_phases: [f64; NUM_LEGS],
    },
    ClosedLoop {
        /// Attraction coefficient scaling the force feedback.
        attraction: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    /// Oscillator frequency in Hz.
    pub frequency: f64,
    /// Relaxation gain in 1/s.
    pub gain: f64,
    /// Duty parameter of the phase warp, strictly inside (0, 1).
    pub duty: f64,
    pub coupling: Coupling,
}

impl GlobalParams {
    pub fn mode(&self) -> Mode {
        match self.coupling {
            Coupling::OpenLoop { .. } => Mode::OpenLoop,
            Coupling::ClosedLoop { .. } => Mode::ClosedLoop,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_duty(self.duty)?;
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(domain("gain", self.gain, "(0, inf)"));
        }
        if !(self.frequency >= 0.0 && self.frequency.is_finite()) {
            return Err(domain("frequency", self.frequency, "[0, inf)"));
        }
        match self.coupling {
            Coupling::OpenLoop { strength, .. } if !(strength >= 0.0) => {
                Err(domain("coupling_strength", strength, "[0, inf)"))
            }
            Coupling::ClosedLoop { attraction } if !(attraction >= 0.0) => {
                Err(domain("attraction", attraction, "[0, inf)"))
            }
            _ => Ok(()),
        }
    }
}

/// Fully decoded controller: global settings plus one parameter set per leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub global: GlobalParams,
    pub legs: [LegParams; NUM_LEGS],
}

impl ControllerParams {
    pub fn mode(&self) -> Mode {
        self.global.mode()
    }
}

fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::ParameterDomain {
        name,
        value,
        domain,
    }
}

fn check_duty(duty: f64) -> Result<()> {
    if duty > 0.0 && duty < 1.0 {
        Ok(())
    } else {
        Err(domain("duty", duty, "(0, 1)"))
    }
}

/// Wraps a phase into `[0, 2pi)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TWO_PI);
    // rem_euclid rounds tiny negative inputs up to exactly 2pi
    if wrapped >= TWO_PI {
        0.0
    } else {
        wrapped
    }
}

fn warp(phi: f64, duty: f64) -> f64 {
    let p = wrap_phase(phi);
    let split = TWO_PI * duty;
    if p < split {
        p / (2.0 * duty)
    } else {
        // Same line as (p + 2pi(1 - 2d)) / (2(1 - d)), anchored at (2pi d, pi)
        // so the breakpoint lands on pi exactly.
        PI + (p - split) / (2.0 * (1.0 - duty))
    }
}

/// Piecewise-linear phase warp `F_L`: maps `[0, 2pi d)` onto `[0, pi)` and
/// `[2pi d, 2pi)` onto `[pi, 2pi)`.
pub fn phase_warp(phi: f64, duty: f64) -> Result<f64> {
    check_duty(duty)?;
    Ok(warp(phi, duty))
}

/// The cubic bump `F_Gamma` as a function of the normalised half-cycle
/// position `phi_n` in `[0, 1)`. Rises 0 -> 1 over `[0, 0.5)` and falls back
/// to 0 over `[0.5, 1)`, with zero slope at 0, 0.5 and 1.
pub fn wave_from_normalized(phi_n: f64) -> f64 {
    if phi_n < 0.5 {
        -16.0 * phi_n.powi(3) + 12.0 * phi_n.powi(2)
    } else {
        let x = phi_n - 0.5;
        16.0 * x.powi(3) - 12.0 * x.powi(2) + 1.0
    }
}

fn normalized_half_phase(warped: f64) -> f64 {
    2.0 * (warped / TWO_PI).rem_euclid(0.5)
}

/// Swing/stance waveform `F_Gamma(phi)` in `[0, 1]`; one bump per half of the
/// warped cycle.
pub fn swing_stance_wave(phi: f64, duty: f64) -> Result<f64> {
    let warped = phase_warp(phi, duty)?;
    Ok(wave_from_normalized(normalized_half_phase(warped)))
}

/// One step of `x' = gamma (mu - x)`.
///
/// The linear relaxation is advanced with its exact exponential update, so
/// the discrete trajectory coincides with the closed form at every step and
/// `x = mu` is a fixed point bit for bit.
pub fn relax_step(x: f64, mu: f64, gamma: f64, dt: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(domain("gamma", gamma, "(0, inf)"));
    }
    if !(dt > 0.0) {
        return Err(domain("dt", dt, "(0, inf)"));
    }
    Ok(relax(x, mu, gamma, dt))
}

fn relax(x: f64, mu: f64, gamma: f64, dt: f64) -> f64 {
    x + (mu - x) * -(-gamma * dt).exp_m1()
}

/// Open-loop base phase update with all-to-all sinusoidal coupling.
///
/// The target difference for pair (i, j) is `2pi (desired[j] - desired[i])`.
pub fn phase_step_open(
    phases: &[f64; NUM_LEGS],
    omega: f64,
    strength: f64,
    desired: &[f64; NUM_LEGS],
    dt: f64,
) -> [f64; NUM_LEGS] {
    let base = TWO_PI * omega;
    std::array::from_fn(|i| {
        let coupling: f64 = (0..NUM_LEGS)
            .filter(|&j| j != i)
            .map(|j| {
                let target = TWO_PI * (desired[j] - desired[i]);
                strength * (phases[j] - phases[i] - target).sin()
            })
            .sum();
        phases[i] + (base + coupling) * dt
    })
}

/// Closed-loop base phase update for one leg: `phi' = 2pi omega - alpha N cos(phi)`.
pub fn phase_step_closed(phase: f64, omega: f64, alpha: f64, grf: f64, dt: f64) -> Result<f64> {
    if !(grf >= 0.0) || !grf.is_finite() {
        return Err(Error::SensorDomain {
            leg: 0,
            value: grf,
        });
    }
    Ok(closed_step(phase, omega, alpha, grf, dt))
}

fn closed_step(phase: f64, omega: f64, alpha: f64, grf: f64, dt: f64) -> f64 {
    phase + (TWO_PI * omega - alpha * grf * phase.cos()) * dt
}

/// Joint angle targets for one leg.
pub fn joint_targets(leg: &[OscillatorState; JOINTS_PER_LEG], duty: f64) -> Result<[f64; 3]> {
    check_duty(duty)?;
    Ok(leg_targets(leg, duty))
}

fn leg_targets(leg: &[OscillatorState; JOINTS_PER_LEG], duty: f64) -> [f64; 3] {
    let cosine = |s: &OscillatorState| s.amplitude * warp(s.phase, duty).cos() + s.offset;
    let knee = &leg[2];
    let warped = warp(knee.phase, duty);
    let amp = if warped < PI {
        knee.swing_amp
    } else {
        knee.stance_amp
    };
    let knee_angle = amp * wave_from_normalized(normalized_half_phase(warped)) + knee.offset;
    [cosine(&leg[0]), cosine(&leg[1]), knee_angle]
}

/// The full four-leg oscillator network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpgNetwork {
    pub legs: [[OscillatorState; JOINTS_PER_LEG]; NUM_LEGS],
    pub global: GlobalParams,
    pub leg_params: [LegParams; NUM_LEGS],
}

impl CpgNetwork {
    /// Builds a network whose amplitudes and offsets start at their targets
    /// and whose base phases start at `initial_phases`.
    pub fn new(params: &ControllerParams, initial_phases: [f64; NUM_LEGS]) -> Result<Self> {
        params.global.validate()?;
        let legs = std::array::from_fn(|leg| {
            let p = &params.legs[leg];
            std::array::from_fn(|joint| OscillatorState {
                phase: 0.0,
                amplitude: if joint < 2 { p.target_amp[joint] } else { 0.0 },
                offset: p.target_offset[joint],
                swing_amp: if joint == 2 { p.target_swing } else { 0.0 },
                stance_amp: if joint == 2 { p.target_stance } else { 0.0 },
            })
        });
        Self::with_states(params, legs, initial_phases)
    }

    /// Builds a network from explicit oscillator states. Joint 1 and 2 phases
    /// are overwritten from the base phases.
    pub fn with_states(
        params: &ControllerParams,
        legs: [[OscillatorState; JOINTS_PER_LEG]; NUM_LEGS],
        initial_phases: [f64; NUM_LEGS],
    ) -> Result<Self> {
        params.global.validate()?;
        let mut net = CpgNetwork {
            legs,
            global: params.global,
            leg_params: params.legs,
        };
        for (leg, &phase) in initial_phases.iter().enumerate() {
            net.legs[leg][0].phase = phase;
        }
        net.sync_intra_leg_phases();
        Ok(net)
    }

    pub fn mode(&self) -> Mode {
        self.global.mode()
    }

    pub fn base_phases(&self) -> [f64; NUM_LEGS] {
        std::array::from_fn(|leg| self.legs[leg][0].phase)
    }

    fn sync_intra_leg_phases(&mut self) {
        for (states, params) in self.legs.iter_mut().zip(&self.leg_params) {
            states[1].phase = states[0].phase + params.phase_shift[0];
            states[2].phase = states[1].phase + params.phase_shift[1];
        }
    }

    /// Advances the network by `dt` in place. `grf` holds the per-leg force
    /// magnitudes and must be present exactly when the network is closed loop.
    pub fn step(&mut self, grf: Option<&[f64; NUM_LEGS]>, dt: f64) -> Result<()> {
        let omega = self.global.frequency;
        let new_phases = match (self.global.coupling, grf) {
            (
                Coupling::OpenLoop {
                    strength,
                    leg_phases,
                },
                None,
            ) => phase_step_open(&self.base_phases(), omega, strength, &leg_phases, dt),
            (Coupling::ClosedLoop { attraction }, Some(forces)) => {
                if let Some((leg, &value)) = forces
                    .iter()
                    .enumerate()
                    .find(|(_, f)| !(**f >= 0.0) || !f.is_finite())
                {
                    return Err(Error::SensorDomain { leg, value });
                }
                let phases = self.base_phases();
                std::array::from_fn(|leg| {
                    closed_step(phases[leg], omega, attraction, forces[leg], dt)
                })
            }
            (Coupling::OpenLoop { .. }, Some(_)) => {
                return Err(Error::Config(
                    "open-loop network does not take force feedback".into(),
                ))
            }
            (Coupling::ClosedLoop { .. }, None) => {
                return Err(Error::Config(
                    "closed-loop network requires force feedback".into(),
                ))
            }
        };
        if !(dt >= 0.0) {
            return Err(domain("dt", dt, "[0, inf)"));
        }
        if dt == 0.0 {
            return Ok(());
        }

        for (leg, phase) in new_phases.into_iter().enumerate() {
            self.legs[leg][0].phase = phase;
        }
        self.sync_intra_leg_phases();

        let gamma = self.global.gain;
        for (states, p) in self.legs.iter_mut().zip(&self.leg_params) {
            for (joint, s) in states.iter_mut().enumerate() {
                s.offset = relax(s.offset, p.target_offset[joint], gamma, dt);
                if joint < 2 {
                    s.amplitude = relax(s.amplitude, p.target_amp[joint], gamma, dt);
                } else {
                    s.swing_amp = relax(s.swing_amp, p.target_swing, gamma, dt);
                    s.stance_amp = relax(s.stance_amp, p.target_stance, gamma, dt);
                }
            }
        }
        Ok(())
    }

    /// Current joint-angle targets, indexed `[leg][joint]`.
    pub fn joint_targets(&self) -> [[f64; JOINTS_PER_LEG]; NUM_LEGS] {
        std::array::from_fn(|leg| leg_targets(&self.legs[leg], self.global.duty))
    }
}

/// Pure form of [`CpgNetwork::step`].
pub fn network_step(
    net: &CpgNetwork,
    grf: Option<&[f64; NUM_LEGS]>,
    dt: f64,
) -> Result<CpgNetwork> {
    let mut next = net.clone();
    next.step(grf, dt)?;
    Ok(next)
}

/// `1 - |mean resultant vector|` of a set of phases: 0 when all coincide.
pub fn circular_spread(phases: &[f64]) -> f64 {
    if phases.is_empty() {
        return 0.0;
    }
    let n = phases.len() as f64;
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), p| (s + p.sin(), c + p.cos()));
    1.0 - (s * s + c * c).sqrt() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn leg(amp: f64, offset: f64) -> LegParams {
        LegParams {
            target_amp: [amp, amp],
            target_offset: [offset; 3],
            target_swing: amp,
            target_stance: amp,
            phase_shift: [0.0, 0.0],
        }
    }

    fn params(coupling: Coupling) -> ControllerParams {
        ControllerParams {
            global: GlobalParams {
                frequency: 0.25,
                gain: 0.4,
                duty: 0.5,
                coupling,
            },
            legs: [leg(0.2, 0.5); NUM_LEGS],
        }
    }

    #[test]
    fn warp_first_branch_quarter_duty() {
        assert_abs_diff_eq!(phase_warp(PI / 4.0, 0.25).unwrap(), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn warp_zero_is_zero() {
        for d in [0.05, 0.2, 0.5, 0.8, 0.95] {
            assert_eq!(phase_warp(0.0, d).unwrap(), 0.0);
        }
    }

    #[test]
    fn warp_is_identity_at_half_duty() {
        for k in 0..4000 {
            let phi = 4.0 * PI * k as f64 / 4000.0;
            let got = phase_warp(phi, 0.5).unwrap();
            assert_abs_diff_eq!(got, wrap_phase(phi), epsilon = 1e-12);
        }
    }

    #[test]
    fn warp_rejects_bad_duty() {
        for d in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                phase_warp(1.0, d),
                Err(Error::ParameterDomain { name: "duty", .. })
            ));
        }
    }

    #[test]
    fn warp_output_in_range_for_negative_phase() {
        let v = phase_warp(-1e-18, 0.3).unwrap();
        assert!((0.0..TWO_PI).contains(&v));
    }

    #[test]
    fn wave_hand_values() {
        assert_eq!(wave_from_normalized(0.0), 0.0);
        assert_abs_diff_eq!(wave_from_normalized(0.25), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wave_from_normalized(0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wave_from_normalized(1.0 - 1e-9), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wave_through_warp() {
        // phi_n = 0.25 at warped phase pi/4 (d = 0.5 makes the warp the identity)
        assert_abs_diff_eq!(swing_stance_wave(PI / 4.0, 0.5).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(swing_stance_wave(PI / 2.0, 0.5).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(swing_stance_wave(PI, 0.5).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn relax_fixed_point_and_errors() {
        assert_eq!(relax_step(0.3, 0.3, 0.5, 0.002).unwrap(), 0.3);
        assert!(relax_step(0.0, 1.0, 0.0, 0.002).is_err());
        assert!(relax_step(0.0, 1.0, 0.5, 0.0).is_err());
        assert!(relax_step(0.0, 1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn relax_matches_closed_form_at_two_seconds() {
        let mut x = 0.0;
        for _ in 0..1000 {
            x = relax_step(x, 1.0, 0.5, 0.002).unwrap();
        }
        assert_abs_diff_eq!(x, 1.0 - (-1.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn relax_small_step_first_order() {
        let x = relax_step(0.7, 0.2, 0.5, 1e-9).unwrap();
        assert_abs_diff_eq!(x, 0.7 + 0.5 * (0.2 - 0.7) * 1e-9, epsilon = 1e-16);
    }

    #[test]
    fn open_step_without_coupling_is_uniform() {
        let phases = [0.1, 2.0, -3.0, 7.0];
        let desired = [0.0, 0.5, 0.25, 0.75];
        let next = phase_step_open(&phases, 0.25, 0.0, &desired, 0.002);
        for i in 0..4 {
            assert_eq!(next[i], phases[i] + TWO_PI * 0.25 * 0.002);
        }
    }

    #[test]
    fn open_step_at_targets_is_uniform() {
        let desired = [0.0, 0.5, 0.25, 0.75];
        let phases = desired.map(|f| 1.0 + TWO_PI * f);
        let next = phase_step_open(&phases, 0.25, 1.5, &desired, 0.002);
        for i in 0..4 {
            assert_abs_diff_eq!(next[i] - phases[i], TWO_PI * 0.25 * 0.002, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_step_reductions() {
        let dt = 0.002;
        let free = TWO_PI * 0.25 * dt;
        assert_eq!(phase_step_closed(1.3, 0.25, 0.05, 0.0, dt).unwrap(), 1.3 + free);
        let quarter = phase_step_closed(PI / 2.0, 0.25, 0.05, 30.0, dt).unwrap() - PI / 2.0;
        assert_abs_diff_eq!(quarter, free, epsilon = 1e-15);
        let slowed = phase_step_closed(0.0, 0.25, 0.05, 10.0, dt).unwrap();
        assert!(slowed < free);
        assert!(matches!(
            phase_step_closed(0.0, 0.25, 0.05, -1.0, dt),
            Err(Error::SensorDomain { .. })
        ));
    }

    #[test]
    fn targets_constant_joint() {
        let s = OscillatorState {
            phase: 1.234,
            amplitude: 0.0,
            offset: 0.18,
            ..Default::default()
        };
        let t = joint_targets(&[s, s, s], 0.4).unwrap();
        assert_eq!(t[0], 0.18);
        assert_eq!(t[1], 0.18);
    }

    #[test]
    fn targets_cosine_peak() {
        let s = OscillatorState {
            phase: 0.0,
            amplitude: 1.0,
            offset: 0.0,
            ..Default::default()
        };
        assert_eq!(joint_targets(&[s, s, s], 0.3).unwrap()[0], 1.0);
    }

    #[test]
    fn knee_amplitude_switches_per_half() {
        let mut max_first: f64 = 0.0;
        let mut max_second: f64 = 0.0;
        for k in 0..10_000 {
            let phi = TWO_PI * k as f64 / 10_000.0;
            let knee = OscillatorState {
                phase: phi,
                offset: 0.0,
                swing_amp: 1.0,
                stance_amp: 0.5,
                ..Default::default()
            };
            let theta = joint_targets(&[knee, knee, knee], 0.5).unwrap()[2];
            if phi < PI {
                max_first = max_first.max(theta);
            } else {
                max_second = max_second.max(theta);
            }
        }
        assert_abs_diff_eq!(max_first, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(max_second, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn network_grf_mode_mismatch() {
        let mut open = CpgNetwork::new(
            &params(Coupling::OpenLoop {
                strength: 1.0,
                leg_phases: [0.0, 0.5, 0.25, 0.75],
            }),
            [0.0; 4],
        )
        .unwrap();
        assert!(matches!(open.step(Some(&[0.0; 4]), 0.002), Err(Error::Config(_))));
        let mut closed =
            CpgNetwork::new(&params(Coupling::ClosedLoop { attraction: 0.05 }), [0.0; 4]).unwrap();
        assert!(matches!(closed.step(None, 0.002), Err(Error::Config(_))));
        assert!(matches!(
            closed.step(Some(&[1.0, 2.0, -0.5, 1.0]), 0.002),
            Err(Error::SensorDomain { leg: 2, .. })
        ));
    }

    #[test]
    fn network_zero_dt_is_identity() {
        let net = CpgNetwork::new(&params(Coupling::ClosedLoop { attraction: 0.05 }), [0.3, 1.0, 2.0, 3.0])
            .unwrap();
        let next = network_step(&net, Some(&[5.0; 4]), 0.0).unwrap();
        assert_eq!(net, next);
    }

    #[test]
    fn network_intra_leg_phases_are_algebraic() {
        let mut p = params(Coupling::ClosedLoop { attraction: 0.05 });
        for leg in &mut p.legs {
            leg.phase_shift = [0.3, -0.2];
        }
        let mut net = CpgNetwork::new(&p, [0.0, 0.1, 0.2, 0.3]).unwrap();
        for k in 0..1000 {
            net.step(Some(&[k as f64 % 7.0; 4]), 0.002).unwrap();
            for leg in &net.legs {
                assert_eq!(leg[1].phase, leg[0].phase + 0.3);
                assert_eq!(leg[2].phase, leg[1].phase - 0.2);
            }
        }
    }

    #[test]
    fn network_relaxes_to_targets() {
        // Midpoints of the evolved ranges; states start at zero.
        let p = ControllerParams {
            global: GlobalParams {
                frequency: 0.25,
                gain: 0.4,
                duty: 0.5,
                coupling: Coupling::OpenLoop {
                    strength: 1.05,
                    leg_phases: [0.0, 0.5, 0.25, 0.75],
                },
            },
            legs: [LegParams {
                target_amp: [0.0, 0.15],
                target_offset: [0.18, 0.71, 1.2],
                target_swing: 0.35,
                target_stance: 0.35,
                phase_shift: [0.0, 0.0],
            }; 4],
        };
        let zero = [[OscillatorState::default(); 3]; 4];
        let mut net = CpgNetwork::with_states(&p, zero, [0.0; 4]).unwrap();
        for _ in 0..10_000 {
            net.step(None, 0.002).unwrap();
        }
        for (states, lp) in net.legs.iter().zip(&p.legs) {
            for (j, s) in states.iter().enumerate() {
                let close = |x: f64, mu: f64| (x - mu).abs() <= 0.01 * mu.abs();
                assert!(close(s.offset, lp.target_offset[j]));
                if j < 2 {
                    assert!(close(s.amplitude, lp.target_amp[j]) || lp.target_amp[j] == 0.0);
                } else {
                    assert!(close(s.swing_amp, lp.target_swing));
                    assert!(close(s.stance_amp, lp.target_stance));
                }
            }
        }
    }

    #[test]
    fn closed_without_force_equals_uncoupled_open() {
        let init = [0.01, -0.02, 0.03, 0.0];
        let mut closed =
            CpgNetwork::new(&params(Coupling::ClosedLoop { attraction: 0.08 }), init).unwrap();
        let mut open = CpgNetwork::new(
            &params(Coupling::OpenLoop {
                strength: 0.0,
                leg_phases: [0.0, 0.5, 0.25, 0.75],
            }),
            init,
        )
        .unwrap();
        for _ in 0..5000 {
            closed.step(Some(&[0.0; 4]), 0.002).unwrap();
            open.step(None, 0.002).unwrap();
            assert_eq!(closed.legs, open.legs);
            assert_eq!(closed.joint_targets(), open.joint_targets());
        }
    }

    #[test]
    fn spread_extremes() {
        assert_abs_diff_eq!(circular_spread(&[1.0; 4]), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(circular_spread(&[0.0, PI / 2.0, PI, 1.5 * PI]), 1.0, epsilon = 1e-15);
    }
}
