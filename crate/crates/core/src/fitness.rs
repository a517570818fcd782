//! Distance and stability scores of an evaluation trace.
//!
//! `composite = distance * (1 + stability)` where `distance` is the signed
//! straight-line displacement over the evaluation and `stability` falls
//! linearly from 1 at zero body tilt to 0 at `angle_max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::EvalTrace;

/// Default tilt at which stability reaches zero, rad.
pub const DEFAULT_ANGLE_MAX: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessSettings {
    /// Direction sign applied to the displacement magnitude: +1 or -1.
    pub dir: f64,
    pub angle_max: f64,
}

impl Default for FitnessSettings {
    fn default() -> Self {
        FitnessSettings {
            dir: 1.0,
            angle_max: DEFAULT_ANGLE_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    #[serde(with = "nan_as_null")]
    pub composite: f64,
    #[serde(with = "nan_as_null")]
    pub distance: f64,
    pub stability: f64,
    #[serde(with = "nan_as_null")]
    pub distance_last_half: f64,
    #[serde(with = "nan_as_null")]
    pub max_angle: f64,
    pub fell: bool,
}

/// JSON has no NaN; failed evaluations store `null` instead.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl FitnessRecord {
    /// Record used for an evaluation that could not be completed. Ranks
    /// below every finite fitness.
    pub fn failed() -> Self {
        FitnessRecord {
            composite: f64::NAN,
            distance: f64::NAN,
            stability: 0.0,
            distance_last_half: f64::NAN,
            max_angle: f64::NAN,
            fell: true,
        }
    }
}

fn horizontal_norm(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn non_empty(trace: &EvalTrace) -> Result<()> {
    if trace.is_empty() {
        Err(Error::InvalidTrace("trace has no samples".into()))
    } else {
        Ok(())
    }
}

/// `dir * |P_end - P_start|` over the ground plane.
pub fn distance_fitness(trace: &EvalTrace, dir: f64) -> Result<f64> {
    non_empty(trace)?;
    Ok(dir * horizontal_norm(&trace.p_start, &trace.p_end))
}

/// Stability term from the peak tilt `max_angle`.
pub fn stability_from_angle(max_angle: f64, angle_max: f64) -> f64 {
    if max_angle < angle_max {
        1.0 - max_angle / angle_max
    } else {
        0.0
    }
}

pub fn stability_fitness(trace: &EvalTrace, angle_max: f64) -> Result<f64> {
    non_empty(trace)?;
    if !(angle_max > 0.0) {
        return Err(Error::ParameterDomain {
            name: "angle_max",
            value: angle_max,
            domain: "(0, inf)",
        });
    }
    if trace.fell {
        return Ok(0.0);
    }
    Ok(stability_from_angle(trace.max_up_angle(), angle_max))
}

pub fn composite_fitness(distance: f64, stability: f64) -> f64 {
    distance * (1.0 + stability)
}

/// Displacement over the second half of the evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastHalf {
    pub distance: f64,
    /// The trace ended before the evaluation midpoint; `distance` then
    /// covers the second half of whatever was recorded.
    pub truncated: bool,
}

/// `dir * |P_end - P_mid|` with `P_mid` the sample nearest half the
/// requested duration.
pub fn distance_last_half(trace: &EvalTrace, dir: f64) -> Result<LastHalf> {
    non_empty(trace)?;
    let half = trace.duration / 2.0;
    let truncated = trace.end_time() < half;
    let target = if truncated { trace.end_time() / 2.0 } else { half };
    let mid = trace
        .samples
        .iter()
        .min_by(|a, b| (a.time - target).abs().total_cmp(&(b.time - target).abs()))
        .expect("non-empty");
    Ok(LastHalf {
        distance: dir * horizontal_norm(&mid.position, &trace.p_end),
        truncated,
    })
}

impl FitnessSettings {
    pub fn validate(&self) -> Result<()> {
        if self.dir != 1.0 && self.dir != -1.0 {
            return Err(Error::Config(format!("fitness: dir must be 1 or -1, got {}", self.dir)));
        }
        if !(self.angle_max > 0.0) {
            return Err(Error::Config("fitness: angle_max must be > 0".into()));
        }
        Ok(())
    }
}

pub fn evaluate(trace: &EvalTrace, settings: &FitnessSettings) -> Result<FitnessRecord> {
    let distance = distance_fitness(trace, settings.dir)?;
    let stability = stability_fitness(trace, settings.angle_max)?;
    let last = distance_last_half(trace, settings.dir)?;
    Ok(FitnessRecord {
        composite: composite_fitness(distance, stability),
        distance,
        stability,
        distance_last_half: last.distance,
        max_angle: trace.max_up_angle(),
        fell: trace.fell,
    })
}
