//! Evolving central pattern generator gaits for a simulated quadruped.
//!
//! The crate is organised bottom-up:
//!
//! - [`cpg`]: the oscillator network, open-loop phase coupling and
//!   closed-loop ground-reaction-force feedback.
//! - [`genome`]: ten-gene encoding of a controller.
//! - [`sim`]: single-rigid-body quadruped surrogate with spring-damper feet.
//! - [`fitness`]: distance and stability scores computed from a trace.
//! - [`cmaes`]: ask/tell CMA-ES over the genome box.
//! - [`stats`]: Mann-Whitney U and bootstrap summaries.
//! - [`experiment`]: evolution runs, re-evaluation campaigns and CSV export.
//! - [`par`]: index-ordered batch mapping, parallel with the `parallel`
//!   feature (on by default).

// `!(x > 0.0)` in validation is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmaes;
pub mod cpg;
pub mod error;
pub mod experiment;
pub mod fitness;
pub mod genome;
pub mod par;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
