//! Evolution runs, re-evaluation campaigns, replays and CSV export.
//!
//! An experiment directory looks like
//!
//! ```text
//! out/
//!   manifest.json         index of runs, config and its hash
//!   experiment.toml       config snapshot
//!   sim.toml
//!   fitness.csv  genomes.csv  results.csv
//!   run_000/
//!     experiment.toml  sim.toml
//!     checkpoint.json     optimizer state + partial archive
//!     archive.json        complete run record
//!     best_genome.json
//!     fitness.csv  genomes.csv  results.csv
//! ```
//!
//! Every evaluation seed is derived from `(base_seed, run, generation,
//! individual)`, and parallel results are merged by index, so outputs do not
//! depend on thread count or scheduling.

mod config;
mod evolve;
pub mod export;
mod reeval;
mod replay;

pub use config::{derive_seed, evaluation_seed, ExperimentConfig};
pub use evolve::{
    evaluate_genome, evaluate_or_fail, evolve, evolve_with_sim, run_dir_name, BestController, EvolveOutcome,
    GenerationRecord, Manifest, ManifestRun, RunArchive, ARCHIVE_FILE, BEST_GENOME_FILE, CHECKPOINT_FILE,
    MANIFEST_FILE,
};
pub use reeval::{group_by_mode, reevaluate, select_top, Metric, ReevalOptions, ReevalRow};
pub use replay::{replay, ReplayOptions, ReplayOutput};
