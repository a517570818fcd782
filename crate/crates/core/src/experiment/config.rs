use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cmaes::CmaConfig;
use crate::cpg::Mode;
use crate::error::{Error, Result};
use crate::fitness::FitnessSettings;
use crate::genome::GENOME_LEN;
use crate::sim::SimConfig;

/// One evolution experiment: `repetitions` independent CMA-ES runs of one
/// controller mode. Read from TOML; every key is optional.
///
/// ```toml
/// mode = "closed_loop"
/// repetitions = 20
/// generations = 250
/// duration = 20.0
/// base_seed = 1
/// sim_config = "sim.toml"
/// output_dir = "runs/closed"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub repetitions: usize,
    pub generations: usize,
    /// Evaluation length, s.
    pub duration: f64,
    pub base_seed: u64,
    /// Simulator TOML; relative paths resolve against the experiment file.
    pub sim_config: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub population: usize,
    pub sigma0: f64,
    /// Initial search point, the same in every coordinate.
    pub initial_mean: f64,
    /// Evaluate the initial mean once per population slot before the first
    /// generation (counts towards the evaluation total, not the generations).
    pub initial_batch: bool,
    /// Write a resumable checkpoint every this many generations.
    pub checkpoint_every: usize,
    pub fitness: FitnessSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::OpenLoop,
            repetitions: 20,
            generations: 250,
            duration: 20.0,
            base_seed: 0,
            sim_config: None,
            output_dir: PathBuf::from("runs"),
            population: 10,
            sigma0: 0.3,
            initial_mean: 0.5,
            initial_batch: true,
            checkpoint_every: 10,
            fitness: FitnessSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("experiment: {m}")));
        if self.repetitions < 1 {
            return bad("repetitions must be >= 1");
        }
        if self.generations < 1 {
            return bad("generations must be >= 1");
        }
        if !(self.duration > 0.0) {
            return bad("duration must be > 0");
        }
        if self.checkpoint_every < 1 {
            return bad("checkpoint_every must be >= 1");
        }
        self.fitness.validate()?;
        self.cma_config(0).validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        if let (Some(sim), Some(dir)) = (&cfg.sim_config, path.parent()) {
            if sim.is_relative() {
                cfg.sim_config = Some(dir.join(sim));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("experiment config serializes")
    }

    pub fn load_sim(&self) -> Result<SimConfig> {
        match &self.sim_config {
            Some(p) => SimConfig::load(p),
            None => Ok(SimConfig::default()),
        }
    }

    /// Seed of run `run`'s optimizer.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn evaluations_per_run(&self) -> usize {
        self.population * (self.generations + usize::from(self.initial_batch))
    }

    pub fn cma_config(&self, run: usize) -> CmaConfig {
        CmaConfig {
            dimension: GENOME_LEN,
            population: self.population,
            sigma0: self.sigma0,
            initial_mean: vec![self.initial_mean; GENOME_LEN],
            bounds: Some((0.0, 1.0)),
            max_resamples: 10,
            max_evaluations: self.evaluations_per_run(),
            seed: self.run_seed(run),
        }
    }

    /// SHA-256 over everything that affects per-generation results: this
    /// configuration plus the resolved simulator settings. The output
    /// location, checkpoint interval and generation count are left out, so a
    /// finished experiment can be extended with more generations.
    pub fn config_hash(&self, sim: &SimConfig) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.sim_config = None;
        canonical.generations = 0;
        canonical.checkpoint_every = 0;
        let text = serde_json::to_string(&(canonical, sim)).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Mixes `parts` into one 64-bit seed (SplitMix64 finaliser per part).
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9e37_79b9_7f4a_7c15u64, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

/// Seed of the evaluation of `individual` in `generation` of `run`.
pub fn evaluation_seed(base_seed: u64, run: usize, generation: usize, individual: usize) -> u64 {
    derive_seed(&[base_seed, run as u64, generation as u64, individual as u64])
}
