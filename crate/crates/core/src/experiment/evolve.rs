use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{evaluation_seed, ExperimentConfig};
use super::export;
use crate::cmaes::{Checkpoint, Cma};
use crate::cpg::Mode;
use crate::error::{Error, Result};
use crate::fitness::{self, nan_as_null, FitnessRecord, FitnessSettings};
use crate::genome::{decode, Genome, GenomeFile, GENOME_LEN};
use crate::par;
use crate::sim::{run_evaluation, SimConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ARCHIVE_FILE: &str = "archive.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const BEST_GENOME_FILE: &str = "best_genome.json";

/// Scores one genome. Divergence of the simulation is an error here; see
/// [`evaluate_or_fail`] for the absorbing variant used during evolution.
pub fn evaluate_genome(
    genes: &[f64; GENOME_LEN],
    mode: Mode,
    sim: &SimConfig,
    duration: f64,
    seed: u64,
    settings: &FitnessSettings,
) -> Result<FitnessRecord> {
    let params = decode(&Genome::new(*genes)?, mode)?;
    let trace = run_evaluation(&params, sim, duration, seed)?;
    fitness::evaluate(&trace, settings)
}

/// Like [`evaluate_genome`], but numerical failures become
/// [`FitnessRecord::failed`] (ranked worst) and are logged.
pub fn evaluate_or_fail(
    genes: &[f64; GENOME_LEN],
    mode: Mode,
    sim: &SimConfig,
    duration: f64,
    seed: u64,
    settings: &FitnessSettings,
) -> Result<FitnessRecord> {
    match evaluate_genome(genes, mode, sim, duration, seed, settings) {
        Err(e @ (Error::Diverged { .. } | Error::Numerical(_) | Error::InvalidTrace(_))) => {
            log::warn!("evaluation with seed {seed} failed: {e}");
            Ok(FitnessRecord::failed())
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Step size the population was sampled with.
    pub sigma: f64,
    pub genomes: Vec<[f64; GENOME_LEN]>,
    /// The sample left the genome box and was clamped into it.
    pub clamped: Vec<bool>,
    pub seeds: Vec<u64>,
    pub records: Vec<FitnessRecord>,
    /// Best composite fitness in this population.
    #[serde(with = "nan_as_null")]
    pub generation_best: f64,
    /// Best composite fitness seen in this run up to and including this
    /// generation.
    #[serde(with = "nan_as_null")]
    pub best_so_far: f64,
}

fn population_best(records: &[FitnessRecord]) -> f64 {
    records.iter().map(|r| r.composite).fold(f64::NAN, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestController {
    pub genome: [f64; GENOME_LEN],
    pub fitness: f64,
    pub generation: usize,
    pub individual: usize,
    pub seed: u64,
}

/// Everything recorded about one evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArchive {
    pub run: usize,
    pub mode: Mode,
    pub base_seed: u64,
    /// Optimizer seed.
    pub seed: u64,
    pub config_hash: String,
    pub duration: f64,
    /// Generation 0: the initial mean, evaluated once per population slot.
    pub initial: Option<GenerationRecord>,
    /// Generations `1..=n`, in order.
    pub generations: Vec<GenerationRecord>,
    pub best: Option<BestController>,
}

impl RunArchive {
    fn all_generations(&self) -> impl Iterator<Item = &GenerationRecord> {
        self.initial.iter().chain(&self.generations)
    }

    fn push(&mut self, mut record: GenerationRecord) {
        let prior = self.all_generations().last().map_or(f64::NAN, |g| g.best_so_far);
        record.generation_best = population_best(&record.records);
        record.best_so_far = prior.max(record.generation_best);
        for (i, r) in record.records.iter().enumerate() {
            if r.composite.is_finite() && self.best.as_ref().is_none_or(|b| r.composite > b.fitness) {
                self.best = Some(BestController {
                    genome: record.genomes[i],
                    fitness: r.composite,
                    generation: record.generation,
                    individual: i,
                    seed: record.seeds[i],
                });
            }
        }
        if record.generation == 0 {
            self.initial = Some(record);
        } else {
            self.generations.push(record);
        }
    }

    /// Best-so-far fitness per generation `1..=n`.
    pub fn best_fitness_series(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.best_so_far).collect()
    }

    /// Best-so-far series recomputed from the stored populations.
    pub fn recompute_best_so_far(&self) -> Vec<f64> {
        let mut best = self.initial.as_ref().map_or(f64::NAN, |g| population_best(&g.records));
        self.generations
            .iter()
            .map(|g| {
                best = best.max(population_best(&g.records));
                best
            })
            .collect()
    }

    /// Checks contiguous generation indices, consistent population sizes,
    /// genomes inside the box and the stored best-so-far series.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("run {}: {m}", self.run)));
        for (k, g) in self.generations.iter().enumerate() {
            if g.generation != k + 1 {
                return bad(format!("generation {} stored at position {}", g.generation, k + 1));
            }
        }
        for g in self.all_generations() {
            let n = g.genomes.len();
            if g.records.len() != n || g.seeds.len() != n || g.clamped.len() != n {
                return bad(format!("generation {} has ragged columns", g.generation));
            }
            if g.genomes.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return bad(format!("generation {} has a genome outside [0, 1]", g.generation));
            }
        }
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        let stored = self.best_fitness_series();
        if !stored.iter().zip(self.recompute_best_so_far()).all(|(a, b)| same(*a, b)) {
            return bad("best-so-far series does not match the populations".into());
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json_atomic(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunCheckpoint {
    config_hash: String,
    optimizer: Checkpoint,
    archive: RunArchive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub run: usize,
    pub seed: u64,
    /// Relative to the manifest.
    pub dir: PathBuf,
    pub complete: bool,
    pub error: Option<String>,
    #[serde(with = "nan_as_null")]
    pub best_fitness: f64,
}

/// Top-level index of an experiment directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub sim: SimConfig,
    pub config_hash: String,
    pub runs: Vec<ManifestRun>,
    /// CSV exports, relative to the manifest.
    pub exports: Vec<PathBuf>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        read_json(&dir.join(MANIFEST_FILE))
    }

    /// Loads the archives of every complete run listed in the manifest.
    pub fn load_archives(&self, dir: &Path) -> Result<Vec<RunArchive>> {
        self.runs
            .iter()
            .filter(|r| r.complete)
            .map(|r| RunArchive::read(&dir.join(&r.dir).join(ARCHIVE_FILE)))
            .collect()
    }
}

pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string(value)?;
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn run_dir_name(run: usize) -> PathBuf {
    PathBuf::from(format!("run_{run:03}"))
}

pub struct EvolveOutcome {
    pub archives: Vec<RunArchive>,
    /// Runs that failed irrecoverably, with the reason.
    pub failures: Vec<(usize, String)>,
    pub manifest: Manifest,
}

/// Runs the whole experiment, resuming any run that has a checkpoint or a
/// finished archive in the output directory.
pub fn evolve(cfg: &ExperimentConfig) -> Result<EvolveOutcome> {
    cfg.validate()?;
    let sim = cfg.load_sim()?;
    evolve_with_sim(cfg, &sim)
}

pub fn evolve_with_sim(cfg: &ExperimentConfig, sim: &SimConfig) -> Result<EvolveOutcome> {
    cfg.validate()?;
    sim.validate()?;
    let out = &cfg.output_dir;
    create_dir(out)?;
    let hash = cfg.config_hash(sim);
    if let Ok(existing) = Manifest::read(out) {
        if existing.config_hash != hash {
            return Err(Error::Config(format!(
                "{} holds a different experiment (config hash {})",
                out.display(),
                existing.config_hash
            )));
        }
    }
    write_text(&out.join("experiment.toml"), &cfg.to_toml_string())?;
    write_text(&out.join("sim.toml"), &sim.to_toml_string())?;
    log::info!(
        "evolving {} runs x {} generations ({}), parallel = {}",
        cfg.repetitions,
        cfg.generations,
        cfg.mode,
        par::is_parallel()
    );

    let runs: Vec<usize> = (0..cfg.repetitions).collect();
    let results = par::map(&runs, |_, &run| run_one(cfg, sim, &hash, run));

    let mut archives = Vec::new();
    let mut failures = Vec::new();
    let mut manifest_runs = Vec::new();
    for (run, result) in results.into_iter().enumerate() {
        let (complete, error, best_fitness) = match result {
            Ok(a) => {
                let best = a.best.as_ref().map_or(f64::NAN, |b| b.fitness);
                archives.push(a);
                (true, None, best)
            }
            Err(e) => {
                log::error!("run {run} failed: {e}");
                failures.push((run, e.to_string()));
                (false, Some(e.to_string()), f64::NAN)
            }
        };
        manifest_runs.push(ManifestRun {
            run,
            seed: cfg.run_seed(run),
            dir: run_dir_name(run),
            complete,
            error,
            best_fitness,
        });
    }
    let exports = export::export_archives(&archives, out)?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        sim: sim.clone(),
        config_hash: hash,
        runs: manifest_runs,
        exports: exports
            .iter()
            .map(|p| p.strip_prefix(out).unwrap_or(p).to_path_buf())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    write_text(&out.join(MANIFEST_FILE), &text)?;
    Ok(EvolveOutcome {
        archives,
        failures,
        manifest,
    })
}

fn evaluate_population(
    cfg: &ExperimentConfig,
    sim: &SimConfig,
    run: usize,
    generation: usize,
    genomes: &[[f64; GENOME_LEN]],
) -> Result<(Vec<u64>, Vec<FitnessRecord>)> {
    let seeds: Vec<u64> = (0..genomes.len())
        .map(|i| evaluation_seed(cfg.base_seed, run, generation, i))
        .collect();
    let records = par::map(genomes, |i, g| {
        evaluate_or_fail(g, cfg.mode, sim, cfg.duration, seeds[i], &cfg.fitness)
    });
    Ok((seeds, records.into_iter().collect::<Result<Vec<_>>>()?))
}

fn to_genes(v: &[f64]) -> [f64; GENOME_LEN] {
    std::array::from_fn(|i| v[i])
}

fn run_one(cfg: &ExperimentConfig, sim: &SimConfig, hash: &str, run: usize) -> Result<RunArchive> {
    let dir = cfg.output_dir.join(run_dir_name(run));
    create_dir(&dir)?;
    let archive_path = dir.join(ARCHIVE_FILE);
    let checkpoint_path = dir.join(CHECKPOINT_FILE);

    if archive_path.exists() {
        let archive = RunArchive::read(&archive_path)?;
        if archive.config_hash == hash && archive.generations.len() == cfg.generations {
            log::info!("run {run}: already complete");
            return Ok(archive);
        }
        if archive.generations.len() > cfg.generations {
            return Err(Error::Config(format!(
                "run {run} already has {} generations, more than the {} requested",
                archive.generations.len(),
                cfg.generations
            )));
        }
    }

    let (mut cma, mut archive) = if checkpoint_path.exists() {
        let ck: RunCheckpoint = read_json(&checkpoint_path)?;
        if ck.config_hash != hash {
            return Err(Error::Config(format!(
                "{} belongs to a different experiment",
                checkpoint_path.display()
            )));
        }
        log::info!("run {run}: resuming after generation {}", ck.archive.generations.len());
        (Cma::restore(ck.optimizer)?, ck.archive)
    } else {
        write_text(&dir.join("experiment.toml"), &cfg.to_toml_string())?;
        write_text(&dir.join("sim.toml"), &sim.to_toml_string())?;
        let mut cma = Cma::new(cfg.cma_config(run))?;
        let mut archive = RunArchive {
            run,
            mode: cfg.mode,
            base_seed: cfg.base_seed,
            seed: cfg.run_seed(run),
            config_hash: hash.to_string(),
            duration: cfg.duration,
            initial: None,
            generations: Vec::new(),
            best: None,
        };
        if cfg.initial_batch {
            let mean = [cfg.initial_mean; GENOME_LEN];
            let genomes = vec![mean; cfg.population];
            let (seeds, records) = evaluate_population(cfg, sim, run, 0, &genomes)?;
            let fit: Vec<f64> = records.iter().map(|r| r.composite).collect();
            cma.record_external(&mean, &fit);
            archive.push(GenerationRecord {
                generation: 0,
                sigma: cfg.sigma0,
                clamped: vec![false; genomes.len()],
                genomes,
                seeds,
                records,
                generation_best: f64::NAN,
                best_so_far: f64::NAN,
            });
        }
        (cma, archive)
    };

    while archive.generations.len() < cfg.generations {
        let generation = archive.generations.len() + 1;
        let sigma = cma.state().sigma;
        let candidates = cma.ask();
        let genomes: Vec<[f64; GENOME_LEN]> = candidates.iter().map(|c| to_genes(&c.genome)).collect();
        let (seeds, records) = evaluate_population(cfg, sim, run, generation, &genomes)?;
        let fit: Vec<f64> = records.iter().map(|r| r.composite).collect();
        cma.tell(&candidates, &fit)?;
        archive.push(GenerationRecord {
            generation,
            sigma,
            clamped: candidates.iter().map(|c| c.clamped).collect(),
            genomes,
            seeds,
            records,
            generation_best: f64::NAN,
            best_so_far: f64::NAN,
        });
        log::debug!(
            "run {run} generation {generation}: best so far {:.4}",
            archive.generations.last().map_or(f64::NAN, |g| g.best_so_far)
        );
        if generation % cfg.checkpoint_every == 0 || generation == cfg.generations {
            let ck = RunCheckpoint {
                config_hash: hash.to_string(),
                optimizer: cma.checkpoint(),
                archive: archive.clone(),
            };
            write_json_atomic(&checkpoint_path, &ck)?;
        }
    }

    archive.validate()?;
    archive.write(&archive_path)?;
    if let Some(best) = &archive.best {
        GenomeFile {
            mode: cfg.mode,
            genes: Genome::new(best.genome)?,
        }
        .write(&dir.join(BEST_GENOME_FILE))?;
    }
    export::export_archives(std::slice::from_ref(&archive), &dir)?;
    log::info!(
        "run {run}: done, best fitness {:.4}",
        archive.best.as_ref().map_or(f64::NAN, |b| b.fitness)
    );
    Ok(archive)
}
