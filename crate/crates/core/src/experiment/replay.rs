use std::path::{Path, PathBuf};

use crate::cpg::Mode;
use crate::error::{Error, Result};
use crate::fitness::{self, FitnessRecord, FitnessSettings};
use crate::genome::{decode, GenomeFile};
use crate::sim::{run_evaluation, EvalTrace, SimConfig};

pub struct ReplayOutput {
    pub trace: EvalTrace,
    pub record: FitnessRecord,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    /// Overrides the mode stored in the genome file.
    pub mode: Option<Mode>,
    pub duration: f64,
    pub seed: u64,
    /// Sample the trace at every physics step instead of the configured rate.
    pub full_rate: bool,
    pub fitness: FitnessSettings,
}

/// Evaluates one genome and writes `<stem>.csv`, `<stem>.bin` and
/// `<stem>.json` (the fitness record) into `out_dir`.
pub fn replay(
    genome: &GenomeFile,
    sim: &SimConfig,
    opts: &ReplayOptions,
    out_dir: &Path,
    stem: &str,
) -> Result<ReplayOutput> {
    let mode = opts.mode.unwrap_or(genome.mode);
    let params = decode(&genome.genes, mode)?;
    let mut sim = sim.clone();
    if opts.full_rate {
        sim.settings.sample_rate = 1.0 / sim.settings.dt;
    }
    let trace = run_evaluation(&params, &sim, opts.duration, opts.seed)?;
    let record = fitness::evaluate(&trace, &opts.fitness)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv = out_dir.join(format!("{stem}.csv"));
    let bin = out_dir.join(format!("{stem}.bin"));
    let json = out_dir.join(format!("{stem}.json"));
    trace.write_csv_file(&csv)?;
    let f = std::fs::File::create(&bin).map_err(|e| Error::io(&bin, e))?;
    trace
        .write_binary(std::io::BufWriter::new(f))
        .map_err(|e| Error::io(&bin, e))?;
    std::fs::write(&json, serde_json::to_string_pretty(&record)?).map_err(|e| Error::io(&json, e))?;
    Ok(ReplayOutput {
        trace,
        record,
        files: vec![csv, bin, json],
    })
}
