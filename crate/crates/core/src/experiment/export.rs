//! CSV exports of archives and re-evaluation tables.
//!
//! | file | columns |
//! |---|---|
//! | `fitness.csv` | run, generation, best_fitness, generation_best |
//! | `genomes.csv` | run, generation, individual, gene, value |
//! | `results.csv` | run, generation, individual, seed, composite, distance, stability, distance_last_half, max_angle, fell |
//! | `reevaluation.csv` | see [`ReevalRow`] |
//!
//! `best_fitness` is the best-so-far composite fitness of the run.
//! Generation 0 (the initial-mean batch) appears only in `results.csv`.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::evolve::RunArchive;
use super::reeval::ReevalRow;
use crate::error::{Error, Result};

pub const FITNESS_CSV: &str = "fitness.csv";
pub const GENOMES_CSV: &str = "genomes.csv";
pub const RESULTS_CSV: &str = "results.csv";
pub const REEVALUATION_CSV: &str = "reevaluation.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRow {
    pub run: usize,
    pub generation: usize,
    pub best_fitness: f64,
    pub generation_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneRow {
    pub run: usize,
    pub generation: usize,
    pub individual: usize,
    pub gene: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run: usize,
    pub generation: usize,
    pub individual: usize,
    pub seed: u64,
    pub composite: f64,
    pub distance: f64,
    pub stability: f64,
    pub distance_last_half: f64,
    pub max_angle: f64,
    pub fell: bool,
}

pub fn fitness_rows(archives: &[RunArchive]) -> Vec<FitnessRow> {
    archives
        .iter()
        .flat_map(|a| {
            a.generations.iter().map(move |g| FitnessRow {
                run: a.run,
                generation: g.generation,
                best_fitness: g.best_so_far,
                generation_best: g.generation_best,
            })
        })
        .collect()
}

pub fn gene_rows(archives: &[RunArchive]) -> Vec<GeneRow> {
    let mut rows = Vec::new();
    for a in archives {
        for g in &a.generations {
            for (individual, genome) in g.genomes.iter().enumerate() {
                for (gene, &value) in genome.iter().enumerate() {
                    rows.push(GeneRow {
                        run: a.run,
                        generation: g.generation,
                        individual,
                        gene,
                        value,
                    });
                }
            }
        }
    }
    rows
}

pub fn result_rows(archives: &[RunArchive]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for a in archives {
        for g in a.initial.iter().chain(&a.generations) {
            for (individual, r) in g.records.iter().enumerate() {
                rows.push(ResultRow {
                    run: a.run,
                    generation: g.generation,
                    individual,
                    seed: g.seeds[individual],
                    composite: r.composite,
                    distance: r.distance,
                    stability: r.stability,
                    distance_last_half: r.distance_last_half,
                    max_angle: r.max_angle,
                    fell: r.fell,
                });
            }
        }
    }
    rows
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::parse(path, e)))
        .collect()
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::parse(path, e)
    }
}

/// Writes the fitness, genome and results tables for `archives` into `dir`
/// and returns their paths.
pub fn export_archives(archives: &[RunArchive], dir: &Path) -> Result<Vec<PathBuf>> {
    let fitness = dir.join(FITNESS_CSV);
    let genomes = dir.join(GENOMES_CSV);
    let results = dir.join(RESULTS_CSV);
    write_csv(&fitness, &fitness_rows(archives))?;
    write_csv(&genomes, &gene_rows(archives))?;
    write_csv(&results, &result_rows(archives))?;
    Ok(vec![fitness, genomes, results])
}

pub fn write_reevaluation(path: &Path, rows: &[ReevalRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_reevaluation(path: &Path) -> Result<Vec<ReevalRow>> {
    read_csv(path)
}
