use serde::{Deserialize, Serialize};

use super::config::derive_seed;
use super::evolve::{evaluate_or_fail, BestController, RunArchive};
use crate::cpg::Mode;
use crate::error::{Error, Result};
use crate::fitness::FitnessSettings;
use crate::par;
use crate::sim::SimConfig;

/// Domain tag separating re-evaluation seeds from evolution seeds.
const REEVAL_DOMAIN: u64 = 0x7265_6576;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReevalOptions {
    pub top_k: usize,
    pub repeats: usize,
    pub base_seed: u64,
    /// Repeat 0 reuses the seed the controller was scored with during
    /// evolution, so it reproduces the archived fitness.
    pub reuse_evolution_seed: bool,
    /// Overrides the archived evaluation length, s.
    pub duration: Option<f64>,
}

impl Default for ReevalOptions {
    fn default() -> Self {
        ReevalOptions {
            top_k: 5,
            repeats: 10,
            base_seed: 0,
            reuse_evolution_seed: false,
            duration: None,
        }
    }
}

/// One re-evaluation of one selected controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReevalRow {
    pub mode: Mode,
    /// 0 for the best selected controller.
    pub rank: usize,
    pub run: usize,
    pub generation: usize,
    pub individual: usize,
    pub repeat: usize,
    pub seed: u64,
    pub duration: f64,
    pub archived_fitness: f64,
    pub composite: f64,
    pub distance: f64,
    pub stability: f64,
    pub distance_last_half: f64,
    pub max_angle: f64,
    pub fell: bool,
    /// `distance / duration`, m/s.
    pub speed: f64,
    /// `distance_last_half / (duration / 2)`, m/s.
    pub speed_last_half: f64,
}

/// The final (best-so-far) controller of each run, best first; ties keep
/// run order. Bounded by the number of runs with a controller.
pub fn select_top(archives: &[RunArchive], k: usize) -> Vec<(&RunArchive, &BestController)> {
    let mut all: Vec<_> = archives
        .iter()
        .filter_map(|a| a.best.as_ref().map(|b| (a, b)))
        .collect();
    all.sort_by(|x, y| y.1.fitness.total_cmp(&x.1.fitness));
    if k > all.len() {
        log::warn!("top_k = {k} exceeds the {} available controllers", all.len());
    }
    all.truncate(k);
    all
}

pub fn reevaluate(
    archives: &[RunArchive],
    sim: &SimConfig,
    settings: &FitnessSettings,
    opts: &ReevalOptions,
) -> Result<Vec<ReevalRow>> {
    if archives.is_empty() {
        return Err(Error::Config("re-evaluation needs at least one archive".into()));
    }
    if opts.repeats < 1 {
        return Err(Error::Config("re-evaluation needs repeats >= 1".into()));
    }
    let selected = select_top(archives, opts.top_k);
    let jobs: Vec<(usize, usize)> = (0..selected.len())
        .flat_map(|rank| (0..opts.repeats).map(move |r| (rank, r)))
        .collect();
    let rows = par::map(&jobs, |_, &(rank, repeat)| {
        let (archive, best) = selected[rank];
        let duration = opts.duration.unwrap_or(archive.duration);
        let seed = if opts.reuse_evolution_seed && repeat == 0 {
            best.seed
        } else {
            derive_seed(&[opts.base_seed, REEVAL_DOMAIN, archive.run as u64, repeat as u64])
        };
        let r = evaluate_or_fail(&best.genome, archive.mode, sim, duration, seed, settings)?;
        Ok(ReevalRow {
            mode: archive.mode,
            rank,
            run: archive.run,
            generation: best.generation,
            individual: best.individual,
            repeat,
            seed,
            duration,
            archived_fitness: best.fitness,
            composite: r.composite,
            distance: r.distance,
            stability: r.stability,
            distance_last_half: r.distance_last_half,
            max_angle: r.max_angle,
            fell: r.fell,
            speed: r.distance / duration,
            speed_last_half: r.distance_last_half / (duration / 2.0),
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Composite,
    Distance,
    Stability,
    DistanceLastHalf,
    Speed,
    SpeedLastHalf,
}

impl Metric {
    pub fn of(self, row: &ReevalRow) -> f64 {
        match self {
            Metric::Composite => row.composite,
            Metric::Distance => row.distance,
            Metric::Stability => row.stability,
            Metric::DistanceLastHalf => row.distance_last_half,
            Metric::Speed => row.speed,
            Metric::SpeedLastHalf => row.speed_last_half,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "composite" => Metric::Composite,
            "distance" => Metric::Distance,
            "stability" => Metric::Stability,
            "distance_last_half" => Metric::DistanceLastHalf,
            "speed" => Metric::Speed,
            "speed_last_half" => Metric::SpeedLastHalf,
            _ => return Err(Error::Config(format!("unknown metric `{s}`"))),
        })
    }
}

/// Groups `metric` by controller mode, in order of first appearance.
/// Failed evaluations (non-finite values) are dropped.
pub fn group_by_mode(rows: &[ReevalRow], metric: Metric) -> Vec<(String, Vec<f64>)> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for row in rows {
        let v = metric.of(row);
        if !v.is_finite() {
            continue;
        }
        let name = row.mode.as_str();
        match groups.iter_mut().find(|(n, _)| n == name) {
            Some((_, vals)) => vals.push(v),
            None => groups.push((name.to_string(), vec![v])),
        }
    }
    groups
}
