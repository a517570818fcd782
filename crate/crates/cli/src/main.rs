use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gaitevo_core::cpg::Mode;
use gaitevo_core::experiment::{
    self, export, group_by_mode, reevaluate, replay, ExperimentConfig, Manifest, Metric, ReevalOptions,
    ReplayOptions,
};
use gaitevo_core::fitness::FitnessSettings;
use gaitevo_core::genome::GenomeFile;
use gaitevo_core::sim::SimConfig;
use gaitevo_core::stats::{self, StatsReport, SummaryOptions};

#[derive(Parser)]
#[command(name = "gaitevo", version, about = "Evolve and analyse CPG gaits for a simulated quadruped")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run CMA-ES evolution runs and write archives, checkpoints and CSVs.
    Evolve(EvolveArgs),
    /// Re-run the best final controllers of one or more experiments.
    Reevaluate(ReevaluateArgs),
    /// Evaluate a single genome and write its full trace.
    Replay(ReplayArgs),
    /// Summaries and Mann-Whitney tests over re-evaluation tables.
    Stats(StatsArgs),
    /// Rewrite the CSV exports of an experiment directory from its archives.
    Export(ExportArgs),
}

#[derive(Args)]
struct EvolveArgs {
    /// Experiment TOML; the flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Evaluation length, s.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sim_config: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReevaluateArgs {
    /// Experiment directories (each with a manifest.json).
    #[arg(long = "input", short, required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score the first repeat with the seed used during evolution.
    #[arg(long)]
    reuse_evolution_seed: bool,
    /// Override the archived evaluation length, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Simulator TOML; defaults to the one stored in each manifest.
    #[arg(long)]
    sim_config: Option<PathBuf>,
    /// Output CSV.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Genome JSON, e.g. run_000/best_genome.json.
    #[arg(long)]
    genome: PathBuf,
    /// Override the mode stored in the genome file.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    sim_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20.0)]
    duration: f64,
    /// Record every physics step instead of the configured sample rate.
    #[arg(long)]
    full_rate: bool,
    #[arg(long, short)]
    output: PathBuf,
    /// File stem of the written trace files.
    #[arg(long, default_value = "trace")]
    name: String,
}

#[derive(Args)]
struct StatsArgs {
    /// Re-evaluation CSVs; rows are grouped by controller mode.
    #[arg(long = "input", short, required = true)]
    inputs: Vec<PathBuf>,
    /// composite, distance, stability, distance_last_half, speed or speed_last_half.
    #[arg(long, default_value = "composite")]
    metric: Metric,
    #[arg(long, default_value_t = stats::DEFAULT_ALPHA)]
    alpha: f64,
    /// Number of comparisons the significance level is divided by.
    #[arg(long, default_value_t = stats::DEFAULT_BONFERRONI)]
    bonferroni: usize,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for stats.json, stats_groups.csv and stats_comparisons.csv.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Experiment directory.
    #[arg(long, short)]
    input: PathBuf,
    /// Destination directory; defaults to the experiment directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Reevaluate(a) => cmd_reevaluate(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_sim(path: Option<&Path>) -> Result<SimConfig> {
    Ok(match path {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    })
}

fn cmd_evolve(a: EvolveArgs) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = a.mode {
        cfg.mode = v;
    }
    if let Some(v) = a.repetitions {
        cfg.repetitions = v;
    }
    if let Some(v) = a.generations {
        cfg.generations = v;
    }
    if let Some(v) = a.duration {
        cfg.duration = v;
    }
    if let Some(v) = a.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = a.sim_config {
        cfg.sim_config = Some(v);
    }
    if let Some(v) = a.output {
        cfg.output_dir = v;
    }
    cfg.validate()?;
    let out = experiment::evolve(&cfg)?;
    for a in &out.archives {
        let best = a.best.as_ref().map_or(f64::NAN, |b| b.fitness);
        println!("run {:3}  best fitness {best:.4}", a.run);
    }
    println!("wrote {}", cfg.output_dir.join(experiment::MANIFEST_FILE).display());
    if out.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (run, e) in &out.failures {
            eprintln!("run {run} failed: {e}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_reevaluate(a: ReevaluateArgs) -> Result<ExitCode> {
    let override_sim = a.sim_config.as_deref().map(SimConfig::load).transpose()?;
    let opts = ReevalOptions {
        top_k: a.top_k,
        repeats: a.repeats,
        base_seed: a.seed,
        reuse_evolution_seed: a.reuse_evolution_seed,
        duration: a.duration,
    };
    let mut rows = Vec::new();
    for dir in &a.inputs {
        let manifest = Manifest::read(dir)?;
        let archives = manifest.load_archives(dir)?;
        if archives.is_empty() {
            bail!("{} has no complete runs", dir.display());
        }
        let sim = override_sim.as_ref().unwrap_or(&manifest.sim);
        let new = reevaluate(&archives, sim, &manifest.config.fitness, &opts)
            .with_context(|| format!("re-evaluating {}", dir.display()))?;
        println!("{}: {} rows ({})", dir.display(), new.len(), manifest.config.mode);
        rows.extend(new);
    }
    export::write_reevaluation(&a.output, &rows)?;
    println!("wrote {}", a.output.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(a: ReplayArgs) -> Result<ExitCode> {
    let genome = GenomeFile::read(&a.genome)?;
    let sim = load_sim(a.sim_config.as_deref())?;
    let opts = ReplayOptions {
        mode: a.mode,
        duration: a.duration,
        seed: a.seed,
        full_rate: a.full_rate,
        fitness: FitnessSettings::default(),
    };
    let out = replay(&genome, &sim, &opts, &a.output, &a.name)?;
    let r = &out.record;
    println!(
        "composite {:.4}  distance {:.4}  stability {:.4}  last half {:.4}  fell {}",
        r.composite, r.distance, r.stability, r.distance_last_half, r.fell
    );
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(a: StatsArgs) -> Result<ExitCode> {
    let mut rows = Vec::new();
    for p in &a.inputs {
        rows.extend(export::read_reevaluation(p)?);
    }
    let groups = group_by_mode(&rows, a.metric);
    if groups.is_empty() {
        bail!("no finite values to summarise");
    }
    let opts = SummaryOptions {
        alpha: a.alpha,
        bonferroni: a.bonferroni,
        resamples: stats::BOOTSTRAP_RESAMPLES,
        seed: a.seed,
    };
    let report = stats::summarize(&groups, &opts)?;
    print_report(&report, &opts);
    if let Some(dir) = &a.output {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json = dir.join("stats.json");
        std::fs::write(&json, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", json.display()))?;
        export::write_csv(&dir.join("stats_groups.csv"), &report.groups)?;
        export::write_csv(&dir.join("stats_comparisons.csv"), &report.comparisons)?;
        println!("wrote {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(report: &StatsReport, opts: &SummaryOptions) {
    println!("{:<14} {:>4} {:>10} {:>10} {:>22}", "group", "n", "mean", "median", "95% CI");
    for g in &report.groups {
        let flag = if g.low_n { "  (low n)" } else { "" };
        println!(
            "{:<14} {:>4} {:>10.4} {:>10.4}   [{:>8.4}, {:>8.4}]{flag}",
            g.name, g.n, g.mean, g.median, g.ci_low, g.ci_high
        );
    }
    for c in &report.comparisons {
        println!(
            "{} vs {}: U = {}, p = {:.4} ({:?}){}",
            c.a,
            c.b,
            c.u,
            c.p,
            c.method,
            if c.significant {
                format!(", significant at {:.4}", opts.threshold())
            } else {
                String::new()
            }
        );
    }
}

fn cmd_export(a: ExportArgs) -> Result<ExitCode> {
    let manifest = Manifest::read(&a.input)?;
    let archives = manifest.load_archives(&a.input)?;
    let out = a.output.unwrap_or_else(|| a.input.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    for p in export::export_archives(&archives, &out)? {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}
