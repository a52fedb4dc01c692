use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stepal_cli::config::{ConfigError, ExperimentConfig, PoolSource};
use stepal_cli::experiment::{compare_strategies, run_experiment, RunError, StrategyRun};
use stepal_cli::manifest::{load_manifest, save_manifest, summarize};
use stepal_cli::report::{summary_table, write_compare_outputs, write_run_outputs};
use stepal_core::synthgen::{benchmark_suite, generate};
use stepal_core::Real;

/// Pool-based active learning laboratory for step-structured video pools.
#[derive(Parser)]
#[command(name = "stepal", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic pool and write it as a binary manifest.
    Generate(GenerateArgs),
    /// Run one strategy through the full active-learning loop.
    Run(RunArgs),
    /// Run several strategies on shared pools and emit comparison outputs.
    Compare(CompareArgs),
    /// Print the header and shape summary of a pool manifest.
    InspectManifest(InspectArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Benchmark preset name (default, easy).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Config file whose [pool] section describes the generator.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output manifest path.
    #[arg(long)]
    out: PathBuf,
}

/// Flags shared by `run` and `compare`; each maps onto one config field and
/// overrides the config file when both are given.
#[derive(Args)]
struct CommonArgs {
    /// Declarative experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pool preset name (default, easy).
    #[arg(long)]
    preset: Option<String>,
    /// Pool manifest path.
    #[arg(long, conflicts_with = "preset")]
    manifest: Option<PathBuf>,
    /// Comma-separated experiment seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Number of selection cycles R.
    #[arg(long)]
    cycles: Option<usize>,
    /// Fraction of train videos labeled before cycle 0.
    #[arg(long)]
    initial_label_frac: Option<f64>,
    /// Fraction of train videos annotated per cycle.
    #[arg(long)]
    budget_frac: Option<f64>,
    /// Epsilon guard used in entropies and normalization.
    #[arg(long)]
    eps: Option<f64>,
    /// Directory for results.csv / reports.json (and compare outputs).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for per-seed parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Learner learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Learner epochs per cycle.
    #[arg(long)]
    epochs: Option<usize>,
    /// Learner mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Learner L2 penalty.
    #[arg(long)]
    l2: Option<f64>,
    /// Learner base seed.
    #[arg(long)]
    train_seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Strategy name (see `compare --help` for the registry).
    #[arg(long)]
    strategy: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated strategy names: random, margin, entropy, coreset,
    /// kmeans, me-kmeans, ewc, stepal, mean-prob-entropy.
    #[arg(long, value_delimiter = ',', required = true)]
    strategies: Vec<String>,
}

#[derive(Args)]
struct InspectArgs {
    /// Manifest path.
    path: PathBuf,
}

impl CommonArgs {
    fn build_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(preset) = &self.preset {
            cfg.pool = PoolSource::Preset {
                preset: preset.clone(),
            };
        }
        if let Some(manifest) = &self.manifest {
            cfg.pool = PoolSource::Manifest {
                manifest: manifest.clone(),
            };
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        if let Some(cycles) = self.cycles {
            cfg.cycles = cycles;
        }
        if let Some(f) = self.initial_label_frac {
            cfg.initial_label_frac = f;
        }
        if let Some(f) = self.budget_frac {
            cfg.budget_frac = f;
        }
        if let Some(eps) = self.eps {
            cfg.eps = eps;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if let Some(lr) = self.learning_rate {
            cfg.train.learning_rate = lr;
        }
        if let Some(epochs) = self.epochs {
            cfg.train.epochs = epochs;
        }
        if let Some(batch) = self.batch_size {
            cfg.train.batch_size = batch;
        }
        if let Some(l2) = self.l2 {
            cfg.train.l2 = l2;
        }
        if let Some(seed) = self.train_seed {
            cfg.train.seed = seed;
        }
        Ok(cfg)
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_code_for(err: &RunError) -> u8 {
    match err {
        RunError::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn report_seed_errors(runs: &[StrategyRun]) -> bool {
    let mut any = false;
    for run in runs {
        for seed_run in &run.seed_runs {
            if let Some(error) = &seed_run.error {
                eprintln!(
                    "error: strategy '{}' seed {}: {error}",
                    run.strategy, seed_run.seed
                );
                any = true;
            }
        }
    }
    any
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), RunError> {
    let mut gen = match (&args.preset, &args.config) {
        (Some(preset), _) => benchmark_suite(preset).map_err(ConfigError::from)?,
        (None, Some(path)) => match ExperimentConfig::from_file(path)?.pool {
            PoolSource::Preset { preset } => {
                benchmark_suite(&preset).map_err(ConfigError::from)?
            }
            PoolSource::Generate { generate } => generate,
            PoolSource::Manifest { .. } => {
                return Err(RunError::Config(ConfigError::Invalid(
                    "config points at a manifest; nothing to generate".into(),
                )))
            }
        },
        (None, None) => benchmark_suite("default").map_err(ConfigError::from)?,
    };
    if let Some(seed) = args.seed {
        gen.seed = seed;
    }
    gen.validate().map_err(ConfigError::from)?;
    let pool = generate::<Real>(&gen)?;
    save_manifest(&pool, &args.out)?;
    println!("wrote {} videos to {}", pool.len(), args.out.display());
    println!("{}", summarize(&pool));
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), RunError> {
    let mut cfg = args.common.build_config()?;
    if let Some(strategy) = &args.strategy {
        cfg.strategy = Some(strategy.clone());
    }
    let run = run_experiment(&cfg)?;
    write_run_outputs(&cfg.output_dir, std::slice::from_ref(&run))?;
    println!(
        "wrote {} and {}",
        cfg.output_dir.join("results.csv").display(),
        cfg.output_dir.join("reports.json").display()
    );
    for seed_run in &run.seed_runs {
        if let Some(last) = seed_run.cycles.last() {
            println!(
                "seed {}: {} cycles, final accuracy {:.4} ({} labeled videos)",
                seed_run.seed,
                seed_run.cycles.len(),
                last.metrics.accuracy,
                last.labeled_count
            );
        }
    }
    if report_seed_errors(std::slice::from_ref(&run)) {
        return Err(RunError::Runtime("one or more seeds failed".into()));
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), RunError> {
    let cfg = args.common.build_config()?;
    let report = compare_strategies(&cfg, &args.strategies)?;
    write_compare_outputs(&cfg.output_dir, &report)?;
    println!(
        "wrote results.csv, summary.csv, curves.svg, reports.json under {}",
        cfg.output_dir.display()
    );
    print!("{}", summary_table(&report.summary));
    if report_seed_errors(&report.runs) {
        return Err(RunError::Runtime("one or more seeds failed".into()));
    }
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> Result<(), RunError> {
    let pool = load_manifest::<Real>(&args.path)?;
    println!("{}", summarize(&pool));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::InspectManifest(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
