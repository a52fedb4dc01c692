//! The active-learning loop driver.
//!
//! Per seed: build the pool, split train/val/test (50/10/40 of the videos),
//! label an initial fraction of the train split, then alternate
//! train -> infer -> evaluate -> select -> annotate for the configured number
//! of cycles. Cycle 0 is evaluated before any selection so curves start at
//! the initial model.
//!
//! Everything a strategy could observe is derived from (config, seed) alone,
//! never from the strategy, so runs over the same seeds are paired across
//! strategies: identical pools, splits, initial labels, and initial models.
//! Seeds run in parallel; each seed's pipeline is single-threaded and
//! deterministic, so worker count cannot change any output.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use stepal_core::learner::{infer, train, TrainConfig};
use stepal_core::metrics::{evaluate, MetricReport};
use stepal_core::pool::{DatasetPool, PoolState};
use stepal_core::seeding::{derive_seed, seeded_shuffle};
use stepal_core::strategies::{SelectionRequest, Strategy};
use stepal_core::synthgen::{benchmark_suite, generate, GenConfig};
use stepal_core::Real;

use crate::config::{ConfigError, ExperimentConfig, PoolSource};
use crate::manifest::{load_manifest, ManifestError};

pub const TRAIN_FRAC: f64 = 0.5;
pub const VAL_FRAC: f64 = 0.1;

const POOL_STREAM: u64 = 0x0001;
const SPLIT_STREAM: u64 = 0x0002;
const INIT_STREAM: u64 = 0x0003;
const TRAIN_STREAM: u64 = 0x0004;
const SELECT_STREAM: u64 = 0x0005;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("manifest: {0}")]
    Manifest(#[from] ManifestError),

    #[error("output: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Runtime(String),
}

impl From<stepal_core::Error> for RunError {
    fn from(e: stepal_core::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

/// One train/evaluate/select round of one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub seed: u64,
    pub cycle: usize,
    /// Labeled train videos the model was fitted on this cycle.
    pub labeled_count: usize,
    /// Videos selected for annotation at the end of this cycle (empty at the
    /// final cycle and when the pool is exhausted).
    pub chosen: Vec<String>,
    pub metrics: MetricReport,
    /// Wall-clock seconds; informational only, excluded from CSV outputs.
    pub wall_time_secs: f64,
    pub warnings: Vec<String>,
}

/// All cycles of one seed, or the error that aborted it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    /// Fingerprint of the pool + split + initial labels; equal across
    /// strategies by construction.
    pub pool_fingerprint: u64,
    pub cycles: Vec<CycleReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRun {
    pub strategy: String,
    pub seed_runs: Vec<SeedRun>,
}

/// Aggregate over seeds for one (strategy, cycle, metric).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub cycle: usize,
    pub metric: &'static str,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub runs: Vec<StrategyRun>,
    pub summary: Vec<SummaryRow>,
}

/// The pool builder shared by every (strategy, seed) pair.
pub enum PoolTemplate {
    Generated(GenConfig),
    Fixed(DatasetPool<Real>),
}

impl PoolTemplate {
    pub fn from_source(source: &PoolSource) -> Result<Self, RunError> {
        match source {
            PoolSource::Preset { preset } => Ok(PoolTemplate::Generated(benchmark_suite(preset)?)),
            PoolSource::Generate { generate } => Ok(PoolTemplate::Generated(generate.clone())),
            PoolSource::Manifest { manifest } => Ok(PoolTemplate::Fixed(load_manifest(manifest)?)),
        }
    }

    fn build(&self, seed: u64) -> Result<DatasetPool<Real>, RunError> {
        match self {
            PoolTemplate::Generated(gen) => {
                let mut gen = gen.clone();
                gen.seed = derive_seed(derive_seed(gen.seed, POOL_STREAM), seed);
                Ok(generate(&gen)?)
            }
            PoolTemplate::Fixed(pool) => Ok(pool.clone()),
        }
    }
}

struct SplitPools {
    train: DatasetPool<Real>,
    test: DatasetPool<Real>,
    fingerprint: u64,
}

/// Splits, labels the initial fraction, and fingerprints the result.
fn prepare_seed_pools(
    cfg: &ExperimentConfig,
    template: &PoolTemplate,
    seed: u64,
) -> Result<SplitPools, RunError> {
    let pool = template.build(seed)?;
    let mut ids: Vec<String> = pool.videos().map(|v| v.video_id.clone()).collect();
    let n = ids.len();
    let n_train = ((n as f64 * TRAIN_FRAC).round() as usize).max(1);
    let n_val = (n as f64 * VAL_FRAC).round() as usize;
    if n_train + n_val >= n {
        return Err(RunError::Runtime(format!(
            "pool of {n} videos is too small for a {TRAIN_FRAC}/{VAL_FRAC} train/val split \
             with a nonempty test set"
        )));
    }
    seeded_shuffle(&mut ids, derive_seed(seed, SPLIT_STREAM));
    let train_ids = &ids[..n_train];
    let test_ids = &ids[n_train + n_val..];

    let mut train = pool.subset(train_ids)?;
    let test = pool.subset(test_ids)?;

    let initial = ((cfg.initial_label_frac * n_train as f64).round() as usize)
        .clamp(1, n_train);
    let mut candidates = train.unlabeled_ids();
    seeded_shuffle(&mut candidates, derive_seed(seed, INIT_STREAM));
    let mut initial_ids: Vec<String> = candidates.into_iter().take(initial).collect();
    initial_ids.sort();
    train.move_to_labeled(&initial_ids)?;

    let fingerprint = fingerprint_pools(&train, &test);
    Ok(SplitPools {
        train,
        test,
        fingerprint,
    })
}

fn fingerprint_pools(train: &DatasetPool<Real>, test: &DatasetPool<Real>) -> u64 {
    let mut hasher = DefaultHasher::new();
    for pool in [train, test] {
        pool.len().hash(&mut hasher);
        for video in pool.videos() {
            video.video_id.hash(&mut hasher);
            (video.pool_state == PoolState::Labeled).hash(&mut hasher);
            for clip in video.clips_by_index() {
                clip.clip_index.hash(&mut hasher);
                clip.true_step.index().hash(&mut hasher);
                for x in &clip.features {
                    x.to_bits().hash(&mut hasher);
                }
            }
        }
    }
    hasher.finish()
}

fn run_seed(
    cfg: &ExperimentConfig,
    template: &PoolTemplate,
    strategy: Strategy,
    seed: u64,
) -> SeedRun {
    let pools = match prepare_seed_pools(cfg, template, seed) {
        Ok(p) => p,
        Err(e) => {
            return SeedRun {
                seed,
                pool_fingerprint: 0,
                cycles: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    };
    let mut train_pool = pools.train;
    let test_pool = pools.test;
    let n_train = train_pool.len();
    let budget = ((cfg.budget_frac * n_train as f64).round() as usize).max(1);
    let eps = cfg.epsilon();

    let mut cycles = Vec::with_capacity(cfg.cycles + 1);
    let mut error = None;
    for cycle in 0..=cfg.cycles {
        let started = Instant::now();
        let mut warnings = Vec::new();
        let labeled_count = train_pool.labeled_ids().len();
        let outcome = (|| -> Result<(MetricReport, Vec<String>), RunError> {
            let train_cfg = TrainConfig {
                seed: derive_seed(
                    derive_seed(cfg.train.seed, seed),
                    TRAIN_STREAM + cycle as u64,
                ),
                ..cfg.train.clone()
            };
            let model = train(&train_pool, &train_cfg)?;
            infer(&model, &mut train_pool)?;
            let metrics = evaluate(&test_pool, &model)?;

            let mut chosen = Vec::new();
            if cycle < cfg.cycles {
                if train_pool.unlabeled_ids().is_empty() {
                    warnings.push("unlabeled pool exhausted; selection skipped".to_string());
                } else {
                    let request = SelectionRequest {
                        pool: train_pool.view(),
                        budget,
                        seed: derive_seed(derive_seed(seed, SELECT_STREAM), cycle as u64),
                        eps,
                    };
                    let result = strategy.select(&request)?;
                    warnings.extend(result.diagnostics.notes.iter().cloned());
                    train_pool.move_to_labeled(&result.chosen)?;
                    chosen = result.chosen;
                }
            }
            Ok((metrics, chosen))
        })();
        match outcome {
            Ok((metrics, chosen)) => cycles.push(CycleReport {
                seed,
                cycle,
                labeled_count,
                chosen,
                metrics,
                wall_time_secs: started.elapsed().as_secs_f64(),
                warnings,
            }),
            Err(e) => {
                error = Some(format!("cycle {cycle}: {e}"));
                break;
            }
        }
    }
    SeedRun {
        seed,
        pool_fingerprint: pools.fingerprint,
        cycles,
        error,
    }
}

fn run_strategy(
    cfg: &ExperimentConfig,
    template: &PoolTemplate,
    strategy: Strategy,
) -> StrategyRun {
    let seed_runs: Vec<SeedRun> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, template, strategy, seed))
        .collect();
    StrategyRun {
        strategy: strategy.name().to_string(),
        seed_runs,
    }
}

fn with_worker_pool<R: Send>(
    workers: Option<usize>,
    body: impl FnOnce() -> R + Send,
) -> Result<R, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Runtime(format!("worker pool: {e}")))?;
    Ok(pool.install(body))
}

/// Runs one strategy over every configured seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<StrategyRun, RunError> {
    let resolved = cfg.resolve()?;
    let template = PoolTemplate::from_source(&cfg.pool)?;
    with_worker_pool(cfg.workers, || {
        run_strategy(cfg, &template, resolved.strategy)
    })
}

/// Runs several strategies over shared pools and seeds (paired design) and
/// aggregates per-cycle means and standard deviations.
pub fn compare_strategies(
    cfg: &ExperimentConfig,
    strategies: &[String],
) -> Result<ComparisonReport, RunError> {
    if strategies.is_empty() {
        return Err(RunError::Config(ConfigError::Invalid(
            "compare needs at least one strategy".into(),
        )));
    }
    let parsed: Vec<Strategy> = strategies
        .iter()
        .map(|name| Strategy::parse(name))
        .collect::<Result<_, _>>()
        .map_err(ConfigError::from)?;
    cfg.validate_common()?;
    let template = PoolTemplate::from_source(&cfg.pool)?;
    let runs: Vec<StrategyRun> = with_worker_pool(cfg.workers, || {
        parsed
            .iter()
            .map(|&s| run_strategy(cfg, &template, s))
            .collect()
    })?;
    verify_pairing(&runs)?;
    let summary = summarize_runs(&runs);
    Ok(ComparisonReport { runs, summary })
}

/// Confirms the paired-design contract: per seed, every strategy saw the
/// same pool and reports identical cycle-0 metrics.
fn verify_pairing(runs: &[StrategyRun]) -> Result<(), RunError> {
    let Some(first) = runs.first() else {
        return Ok(());
    };
    for run in &runs[1..] {
        for (a, b) in first.seed_runs.iter().zip(&run.seed_runs) {
            if a.error.is_some() || b.error.is_some() {
                continue;
            }
            if a.pool_fingerprint != b.pool_fingerprint {
                return Err(RunError::Runtime(format!(
                    "paired-design violation: seed {} pools differ between '{}' and '{}'",
                    a.seed, first.strategy, run.strategy
                )));
            }
            let (Some(ra), Some(rb)) = (a.cycles.first(), b.cycles.first()) else {
                continue;
            };
            if ra.metrics != rb.metrics {
                return Err(RunError::Runtime(format!(
                    "paired-design violation: seed {} cycle-0 metrics differ between '{}' and '{}'",
                    a.seed, first.strategy, run.strategy
                )));
            }
        }
    }
    Ok(())
}

pub const METRIC_NAMES: [&str; 4] =
    ["accuracy", "macro_precision", "macro_recall", "macro_jaccard"];

pub fn metric_value(report: &MetricReport, name: &str) -> f64 {
    match name {
        "accuracy" => report.accuracy,
        "macro_precision" => report.macro_precision,
        "macro_recall" => report.macro_recall,
        "macro_jaccard" => report.macro_jaccard,
        other => unreachable!("unknown metric {other}"),
    }
}

fn summarize_runs(runs: &[StrategyRun]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for run in runs {
        let max_cycle = run
            .seed_runs
            .iter()
            .flat_map(|s| s.cycles.iter().map(|c| c.cycle))
            .max();
        let Some(max_cycle) = max_cycle else { continue };
        for cycle in 0..=max_cycle {
            for metric in METRIC_NAMES {
                let values: Vec<f64> = run
                    .seed_runs
                    .iter()
                    .flat_map(|s| s.cycles.iter())
                    .filter(|c| c.cycle == cycle)
                    .map(|c| metric_value(&c.metrics, metric))
                    .collect();
                if values.is_empty() {
                    continue;
                }
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let std = if values.len() < 2 {
                    0.0
                } else {
                    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
                        .sqrt()
                };
                rows.push(SummaryRow {
                    strategy: run.strategy.clone(),
                    cycle,
                    metric,
                    mean,
                    std,
                    seeds: values.len(),
                });
            }
        }
    }
    rows
}
