//! Experiment harness for the video active-learning laboratory: pool
//! manifests, the train/select/annotate loop, paired strategy comparisons,
//! and the CSV/SVG outputs behind the `stepal` binary.

pub mod config;
pub mod experiment;
pub mod manifest;
pub mod plot;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, PoolSource};
pub use experiment::{
    compare_strategies, run_experiment, ComparisonReport, CycleReport, RunError, SeedRun,
    StrategyRun,
};
