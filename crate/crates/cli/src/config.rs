//! Experiment configuration: the declarative description of one AL run.
//!
//! A config can come from a TOML file, from CLI flags, or from a file with
//! flag overrides on top. Validation happens once, producing a
//! [`ResolvedConfig`] with the strategy parsed and the epsilon constructed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use stepal_core::learner::TrainConfig;
use stepal_core::strategies::Strategy;
use stepal_core::synthgen::{benchmark_suite, GenConfig};
use stepal_core::uncertainty::Epsilon;
use stepal_core::Real;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("{0}")]
    Invalid(String),
}

impl From<stepal_core::Error> for ConfigError {
    fn from(e: stepal_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

/// Where the pool comes from: a named preset, a full generator config, or a
/// manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoolSource {
    Preset { preset: String },
    Manifest { manifest: PathBuf },
    Generate { generate: GenConfig },
}

impl Default for PoolSource {
    fn default() -> Self {
        PoolSource::Preset {
            preset: "default".into(),
        }
    }
}

pub const DEFAULT_INITIAL_LABEL_FRAC: f64 = 0.10;
pub const DEFAULT_BUDGET_FRAC: f64 = 0.10;
pub const DEFAULT_CYCLES: usize = 4;

fn default_initial_frac() -> f64 {
    DEFAULT_INITIAL_LABEL_FRAC
}

fn default_budget_frac() -> f64 {
    DEFAULT_BUDGET_FRAC
}

fn default_cycles() -> usize {
    DEFAULT_CYCLES
}

fn default_eps() -> f64 {
    Epsilon::<Real>::DEFAULT_VALUE
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub pool: PoolSource,
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default = "default_initial_frac")]
    pub initial_label_frac: f64,
    #[serde(default = "default_budget_frac")]
    pub budget_frac: f64,
    /// Number of selection cycles R; metrics are reported for r = 0..=R.
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default)]
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for per-seed parallelism; absent means the default.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pool: PoolSource::default(),
            strategy: None,
            initial_label_frac: DEFAULT_INITIAL_LABEL_FRAC,
            budget_frac: DEFAULT_BUDGET_FRAC,
            cycles: DEFAULT_CYCLES,
            train: TrainConfig::default(),
            seeds: vec![0],
            eps: default_eps(),
            output_dir: default_output_dir(),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Validates everything and resolves the strategy name and epsilon.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let strategy_name = self.strategy.as_deref().ok_or_else(|| {
            ConfigError::Invalid("no strategy given (set `strategy` or pass --strategy)".into())
        })?;
        let strategy = Strategy::parse(strategy_name)?;
        self.validate_common()?;
        Ok(ResolvedConfig {
            config: self.clone(),
            strategy,
        })
    }

    /// Validation shared by `run` and `compare` (which supplies its own
    /// strategy list).
    pub fn validate_common(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.initial_label_frac) || self.initial_label_frac == 0.0 {
            return Err(ConfigError::Invalid(format!(
                "initial_label_frac must be in (0, 1], got {}",
                self.initial_label_frac
            )));
        }
        if !(0.0..=1.0).contains(&self.budget_frac) || self.budget_frac == 0.0 {
            return Err(ConfigError::Invalid(format!(
                "budget_frac must be in (0, 1], got {}",
                self.budget_frac
            )));
        }
        let total = self.initial_label_frac + self.cycles as f64 * self.budget_frac;
        if total > 1.0 + 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "initial_label_frac + cycles * budget_frac = {total:.3} exceeds 1"
            )));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must not be empty".into()));
        }
        Epsilon::<Real>::new(self.eps)?;
        self.train.validate()?;
        if let PoolSource::Preset { preset } = &self.pool {
            benchmark_suite(preset)?;
        }
        if let PoolSource::Generate { generate } = &self.pool {
            generate.validate()?;
        }
        Ok(())
    }

    pub fn epsilon(&self) -> Epsilon<Real> {
        Epsilon::new(self.eps).expect("validated")
    }
}

/// A validated config with the strategy handle resolved.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub strategy: Strategy,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            strategy = "stepal"
            seeds = [0, 1]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.initial_label_frac, 0.10);
        assert_eq!(cfg.budget_frac, 0.10);
        assert_eq!(cfg.cycles, 4);
        assert_eq!(cfg.pool, PoolSource::Preset { preset: "default".into() });
        assert!(cfg.resolve().is_ok());
    }

    #[test]
    fn pool_variants_parse() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            strategy = "random"
            seeds = [3]
            [pool]
            manifest = "pool.bin"
            "#,
        )
        .unwrap();
        assert_eq!(
            cfg.pool,
            PoolSource::Manifest { manifest: PathBuf::from("pool.bin") }
        );

        let cfg = ExperimentConfig::from_toml_str(
            r#"
            strategy = "random"
            seeds = [3]
            [pool.generate]
            n_videos = 10
            steps = 3
            feature_dim = 4
            canonical_order = [0, 1, 2]
            skip_prob = 0.1
            segment_len_range = [2, 5]
            noise_sigma = 0.4
            confusable_pairs = []
            seed = 9
            "#,
        )
        .unwrap();
        match cfg.pool {
            PoolSource::Generate { generate } => assert_eq!(generate.n_videos, 10),
            other => panic!("unexpected pool source {other:?}"),
        }
    }

    #[test]
    fn partial_train_table_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            strategy = "entropy"
            seeds = [0]
            [train]
            epochs = 10
            "#,
        )
        .unwrap();
        assert_eq!(cfg.train.epochs, 10);
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.train.learning_rate, 0.1);
    }

    #[test]
    fn bad_fractions_and_budgets_are_rejected() {
        let mut cfg = ExperimentConfig {
            strategy: Some("random".into()),
            ..ExperimentConfig::default()
        };
        cfg.initial_label_frac = 0.0;
        assert!(cfg.resolve().is_err());

        cfg.initial_label_frac = 0.5;
        cfg.budget_frac = 0.2;
        cfg.cycles = 4; // 0.5 + 0.8 > 1
        assert!(cfg.resolve().is_err());

        cfg.budget_frac = 0.1;
        assert!(cfg.resolve().is_ok());
    }

    #[test]
    fn unknown_strategy_and_preset_are_rejected() {
        let cfg = ExperimentConfig {
            strategy: Some("coregcn".into()),
            ..ExperimentConfig::default()
        };
        assert!(cfg.resolve().is_err());

        let cfg = ExperimentConfig {
            strategy: Some("random".into()),
            pool: PoolSource::Preset { preset: "hard".into() },
            ..ExperimentConfig::default()
        };
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str(
            r#"
            strategy = "random"
            seeds = [0]
            tpyo = 1
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("tpyo"));
    }
}
