//! Video-level active learning over pools of step-structured "videos".
//!
//! A video here is an ordered sequence of clips, each carrying a fixed-size
//! feature vector and (once a model has run) class logits. The crate provides:
//!
//! - the shared pool data model ([`pool`]),
//! - probability / entropy / margin scoring ([`uncertainty`]),
//! - the step-aware video representation built from pseudo-labels ([`repr`]),
//! - weighted k-means with nearest-to-center selection ([`wkmeans`]),
//! - the selection strategies themselves ([`strategies`]): entropy-weighted
//!   clustering on step-aware representations plus the classic baselines
//!   (random, margin, entropy, coreset, k-means variants),
//! - a softmax-regression clip classifier standing in for a deep backbone
//!   ([`learner`]),
//! - a synthetic pool generator with controllable class structure
//!   ([`synthgen`]),
//! - clip-wise evaluation metrics ([`metrics`]).
//!
//! All numeric code is generic over a [`Scalar`] (`f32` or `f64`); the
//! [`Real`] alias fixes the default precision used by the experiment harness.

pub mod error;
pub mod learner;
pub mod metrics;
pub mod pool;
pub mod repr;
pub mod scalar;
pub mod seeding;
pub mod strategies;
pub mod synthgen;
pub mod uncertainty;
pub mod wkmeans;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar used by the experiment harness and the CLI.
pub type Real = f64;

/// A dataset pool at the default precision.
pub type Pool = pool::DatasetPool<Real>;

/// A trained clip classifier at the default precision.
pub type Model = learner::LinearModel<Real>;
