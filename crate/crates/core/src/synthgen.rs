//! Synthetic pool generation.
//!
//! Each video walks a canonical step order, independently skips steps, and
//! emits a segment of clips per kept step. Clip features are the step's
//! prototype vector (plus a fraction of a confusable partner's prototype,
//! when configured) with added Gaussian noise. Prototypes are drawn once per
//! pool and orthonormalized when the feature dimension allows, so class
//! separation is controlled by `noise_sigma` and the confusable mixes.
//!
//! Generation is fully seeded: the prototype bank and every video derive
//! their own RNG stream, so output is independent of generation order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::{ClipRecord, DatasetPool, PoolState, StepId, VideoRecord};
use crate::scalar::Scalar;
use crate::seeding::{derive_seed, rng_from_seed};
use rand::Rng;
use rand_distr::StandardNormal;

/// A pair of steps whose features bleed into each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusablePair {
    pub first: StepId,
    pub second: StepId,
    /// Fraction of the partner prototype added to each clip, `[0, 0.5)`;
    /// below one half the true class stays dominant.
    pub mix: f64,
}

/// Generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_videos: usize,
    /// Number of step classes `C`.
    pub steps: usize,
    /// Feature dimension `D`.
    pub feature_dim: usize,
    /// Order in which steps occur; a permutation of `0..steps`.
    pub canonical_order: Vec<StepId>,
    /// Probability of dropping each step from a video.
    pub skip_prob: f64,
    /// Inclusive clip-count range per kept step.
    pub segment_len_range: (usize, usize),
    pub noise_sigma: f64,
    /// Per-dimension std of a per-(video, step) appearance offset shared by
    /// all clips of that step within one video. Nonzero scatter makes clips
    /// within a video correlated, so label information accrues per video
    /// rather than per clip.
    #[serde(default)]
    pub video_scatter: f64,
    /// Number of appearance archetypes the offsets are drawn from. With a
    /// positive count, each video picks one archetype (a fixed offset per
    /// step) instead of fresh offsets, creating groups of similar-looking
    /// videos that redundancy-aware selection can exploit. 0 disables
    /// archetypes: every video gets its own offsets.
    #[serde(default)]
    pub appearance_modes: usize,
    pub confusable_pairs: Vec<ConfusablePair>,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_videos == 0 {
            return Err(Error::InvalidConfig("n_videos must be >= 1".into()));
        }
        if self.steps < 2 {
            return Err(Error::InvalidConfig("steps must be >= 2".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be >= 1".into()));
        }
        let mut seen = vec![false; self.steps];
        if self.canonical_order.len() != self.steps {
            return Err(Error::InvalidConfig(
                "canonical_order must list every step exactly once".into(),
            ));
        }
        for s in &self.canonical_order {
            if s.index() >= self.steps || seen[s.index()] {
                return Err(Error::InvalidConfig(
                    "canonical_order must be a permutation of 0..steps".into(),
                ));
            }
            seen[s.index()] = true;
        }
        if !(0.0..1.0).contains(&self.skip_prob) {
            return Err(Error::InvalidConfig("skip_prob must be in [0, 1)".into()));
        }
        let (lo, hi) = self.segment_len_range;
        if lo < 1 || hi < lo {
            return Err(Error::InvalidConfig(
                "segment_len_range must satisfy 1 <= min <= max".into(),
            ));
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidConfig("noise_sigma must be >= 0".into()));
        }
        if self.video_scatter < 0.0 || !self.video_scatter.is_finite() {
            return Err(Error::InvalidConfig("video_scatter must be >= 0".into()));
        }
        for pair in &self.confusable_pairs {
            if pair.first == pair.second
                || pair.first.index() >= self.steps
                || pair.second.index() >= self.steps
            {
                return Err(Error::InvalidConfig(format!(
                    "confusable pair ({}, {}) must name two distinct steps",
                    pair.first, pair.second
                )));
            }
            if !(0.0..0.5).contains(&pair.mix) {
                return Err(Error::InvalidConfig(format!(
                    "confusable mix {} must be in [0, 0.5)",
                    pair.mix
                )));
            }
        }
        Ok(())
    }
}

/// The per-class prototype vectors backing one generated pool.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPrototypeBank<T> {
    pub prototypes: Vec<Vec<T>>,
    /// Smallest pairwise prototype distance; a separability diagnostic,
    /// not an enforced bound.
    pub min_pairwise_distance: T,
}

fn gaussian_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Emission gain applied to every prototype direction. Calibrated once so
/// that the `default` preset's full-label accuracy sits mid-range between
/// chance and perfect; unit-norm prototypes would drown in the preset noise.
const PROTOTYPE_GAIN: f64 = 1.75;

/// Per-(video, step) appearance scatter of the `default` preset. Calibrated
/// together with [`PROTOTYPE_GAIN`] so the learning curve from 10% to 50%
/// labeled videos stays steep enough for selection strategies to separate.
const DEFAULT_VIDEO_SCATTER: f64 = 0.5;

/// Archetype count of the `default` preset; see `GenConfig::appearance_modes`.
const DEFAULT_APPEARANCE_MODES: usize = 12;

/// Draws `steps` prototype directions; Gram-Schmidt orthogonalized when
/// `dim >= steps`, otherwise independent draws. Each is normalized to
/// [`PROTOTYPE_GAIN`] length.
fn prototype_bank(steps: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let mut bank: Vec<Vec<f64>> = Vec::with_capacity(steps);
    while bank.len() < steps {
        let mut v = gaussian_vector(dim, &mut rng);
        if dim >= steps {
            for existing in &bank {
                let dot: f64 =
                    v.iter().zip(existing).map(|(a, b)| a * b).sum::<f64>()
                        / (PROTOTYPE_GAIN * PROTOTYPE_GAIN);
                for (x, e) in v.iter_mut().zip(existing) {
                    *x -= dot * e;
                }
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            // Degenerate draw; take the next one from the stream.
            continue;
        }
        for x in &mut v {
            *x *= PROTOTYPE_GAIN / norm;
        }
        bank.push(v);
    }
    bank
}

/// Generates a pool: all videos unlabeled, ground-truth steps set, no logits.
pub fn generate<T: Scalar>(cfg: &GenConfig) -> Result<DatasetPool<T>> {
    cfg.validate()?;
    let bank = prototype_bank(cfg.steps, cfg.feature_dim, derive_seed(cfg.seed, PROTO_STREAM));

    // Fold confusable partners into per-class emission prototypes.
    let mut emitted = bank.clone();
    for pair in &cfg.confusable_pairs {
        let (a, b) = (pair.first.index(), pair.second.index());
        for d in 0..cfg.feature_dim {
            emitted[a][d] += pair.mix * bank[b][d];
            emitted[b][d] += pair.mix * bank[a][d];
        }
    }

    let min_dist = min_pairwise_distance(&emitted);
    let advised = 4.0 * cfg.noise_sigma / (cfg.feature_dim as f64).sqrt();
    log::info!(
        "prototype separation {min_dist:.4} vs advisory threshold {advised:.4} \
         (4*sigma/sqrt(D))"
    );

    // Archetype bank: per (mode, step) offset vectors shared across videos.
    // Each archetype is centered across steps, so archetypes differ in
    // per-step appearance while their whole-video average stays near zero;
    // representations that pool clips across steps see archetypes only
    // through step-composition differences.
    let mode_bank: Vec<Vec<Vec<f64>>> = {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, MODE_STREAM));
        (0..cfg.appearance_modes)
            .map(|_| {
                let mut per_step: Vec<Vec<f64>> = (0..cfg.steps)
                    .map(|_| {
                        (0..cfg.feature_dim)
                            .map(|_| cfg.video_scatter * rng.sample::<f64, _>(StandardNormal))
                            .collect()
                    })
                    .collect();
                for d in 0..cfg.feature_dim {
                    let mean: f64 =
                        per_step.iter().map(|o| o[d]).sum::<f64>() / cfg.steps as f64;
                    for offsets in per_step.iter_mut() {
                        offsets[d] -= mean;
                    }
                }
                per_step
            })
            .collect()
    };

    let id_width = id_width(cfg.n_videos);
    let mut pool = DatasetPool::new(cfg.steps, cfg.feature_dim)?;
    for n in 0..cfg.n_videos {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, VIDEO_STREAM + n as u64));
        // Per-step appearance offsets for this video: one archetype pick, or
        // fresh draws when archetypes are disabled. Drawn before anything
        // else so the stream layout stays fixed.
        let offsets: Vec<Vec<f64>> = if cfg.appearance_modes > 0 {
            let mode = rng.random_range(0..cfg.appearance_modes);
            mode_bank[mode].clone()
        } else {
            (0..cfg.steps)
                .map(|_| {
                    (0..cfg.feature_dim)
                        .map(|_| cfg.video_scatter * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect()
        };
        let kept = loop {
            let kept: Vec<StepId> = cfg
                .canonical_order
                .iter()
                .copied()
                .filter(|_| rng.random::<f64>() >= cfg.skip_prob)
                .collect();
            // Redraw rather than emit an empty video.
            if !kept.is_empty() {
                break kept;
            }
        };
        let mut clips = Vec::new();
        for step in kept {
            let (lo, hi) = cfg.segment_len_range;
            let len = rng.random_range(lo..=hi);
            for _ in 0..len {
                let mut features = Vec::with_capacity(cfg.feature_dim);
                for d in 0..cfg.feature_dim {
                    let noise: f64 = rng.sample(StandardNormal);
                    features.push(T::from_config(
                        emitted[step.index()][d]
                            + offsets[step.index()][d]
                            + cfg.noise_sigma * noise,
                    ));
                }
                clips.push(ClipRecord {
                    clip_index: clips.len(),
                    features,
                    logits: None,
                    true_step: step,
                    pseudo_step: None,
                });
            }
        }
        pool.insert_video(VideoRecord {
            video_id: format!("v{n:0id_width$}"),
            clips,
            pool_state: PoolState::Unlabeled,
        })?;
    }
    Ok(pool)
}

/// The prototype bank a config would generate, for diagnostics.
pub fn bank_for<T: Scalar>(cfg: &GenConfig) -> Result<StepPrototypeBank<T>> {
    cfg.validate()?;
    let bank = prototype_bank(cfg.steps, cfg.feature_dim, derive_seed(cfg.seed, PROTO_STREAM));
    let min = min_pairwise_distance(&bank);
    Ok(StepPrototypeBank {
        prototypes: bank
            .into_iter()
            .map(|v| v.into_iter().map(T::from_config).collect())
            .collect(),
        min_pairwise_distance: T::from_config(min),
    })
}

fn min_pairwise_distance(bank: &[Vec<f64>]) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..bank.len() {
        for j in i + 1..bank.len() {
            let d: f64 = bank[i]
                .iter()
                .zip(&bank[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d < min {
                min = d;
            }
        }
    }
    min
}

fn id_width(n_videos: usize) -> usize {
    let digits = n_videos.saturating_sub(1).to_string().len();
    digits.max(4)
}

const PROTO_STREAM: u64 = 0x5050;
const MODE_STREAM: u64 = 0x6060;
const VIDEO_STREAM: u64 = 0x10_0000;

/// Named benchmark presets.
///
/// `default` sits in the regime where selection strategies can differ: eight
/// steps, two confusable pairs, and enough noise that a linear model tops out
/// well below perfect accuracy. `easy` removes the confusions and most of the
/// noise.
pub fn benchmark_suite(name: &str) -> Result<GenConfig> {
    let base = GenConfig {
        n_videos: 120,
        steps: 8,
        feature_dim: 32,
        canonical_order: (0..8).map(StepId::new).collect(),
        skip_prob: 0.15,
        segment_len_range: (3, 10),
        noise_sigma: 0.6,
        video_scatter: DEFAULT_VIDEO_SCATTER,
        appearance_modes: DEFAULT_APPEARANCE_MODES,
        confusable_pairs: vec![
            ConfusablePair {
                first: StepId::new(0),
                second: StepId::new(1),
                mix: 0.3,
            },
            ConfusablePair {
                first: StepId::new(4),
                second: StepId::new(5),
                mix: 0.3,
            },
        ],
        seed: 0,
    };
    match name {
        "default" => Ok(base),
        "easy" => Ok(GenConfig {
            noise_sigma: 0.2,
            video_scatter: 0.0,
            appearance_modes: 0,
            confusable_pairs: vec![],
            ..base
        }),
        other => Err(Error::InvalidConfig(format!(
            "unknown benchmark preset '{other}'; available presets: default, easy"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn tiny_config() -> GenConfig {
        GenConfig {
            n_videos: 6,
            steps: 3,
            feature_dim: 4,
            canonical_order: vec![StepId::new(0), StepId::new(1), StepId::new(2)],
            skip_prob: 0.0,
            segment_len_range: (1, 1),
            noise_sigma: 0.0,
            video_scatter: 0.0,
            appearance_modes: 0,
            confusable_pairs: vec![],
            seed: 7,
        }
    }

    #[test]
    fn degenerate_schedule_yields_canonical_labels() {
        let pool = generate::<f64>(&tiny_config()).unwrap();
        for video in pool.videos() {
            assert_eq!(video.clip_count(), 3);
            let labels: Vec<usize> = video
                .clips_by_index()
                .iter()
                .map(|c| c.true_step.index())
                .collect();
            assert_eq!(labels, vec![0, 1, 2]);
        }
    }

    #[test]
    fn zero_noise_clips_equal_prototypes() {
        let cfg = tiny_config();
        let pool = generate::<f64>(&cfg).unwrap();
        let bank = bank_for::<f64>(&cfg).unwrap();
        for video in pool.videos() {
            for clip in &video.clips {
                assert_eq!(clip.features, bank.prototypes[clip.true_step.index()]);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = benchmark_suite("default").unwrap();
        let a = generate::<f64>(&cfg).unwrap();
        let b = generate::<f64>(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_match_emitting_segment() {
        let mut cfg = tiny_config();
        cfg.skip_prob = 0.3;
        cfg.segment_len_range = (2, 4);
        cfg.noise_sigma = 0.4;
        cfg.n_videos = 20;
        let pool = generate::<f64>(&cfg).unwrap();
        for video in pool.videos() {
            assert!(video.clip_count() >= 2);
            // Labels must appear in canonical order, contiguous per segment.
            let labels: Vec<usize> = video
                .clips_by_index()
                .iter()
                .map(|c| c.true_step.index())
                .collect();
            let mut dedup = labels.clone();
            dedup.dedup();
            let mut sorted = dedup.clone();
            sorted.sort_unstable();
            assert_eq!(dedup, sorted, "segments out of canonical order: {labels:?}");
        }
    }

    #[test]
    fn default_preset_matches_documented_values() {
        let cfg = benchmark_suite("default").unwrap();
        assert_eq!(cfg.n_videos, 120);
        assert_eq!(cfg.steps, 8);
        assert_eq!(cfg.feature_dim, 32);
        assert_eq!(cfg.segment_len_range, (3, 10));
        assert_eq!(cfg.noise_sigma, 0.6);
        assert_eq!(cfg.skip_prob, 0.15);
        assert_eq!(cfg.confusable_pairs.len(), 2);
        assert!(cfg.confusable_pairs.iter().all(|p| p.mix == 0.3));

        let easy = benchmark_suite("easy").unwrap();
        assert_eq!(easy.noise_sigma, 0.2);
        assert!(easy.confusable_pairs.is_empty());

        let err = benchmark_suite("hard").unwrap_err();
        assert!(err.to_string().contains("default"));
    }

    #[test]
    fn default_preset_has_diverse_step_compositions() {
        let cfg = benchmark_suite("default").unwrap();
        let pool = generate::<f64>(&cfg).unwrap();
        let compositions: BTreeSet<Vec<usize>> = pool
            .videos()
            .map(|v| {
                let mut steps: Vec<usize> =
                    v.clips.iter().map(|c| c.true_step.index()).collect();
                steps.sort_unstable();
                steps.dedup();
                steps
            })
            .collect();
        assert!(
            compositions.len() >= 3,
            "expected >= 3 distinct step compositions, got {}",
            compositions.len()
        );
    }

    #[test]
    fn prototypes_are_orthogonal_with_fixed_gain_when_dim_allows() {
        let bank = bank_for::<f64>(&tiny_config()).unwrap();
        for (i, p) in bank.prototypes.iter().enumerate() {
            let norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - PROTOTYPE_GAIN).abs() < 1e-9);
            for q in bank.prototypes.iter().skip(i + 1) {
                let dot: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-9);
            }
        }
        // Orthogonal equal-length prototypes sit sqrt(2) * gain apart.
        assert!((bank.min_pairwise_distance - PROTOTYPE_GAIN * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = tiny_config();
        cfg.segment_len_range = (0, 3);
        assert!(generate::<f64>(&cfg).is_err());

        let mut cfg = tiny_config();
        cfg.canonical_order = vec![StepId::new(0), StepId::new(0), StepId::new(1)];
        assert!(generate::<f64>(&cfg).is_err());

        let mut cfg = tiny_config();
        cfg.confusable_pairs = vec![ConfusablePair {
            first: StepId::new(0),
            second: StepId::new(1),
            mix: 0.5,
        }];
        assert!(generate::<f64>(&cfg).is_err());
    }
}
