//! Selection strategies: the step-aware entropy-weighted 'stepal' selector,
//! the classic baselines (random, margin, entropy, coreset), and the
//! clustering ablations (kmeans, me-kmeans, ewc, mean-prob-entropy).
//!
//! Every strategy consumes a [`SelectionRequest`] holding a label-blind pool
//! view, a budget, a seed, and the epsilon guard, and returns the chosen
//! unlabeled video ids plus per-video diagnostics. Given the same pool
//! snapshot and seed, every strategy is a pure function.
//!
//! Videos whose clips lack logits are excluded from scoring with a note
//! instead of failing the whole selection; a pool with no scorable video at
//! all is an error.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::pool::{PoolView, VideoView};
use crate::repr::build_repr;
use crate::scalar::{l2_norm, squared_distance, Scalar};
use crate::seeding::rng_from_seed;
use crate::uncertainty::{margin_score, mean_prob_entropy, softmax, video_entropy, Epsilon};
use crate::wkmeans::{nearest_to_centers, weighted_kmeans, KMeansParams, WeightedPoint};

/// Inputs shared by all strategies.
pub struct SelectionRequest<'a, T> {
    pub pool: PoolView<'a, T>,
    /// Number of videos to annotate this cycle; also the number of clusters.
    pub budget: usize,
    pub seed: u64,
    pub eps: Epsilon<T>,
}

/// Scores a strategy attached to one video while ranking it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VideoDiagnostics {
    pub entropy: Option<f64>,
    pub margin: Option<f64>,
    pub cluster: Option<usize>,
    pub distance_to_center: Option<f64>,
    pub repr_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionDiagnostics {
    pub strategy: &'static str,
    /// Budget after clamping to the unlabeled pool size.
    pub effective_budget: usize,
    pub per_video: BTreeMap<String, VideoDiagnostics>,
    pub notes: Vec<String>,
}

/// The outcome of one selection round.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Chosen unlabeled video ids, no duplicates, length <= budget.
    pub chosen: Vec<String>,
    pub diagnostics: SelectionDiagnostics,
}

/// The registered strategies; names are the CLI's stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Random,
    Margin,
    Entropy,
    Coreset,
    KMeans,
    MeKMeans,
    Ewc,
    StepAl,
    MeanProbEntropy,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::Random,
        Strategy::Margin,
        Strategy::Entropy,
        Strategy::Coreset,
        Strategy::KMeans,
        Strategy::MeKMeans,
        Strategy::Ewc,
        Strategy::StepAl,
        Strategy::MeanProbEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Margin => "margin",
            Strategy::Entropy => "entropy",
            Strategy::Coreset => "coreset",
            Strategy::KMeans => "kmeans",
            Strategy::MeKMeans => "me-kmeans",
            Strategy::Ewc => "ewc",
            Strategy::StepAl => "stepal",
            Strategy::MeanProbEntropy => "mean-prob-entropy",
        }
    }

    /// Resolves a strategy by name, case-insensitively.
    pub fn parse(name: &str) -> Result<Strategy> {
        let lowered = name.to_ascii_lowercase();
        Strategy::ALL
            .into_iter()
            .find(|s| s.name() == lowered)
            .ok_or_else(|| Error::UnknownStrategy {
                name: name.to_string(),
                valid: Strategy::ALL
                    .iter()
                    .map(|s| s.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    /// Runs the strategy on a pool snapshot.
    pub fn select<T: Scalar>(self, req: &SelectionRequest<'_, T>) -> Result<SelectionResult> {
        if req.budget == 0 {
            return Err(Error::InvalidParameter("budget must be >= 1".into()));
        }
        let unlabeled = unlabeled_videos(&req.pool);
        if unlabeled.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut diag = SelectionDiagnostics {
            strategy: self.name(),
            effective_budget: req.budget.min(unlabeled.len()),
            ..Default::default()
        };
        if req.budget > unlabeled.len() {
            diag.notes.push(format!(
                "budget {} clamped to {} unlabeled videos",
                req.budget,
                unlabeled.len()
            ));
        }
        let budget = diag.effective_budget;
        let chosen = match self {
            Strategy::Random => select_random(req, &unlabeled, budget),
            Strategy::Entropy => select_by_score(
                req,
                &unlabeled,
                budget,
                &mut diag,
                true,
                RecordAs::Entropy,
                |view, eps| video_entropy(view, eps),
            )?,
            Strategy::MeanProbEntropy => select_by_score(
                req,
                &unlabeled,
                budget,
                &mut diag,
                true,
                RecordAs::Entropy,
                |view, eps| mean_prob_entropy(view, eps),
            )?,
            Strategy::Margin => select_by_score(
                req,
                &unlabeled,
                budget,
                &mut diag,
                false,
                RecordAs::Margin,
                |view, eps| mean_clip_margin(view, eps),
            )?,
            Strategy::Coreset => select_coreset(req, &unlabeled, budget, &mut diag),
            Strategy::KMeans => select_clustered(req, &unlabeled, budget, &mut diag, Clustered {
                vectors: VectorKind::MeanFeature,
                weights: WeightKind::Uniform,
                pick: PickRule::NearestToCenter,
            })?,
            Strategy::MeKMeans => select_clustered(req, &unlabeled, budget, &mut diag, Clustered {
                vectors: VectorKind::MeanFeature,
                weights: WeightKind::Uniform,
                pick: PickRule::MaxEntropyMember,
            })?,
            Strategy::Ewc => select_clustered(req, &unlabeled, budget, &mut diag, Clustered {
                vectors: VectorKind::MeanFeature,
                weights: WeightKind::Entropy,
                pick: PickRule::NearestToCenter,
            })?,
            Strategy::StepAl => select_clustered(req, &unlabeled, budget, &mut diag, Clustered {
                vectors: VectorKind::StepAware,
                weights: WeightKind::Entropy,
                pick: PickRule::NearestToCenter,
            })?,
        };
        debug_assert!(chosen.iter().collect::<BTreeSet<_>>().len() == chosen.len());
        Ok(SelectionResult {
            chosen,
            diagnostics: diag,
        })
    }
}

/// Convenience registry entry point mirroring the CLI contract.
pub fn strategy_registry(name: &str) -> Result<Strategy> {
    Strategy::parse(name)
}

fn unlabeled_videos<'a, T: Scalar>(pool: &PoolView<'a, T>) -> Vec<VideoView<'a, T>> {
    pool.videos()
        .filter(|v| v.pool_state() == crate::pool::PoolState::Unlabeled)
        .collect()
}

/// Drops videos without logits, noting each exclusion. Errors only when
/// nothing scorable remains.
fn require_logits<'a, T: Scalar>(
    videos: &[VideoView<'a, T>],
    diag: &mut SelectionDiagnostics,
) -> Result<Vec<VideoView<'a, T>>> {
    let mut kept = Vec::with_capacity(videos.len());
    for v in videos {
        if v.has_logits() {
            kept.push(*v);
        } else {
            log::warn!("excluding '{}' from selection: missing logits", v.video_id());
            diag.notes
                .push(format!("excluded '{}': missing logits", v.video_id()));
        }
    }
    if kept.is_empty() {
        return Err(Error::MissingLogits {
            video_id: videos[0].video_id().to_string(),
        });
    }
    Ok(kept)
}

fn select_random<T: Scalar>(
    req: &SelectionRequest<'_, T>,
    unlabeled: &[VideoView<'_, T>],
    budget: usize,
) -> Vec<String> {
    let mut rng = rng_from_seed(req.seed);
    let picked = rand::seq::index::sample(&mut rng, unlabeled.len(), budget);
    let mut chosen: Vec<String> = picked
        .into_iter()
        .map(|i| unlabeled[i].video_id().to_string())
        .collect();
    chosen.sort();
    chosen
}

enum RecordAs {
    Entropy,
    Margin,
}

/// Top-budget selection by a per-video score; ties break to the lowest id.
fn select_by_score<T: Scalar, F>(
    req: &SelectionRequest<'_, T>,
    unlabeled: &[VideoView<'_, T>],
    budget: usize,
    diag: &mut SelectionDiagnostics,
    higher_first: bool,
    record: RecordAs,
    score: F,
) -> Result<Vec<String>>
where
    F: Fn(&VideoView<'_, T>, Epsilon<T>) -> Result<T>,
{
    let candidates = require_logits(unlabeled, diag)?;
    let mut scored: Vec<(T, &str)> = Vec::with_capacity(candidates.len());
    for v in &candidates {
        let value = score(v, req.eps)?;
        let entry = diag.per_video.entry(v.video_id().to_string()).or_default();
        match record {
            RecordAs::Entropy => entry.entropy = value.to_f64(),
            RecordAs::Margin => entry.margin = value.to_f64(),
        }
        scored.push((value, v.video_id()));
    }
    scored.sort_by(|(sa, ida), (sb, idb)| {
        let ord = if higher_first {
            sb.partial_cmp(sa)
        } else {
            sa.partial_cmp(sb)
        };
        ord.expect("finite scores").then_with(|| ida.cmp(idb))
    });
    Ok(scored
        .into_iter()
        .take(budget.min(candidates.len()))
        .map(|(_, id)| id.to_string())
        .collect())
}

/// Mean clip margin of one video, ascending clip order.
fn mean_clip_margin<T: Scalar>(video: &VideoView<'_, T>, _eps: Epsilon<T>) -> Result<T> {
    let clips = video.clips_by_index();
    let mut acc = T::zero();
    for clip in &clips {
        let logits = clip.logits().ok_or_else(|| Error::MissingLogits {
            video_id: video.video_id().to_string(),
        })?;
        acc += margin_score(&softmax(logits)?);
    }
    Ok(acc / T::from_usize(clips.len()).expect("clip count fits scalar"))
}

/// k-center greedy: repeatedly pick the unlabeled video farthest from the
/// covered set (labeled videos plus earlier picks).
fn select_coreset<T: Scalar>(
    req: &SelectionRequest<'_, T>,
    unlabeled: &[VideoView<'_, T>],
    budget: usize,
    diag: &mut SelectionDiagnostics,
) -> Vec<String> {
    let candidate_vecs: Vec<(&str, Vec<T>)> = unlabeled
        .iter()
        .map(|v| (v.video_id(), crate::repr::global_average(v)))
        .collect();
    let mut covered: Vec<Vec<T>> = req
        .pool
        .videos()
        .filter(|v| v.pool_state() == crate::pool::PoolState::Labeled)
        .map(|v| crate::repr::global_average(&v))
        .collect();

    let mut chosen: Vec<String> = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(T, usize)> = None;
        for (i, (id, vec)) in candidate_vecs.iter().enumerate() {
            if chosen.iter().any(|c| c == id) {
                continue;
            }
            let min_d = covered
                .iter()
                .map(|c| squared_distance(vec, c))
                .fold(T::infinity(), T::min);
            // Strict > plus ascending-id iteration order keeps the lowest id
            // on ties (including the all-infinite empty-covered case).
            if best.map_or(true, |(bd, _)| min_d > bd) {
                best = Some((min_d, i));
            }
        }
        let (dist, index) = best.expect("budget <= candidate count");
        let (id, vec) = &candidate_vecs[index];
        diag.per_video
            .entry(id.to_string())
            .or_default()
            .distance_to_center = dist.to_f64().map(|d| d.sqrt()).filter(|d| d.is_finite());
        chosen.push(id.to_string());
        covered.push(vec.clone());
    }
    chosen
}

enum VectorKind {
    MeanFeature,
    StepAware,
}

enum WeightKind {
    Uniform,
    Entropy,
}

enum PickRule {
    NearestToCenter,
    MaxEntropyMember,
}

struct Clustered {
    vectors: VectorKind,
    weights: WeightKind,
    pick: PickRule,
}

fn select_clustered<T: Scalar>(
    req: &SelectionRequest<'_, T>,
    unlabeled: &[VideoView<'_, T>],
    budget: usize,
    diag: &mut SelectionDiagnostics,
    spec: Clustered,
) -> Result<Vec<String>> {
    // Uniform-weight nearest-to-center clustering reads only features, but
    // the max-entropy pick and entropy weighting need logits everywhere.
    let needs_logits = matches!(spec.weights, WeightKind::Entropy)
        || matches!(spec.pick, PickRule::MaxEntropyMember);
    let candidates = if needs_logits {
        require_logits(unlabeled, diag)?
    } else {
        unlabeled.to_vec()
    };
    let budget = budget.min(candidates.len());

    let mut entropies: BTreeMap<String, T> = BTreeMap::new();
    if needs_logits {
        for v in &candidates {
            let e = video_entropy(v, req.eps)?;
            entropies.insert(v.video_id().to_string(), e);
            diag.per_video
                .entry(v.video_id().to_string())
                .or_default()
                .entropy = e.to_f64();
        }
    }

    let mut points: Vec<WeightedPoint<T>> = Vec::with_capacity(candidates.len());
    for v in &candidates {
        let vector = match spec.vectors {
            VectorKind::MeanFeature => crate::repr::global_average(v),
            VectorKind::StepAware => {
                let z = build_repr(v, req.pool.step_count(), req.eps)?;
                let entry = diag.per_video.entry(v.video_id().to_string()).or_default();
                entry.repr_norm = l2_norm(z.flattened()).to_f64();
                z.into_flattened()
            }
        };
        let weight = match spec.weights {
            WeightKind::Uniform => T::one(),
            WeightKind::Entropy => entropies[v.video_id()],
        };
        points.push(WeightedPoint {
            id: v.video_id().to_string(),
            vector,
            weight,
        });
    }

    let model = weighted_kmeans(&points, budget, req.seed, &KMeansParams::default())?;
    for p in &points {
        let cluster = model.assignment[&p.id];
        let entry = diag.per_video.entry(p.id.clone()).or_default();
        entry.cluster = Some(cluster);
        entry.distance_to_center = squared_distance(&p.vector, &model.centers[cluster])
            .to_f64()
            .map(|d| d.sqrt());
    }

    let eligible: BTreeSet<String> = points.iter().map(|p| p.id.clone()).collect();
    let mut chosen = match spec.pick {
        PickRule::NearestToCenter => nearest_to_centers(&model, &points, &eligible),
        PickRule::MaxEntropyMember => {
            let mut picks = Vec::new();
            for k in 0..model.cluster_count() {
                let mut best: Option<(T, &str)> = None;
                for p in &points {
                    if model.assignment[&p.id] != k {
                        continue;
                    }
                    let e = entropies[&p.id];
                    let better = match &best {
                        None => true,
                        Some((be, bid)) => e > *be || (e == *be && p.id.as_str() < *bid),
                    };
                    if better {
                        best = Some((e, &p.id));
                    }
                }
                if let Some((_, id)) = best {
                    picks.push(id.to_string());
                }
            }
            picks
        }
    };

    // When k was clamped below the budget (duplicate vectors) the clustering
    // yields fewer picks than the contract requires; fill the gap with the
    // lowest-id remaining candidates.
    if chosen.len() < budget {
        diag.notes.push(format!(
            "cluster selection produced {} of {} picks; topping up by id",
            chosen.len(),
            budget
        ));
        for p in &points {
            if chosen.len() == budget {
                break;
            }
            if !chosen.iter().any(|c| c == &p.id) {
                chosen.push(p.id.clone());
            }
        }
    }
    Ok(chosen)
}
