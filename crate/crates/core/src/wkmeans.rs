//! Weighted k-means with nearest-to-center selection.
//!
//! Minimizes `sum_i w_i * |x_i - c_assign(i)|^2` by Lloyd iteration from a
//! weighted k-means++ initialization (first center drawn with probability
//! proportional to weight, later centers proportional to weight times squared
//! distance to the nearest chosen center). The best of `restarts` runs by
//! objective is returned; everything is deterministic given the seed.
//!
//! Selection picks, for each cluster in index order, the eligible point
//! closest to that center, never reusing a point chosen for an earlier
//! cluster.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::scalar::{squared_distance, Scalar};
use crate::seeding::{derive_seed, rng_from_seed};
use rand::Rng;

/// One clusterable sample: a video id, its vector, and a nonnegative weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoint<T> {
    pub id: String,
    pub vector: Vec<T>,
    pub weight: T,
}

/// Lloyd-iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub restarts: usize,
    pub max_iter: usize,
    /// Relative objective-improvement threshold that stops iteration.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            restarts: 10,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

/// A fitted clustering: centers, per-id assignment, and the weighted
/// objective those two induce.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T> {
    pub centers: Vec<Vec<T>>,
    pub assignment: BTreeMap<String, usize>,
    pub objective: T,
    pub iterations_run: usize,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn cluster_count(&self) -> usize {
        self.centers.len()
    }

    /// Recomputes the objective from centers and assignment; used by tests
    /// to confirm the cached value.
    pub fn recompute_objective(&self, points: &[WeightedPoint<T>]) -> T {
        let mut acc = T::zero();
        for p in points {
            let k = self.assignment[&p.id];
            acc += p.weight * squared_distance(&p.vector, &self.centers[k]);
        }
        acc
    }
}

/// Runs weighted k-means.
///
/// `k` is clamped to the number of distinct vectors. All-zero weights fall
/// back to uniform weights with a warning; negative or non-finite input is
/// rejected.
pub fn weighted_kmeans<T: Scalar>(
    points: &[WeightedPoint<T>],
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<ClusterModel<T>> {
    if points.is_empty() {
        return Err(Error::EmptyInput {
            context: "weighted_kmeans points",
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if params.restarts == 0 || params.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "restarts and max_iter must be >= 1".into(),
        ));
    }
    let dim = points[0].vector.len();
    for p in points {
        if p.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "weighted_kmeans vectors",
                expected: dim,
                got: p.vector.len(),
            });
        }
        if let Some(index) = p.vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        if !p.weight.is_finite() || p.weight < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "weight of '{}' must be finite and >= 0, got {}",
                p.id, p.weight
            )));
        }
    }

    let weights: Vec<T> = if points.iter().all(|p| p.weight == T::zero()) {
        log::warn!("all clustering weights are zero; falling back to uniform weights");
        vec![T::one(); points.len()]
    } else {
        points.iter().map(|p| p.weight).collect()
    };

    let distinct = count_distinct_vectors(points);
    let k = if k > distinct {
        log::warn!("clamping k from {k} to {distinct} distinct vectors");
        distinct
    } else {
        k
    };

    let mut best: Option<ClusterModel<T>> = None;
    for restart in 0..params.restarts {
        let run = lloyd_once(points, &weights, k, derive_seed(seed, restart as u64), params);
        // Strict comparison keeps the lowest restart index on ties.
        let better = match &best {
            None => true,
            Some(b) => run.objective < b.objective,
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn count_distinct_vectors<T: Scalar>(points: &[WeightedPoint<T>]) -> usize {
    let mut reps: Vec<&[T]> = Vec::new();
    for p in points {
        if !reps.iter().any(|r| *r == p.vector.as_slice()) {
            reps.push(&p.vector);
        }
    }
    reps.len()
}

fn lloyd_once<T: Scalar>(
    points: &[WeightedPoint<T>],
    weights: &[T],
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> ClusterModel<T> {
    let mut centers = plus_plus_init(points, weights, k, seed);
    let mut assignment = vec![0usize; points.len()];
    let mut prev_objective: Option<T> = None;
    let mut iterations_run = 0;

    loop {
        iterations_run += 1;
        // Assignment pass: nearest center, ties to the lowest cluster index.
        let mut objective = T::zero();
        for (i, p) in points.iter().enumerate() {
            let mut best_k = 0;
            let mut best_d = squared_distance(&p.vector, &centers[0]);
            for (kk, center) in centers.iter().enumerate().skip(1) {
                let d = squared_distance(&p.vector, center);
                if d < best_d {
                    best_d = d;
                    best_k = kk;
                }
            }
            assignment[i] = best_k;
            objective += weights[i] * best_d;
        }
        if let Some(prev) = prev_objective {
            debug_assert!(
                objective <= prev + prev * T::SUM_TOLERANCE + T::SUM_TOLERANCE,
                "Lloyd objective increased: {prev} -> {objective}"
            );
            let improvement = prev - objective;
            if improvement <= prev * T::from_config(params.tol) {
                break;
            }
        }
        prev_objective = Some(objective);
        if iterations_run >= params.max_iter {
            break;
        }

        // Update pass: weighted mean of each cluster's members.
        let dim = centers[0].len();
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut weight_totals = vec![T::zero(); k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let kk = assignment[i];
            counts[kk] += 1;
            weight_totals[kk] += weights[i];
            for (acc, &x) in sums[kk].iter_mut().zip(&p.vector) {
                *acc += weights[i] * x;
            }
        }
        for kk in 0..k {
            if counts[kk] == 0 {
                // Empty cluster: reseed at the point with the largest
                // weighted squared distance to its assigned center.
                let idx = reseed_candidate(points, weights, &centers, &assignment);
                centers[kk] = points[idx].vector.clone();
            } else if weight_totals[kk] == T::zero() {
                // Members exist but carry zero weight: use their plain mean.
                let mut mean = vec![T::zero(); dim];
                for (i, p) in points.iter().enumerate() {
                    if assignment[i] == kk {
                        for (acc, &x) in mean.iter_mut().zip(&p.vector) {
                            *acc += x;
                        }
                    }
                }
                let n = T::from_usize(counts[kk]).expect("count fits scalar");
                for m in &mut mean {
                    *m = *m / n;
                }
                centers[kk] = mean;
            } else {
                let total = weight_totals[kk];
                for acc in sums[kk].iter_mut() {
                    *acc = *acc / total;
                }
                centers[kk] = std::mem::take(&mut sums[kk]);
            }
        }
    }

    let objective = {
        let mut acc = T::zero();
        for (i, p) in points.iter().enumerate() {
            acc += weights[i] * squared_distance(&p.vector, &centers[assignment[i]]);
        }
        acc
    };
    ClusterModel {
        centers,
        assignment: points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), assignment[i]))
            .collect(),
        objective,
        iterations_run,
    }
}

fn reseed_candidate<T: Scalar>(
    points: &[WeightedPoint<T>],
    weights: &[T],
    centers: &[Vec<T>],
    assignment: &[usize],
) -> usize {
    let mut best = 0;
    let mut best_score = T::neg_infinity();
    for (i, p) in points.iter().enumerate() {
        let score = weights[i] * squared_distance(&p.vector, &centers[assignment[i]]);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

/// Weighted k-means++ seeding.
fn plus_plus_init<T: Scalar>(
    points: &[WeightedPoint<T>],
    weights: &[T],
    k: usize,
    seed: u64,
) -> Vec<Vec<T>> {
    let mut rng = rng_from_seed(seed);
    let mut centers: Vec<Vec<T>> = Vec::with_capacity(k);

    let first_mass: Vec<f64> = weights.iter().map(|w| w.to_f64().unwrap_or(0.0)).collect();
    let first = sample_index(&mut rng, &first_mass)
        .unwrap_or_else(|| fallback_pick(points, &centers));
    centers.push(points[first].vector.clone());

    let mut nearest: Vec<T> = points
        .iter()
        .map(|p| squared_distance(&p.vector, &centers[0]))
        .collect();
    while centers.len() < k {
        let mass: Vec<f64> = weights
            .iter()
            .zip(&nearest)
            .map(|(w, d)| w.to_f64().unwrap_or(0.0) * d.to_f64().unwrap_or(0.0))
            .collect();
        let next = sample_index(&mut rng, &mass)
            .unwrap_or_else(|| fallback_pick(points, &centers));
        centers.push(points[next].vector.clone());
        let newest = centers.last().expect("just pushed");
        for (slot, p) in nearest.iter_mut().zip(points) {
            let d = squared_distance(&p.vector, newest);
            if d < *slot {
                *slot = d;
            }
        }
    }
    centers
}

/// Draws an index with probability proportional to `mass`; `None` when the
/// total mass is zero.
fn sample_index(rng: &mut impl Rng, mass: &[f64]) -> Option<usize> {
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &m) in mass.iter().enumerate() {
        acc += m;
        if target < acc {
            return Some(i);
        }
    }
    // Rounding can leave target at the very top; take the last positive mass.
    mass.iter().rposition(|&m| m > 0.0)
}

/// Deterministic stand-in when the sampling mass vanishes: the point farthest
/// from the chosen centers (ties to the lowest index).
fn fallback_pick<T: Scalar>(points: &[WeightedPoint<T>], centers: &[Vec<T>]) -> usize {
    if centers.is_empty() {
        return 0;
    }
    let mut best = 0;
    let mut best_d = T::neg_infinity();
    for (i, p) in points.iter().enumerate() {
        let d = centers
            .iter()
            .map(|c| squared_distance(&p.vector, c))
            .fold(T::infinity(), T::min);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// For each cluster in index order, the closest eligible point not already
/// chosen; distance ties break to the lowest id. Clusters whose remaining
/// eligible set is empty contribute nothing, so the result has length at
/// most `k`.
pub fn nearest_to_centers<T: Scalar>(
    model: &ClusterModel<T>,
    points: &[WeightedPoint<T>],
    eligible: &BTreeSet<String>,
) -> Vec<String> {
    let mut chosen: Vec<String> = Vec::new();
    for center in &model.centers {
        let mut best: Option<(T, &str)> = None;
        for p in points {
            if !eligible.contains(&p.id) || chosen.iter().any(|c| c == &p.id) {
                continue;
            }
            let d = squared_distance(&p.vector, center);
            let closer = match &best {
                None => true,
                Some((bd, bid)) => d < *bd || (d == *bd && p.id.as_str() < *bid),
            };
            if closer {
                best = Some((d, &p.id));
            }
        }
        if let Some((_, id)) = best {
            chosen.push(id.to_string());
        }
    }
    chosen
}
