//! Softmax-regression clip classifier.
//!
//! A deliberately small stand-in for a deep backbone: clip features are
//! dataset-provided embeddings, and the model is a linear map `W x + b`
//! trained with mini-batch gradient descent on mean cross-entropy plus an L2
//! penalty on the weights. It produces exactly what selection consumes:
//! clip logits and pseudo-labels of quality that improves with more labels.
//!
//! Training is retrained from scratch each call (no warm start) and is
//! bitwise deterministic given the data, config, and seed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::{DatasetPool, PoolState, StepId};
use crate::scalar::Scalar;
use crate::seeding::{derive_seed, rng_from_seed};
use crate::uncertainty::pseudo_label;
use rand::seq::SliceRandom;

/// Linear classifier: `logits(x) = W x + b` with `W` of shape `C x D`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    weights: Vec<T>,
    bias: Vec<T>,
    step_count: usize,
    feature_dim: usize,
    train_seed: u64,
}

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 64,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.l2 < 0.0 {
            return Err(Error::InvalidConfig("l2 must be >= 0".into()));
        }
        Ok(())
    }
}

impl<T: Scalar> LinearModel<T> {
    /// Zero-initialized model: uniform probabilities everywhere.
    pub fn zeros(step_count: usize, feature_dim: usize, train_seed: u64) -> Self {
        LinearModel {
            weights: vec![T::zero(); step_count * feature_dim],
            bias: vec![T::zero(); step_count],
            step_count,
            feature_dim,
            train_seed,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    /// Raw class scores for one clip.
    pub fn logits(&self, features: &[T]) -> Result<Vec<T>> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                context: "model feature input",
                expected: self.feature_dim,
                got: features.len(),
            });
        }
        let mut out = Vec::with_capacity(self.step_count);
        for c in 0..self.step_count {
            let row = &self.weights[c * self.feature_dim..(c + 1) * self.feature_dim];
            let mut acc = self.bias[c];
            for (w, x) in row.iter().zip(features) {
                acc += *w * *x;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Serializes to the flat binary model format:
    /// magic `SALM`, version u32, C u32, D u32 (all little-endian), then
    /// row-major weights and bias as 64-bit IEEE little-endian floats.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * (self.weights.len() + self.bias.len()));
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.step_count as u32).to_le_bytes());
        out.extend_from_slice(&(self.feature_dim as u32).to_le_bytes());
        for w in &self.weights {
            out.extend_from_slice(&w.to_f64().expect("finite weight").to_le_bytes());
        }
        for b in &self.bias {
            out.extend_from_slice(&b.to_f64().expect("finite bias").to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, offset: 0 };
        let magic = r.take(4)?;
        if magic != MODEL_MAGIC {
            return Err(Error::ModelFormat {
                offset: 0,
                detail: format!("bad magic {magic:02x?}, expected {MODEL_MAGIC:02x?}"),
            });
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::ModelFormat {
                offset: 4,
                detail: format!("unsupported version {version}, expected {MODEL_VERSION}"),
            });
        }
        let step_count = r.u32()? as usize;
        let feature_dim = r.u32()? as usize;
        let mut weights = Vec::with_capacity(step_count * feature_dim);
        for _ in 0..step_count * feature_dim {
            weights.push(T::from_config(r.f64()?));
        }
        let mut bias = Vec::with_capacity(step_count);
        for _ in 0..step_count {
            bias.push(T::from_config(r.f64()?));
        }
        if r.offset != bytes.len() {
            return Err(Error::ModelFormat {
                offset: r.offset as u64,
                detail: format!("{} trailing bytes", bytes.len() - r.offset),
            });
        }
        Ok(LinearModel {
            weights,
            bias,
            step_count,
            feature_dim,
            train_seed: 0,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

const MODEL_MAGIC: &[u8; 4] = b"SALM";
const MODEL_VERSION: u32 = 1;

struct ByteReader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(Error::ModelFormat {
                offset: self.offset as u64,
                detail: format!(
                    "truncated: need {n} bytes, {} remain",
                    self.bytes.len() - self.offset
                ),
            });
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// One labeled training sample borrowed from the pool.
struct Sample<'a, T> {
    features: &'a [T],
    label: usize,
}

/// Trains on the labeled videos of the pool.
///
/// Mini-batch gradient descent on mean cross-entropy plus `l2/2 * |W|^2`,
/// with a seeded shuffle per epoch. Indices inside each batch are processed
/// in ascending order so full-batch runs are independent of the shuffle.
pub fn train<T: Scalar>(pool: &DatasetPool<T>, cfg: &TrainConfig) -> Result<LinearModel<T>> {
    cfg.validate()?;
    let samples = labeled_samples(pool);
    if samples.is_empty() {
        return Err(Error::NoLabeledData);
    }
    let distinct_classes = {
        let mut seen = vec![false; pool.step_count()];
        for s in &samples {
            seen[s.label] = true;
        }
        seen.iter().filter(|&&b| b).count()
    };
    if distinct_classes < 2 {
        log::warn!("training data contains a single class; model will predict it everywhere");
    }

    let c = pool.step_count();
    let d = pool.feature_dim();
    let n = samples.len();
    let mut model = LinearModel::zeros(c, d, cfg.seed);
    let lr = T::from_config(cfg.learning_rate);
    let l2 = T::from_config(cfg.l2);

    let mut order: Vec<usize> = (0..n).collect();
    let mut grad_w = vec![T::zero(); c * d];
    let mut grad_b = vec![T::zero(); c];
    for epoch in 0..cfg.epochs {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut batch: Vec<usize> = batch.to_vec();
            batch.sort_unstable();
            accumulate_ce_gradient(&model, &samples, &batch, &mut grad_w, &mut grad_b);
            let scale = T::from_usize(batch.len()).expect("batch len fits scalar");
            for (i, w) in model.weights.iter_mut().enumerate() {
                *w = *w - lr * (grad_w[i] / scale + l2 * *w);
            }
            for (i, b) in model.bias.iter_mut().enumerate() {
                *b = *b - lr * (grad_b[i] / scale);
            }
        }
    }
    Ok(model)
}

fn labeled_samples<T: Scalar>(pool: &DatasetPool<T>) -> Vec<Sample<'_, T>> {
    let mut samples = Vec::new();
    for video in pool.videos() {
        if video.pool_state != PoolState::Labeled {
            continue;
        }
        for clip in video.clips_by_index() {
            samples.push(Sample {
                features: &clip.features,
                label: clip.true_step.index(),
            });
        }
    }
    samples
}

/// Adds the summed (not mean) cross-entropy gradient of `batch` into the
/// accumulators, which are cleared first.
fn accumulate_ce_gradient<T: Scalar>(
    model: &LinearModel<T>,
    samples: &[Sample<'_, T>],
    batch: &[usize],
    grad_w: &mut [T],
    grad_b: &mut [T],
) {
    grad_w.fill(T::zero());
    grad_b.fill(T::zero());
    let d = model.feature_dim;
    for &i in batch {
        let sample = &samples[i];
        let logits = model.logits(sample.features).expect("validated dims");
        let probs = stable_softmax(&logits);
        for c in 0..model.step_count {
            let indicator = if c == sample.label { T::one() } else { T::zero() };
            let delta = probs[c] - indicator;
            grad_b[c] += delta;
            let row = &mut grad_w[c * d..(c + 1) * d];
            for (g, &x) in row.iter_mut().zip(sample.features) {
                *g += delta * x;
            }
        }
    }
}

fn stable_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().fold(T::zero(), |a, &b| a + b);
    for e in &mut exps {
        *e = *e / sum;
    }
    exps
}

/// Mean cross-entropy plus `l2/2 * |W|^2` over the given samples.
fn training_loss<T: Scalar>(
    model: &LinearModel<T>,
    samples: &[Sample<'_, T>],
    l2: T,
) -> T {
    let mut loss = T::zero();
    for s in samples {
        let logits = model.logits(s.features).expect("validated dims");
        let max = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let log_sum = logits
            .iter()
            .fold(T::zero(), |a, &z| a + (z - max).exp())
            .ln()
            + max;
        loss += log_sum - logits[s.label];
    }
    let n = T::from_usize(samples.len()).expect("sample count fits scalar");
    let mut penalty = T::zero();
    for w in &model.weights {
        penalty += *w * *w;
    }
    loss / n + penalty * l2 / T::from_config(2.0)
}

/// Mean training loss of `model` on the labeled part of `pool`.
pub fn labeled_loss<T: Scalar>(pool: &DatasetPool<T>, model: &LinearModel<T>, l2: f64) -> Result<T> {
    let samples = labeled_samples(pool);
    if samples.is_empty() {
        return Err(Error::NoLabeledData);
    }
    Ok(training_loss(model, &samples, T::from_config(l2)))
}

/// Writes logits and pseudo-labels onto every clip of the pool.
pub fn infer<T: Scalar>(model: &LinearModel<T>, pool: &mut DatasetPool<T>) -> Result<()> {
    if model.step_count != pool.step_count() {
        return Err(Error::DimensionMismatch {
            context: "model classes vs pool",
            expected: pool.step_count(),
            got: model.step_count,
        });
    }
    if model.feature_dim != pool.feature_dim() {
        return Err(Error::DimensionMismatch {
            context: "model features vs pool",
            expected: pool.feature_dim(),
            got: model.feature_dim,
        });
    }
    let mut updates: Vec<(String, Vec<(usize, Vec<T>, StepId)>)> = Vec::new();
    for video in pool.videos() {
        let mut per_clip = Vec::with_capacity(video.clips.len());
        for (i, clip) in video.clips.iter().enumerate() {
            let logits = model.logits(&clip.features)?;
            let pseudo = pseudo_label(&logits)?;
            per_clip.push((i, logits, pseudo));
        }
        updates.push((video.video_id.clone(), per_clip));
    }
    for (video, (_, per_clip)) in pool.videos_mut().zip(updates) {
        for (i, logits, pseudo) in per_clip {
            video.clips[i].logits = Some(logits);
            video.clips[i].pseudo_step = Some(pseudo);
        }
    }
    Ok(())
}

/// Compares the analytic gradient of the training objective with central
/// finite differences (`h = 1e-5`) and returns the maximum relative error.
pub fn grad_check<T: Scalar>(
    model: &LinearModel<T>,
    features: &[Vec<T>],
    labels: &[StepId],
    l2: f64,
) -> Result<T> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::EmptyInput {
            context: "grad_check batch",
        });
    }
    let samples: Vec<Sample<'_, T>> = features
        .iter()
        .zip(labels)
        .map(|(f, l)| Sample {
            features: f,
            label: l.index(),
        })
        .collect();
    let l2 = T::from_config(l2);
    let n = T::from_usize(samples.len()).expect("sample count fits scalar");
    let batch: Vec<usize> = (0..samples.len()).collect();

    let c = model.step_count;
    let d = model.feature_dim;
    let mut grad_w = vec![T::zero(); c * d];
    let mut grad_b = vec![T::zero(); c];
    accumulate_ce_gradient(model, &samples, &batch, &mut grad_w, &mut grad_b);
    // Mean CE gradient plus the L2 term, matching `training_loss`.
    for (g, w) in grad_w.iter_mut().zip(&model.weights) {
        *g = *g / n + l2 * *w;
    }
    for g in grad_b.iter_mut() {
        *g = *g / n;
    }

    let h = T::from_config(1e-5);
    let mut work = model.clone();
    let mut max_rel = T::zero();
    let mut check = |analytic: T, plus: T, minus: T| {
        let numeric = (plus - minus) / (h + h);
        let denom = analytic.abs().max(numeric.abs()).max(T::from_config(1e-8));
        let rel = (analytic - numeric).abs() / denom;
        if rel > max_rel {
            max_rel = rel;
        }
    };
    for i in 0..c * d {
        let orig = work.weights[i];
        work.weights[i] = orig + h;
        let plus = training_loss(&work, &samples, l2);
        work.weights[i] = orig - h;
        let minus = training_loss(&work, &samples, l2);
        work.weights[i] = orig;
        check(grad_w[i], plus, minus);
    }
    for i in 0..c {
        let orig = work.bias[i];
        work.bias[i] = orig + h;
        let plus = training_loss(&work, &samples, l2);
        work.bias[i] = orig - h;
        let minus = training_loss(&work, &samples, l2);
        work.bias[i] = orig;
        check(grad_b[i], plus, minus);
    }
    Ok(max_rel)
}
