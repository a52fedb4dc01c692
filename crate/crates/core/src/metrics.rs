//! Clip-wise evaluation: accuracy plus macro precision, recall, and Jaccard.
//!
//! Macro averages run over classes with nonzero support in the evaluated
//! split; zero-denominator ratios are reported as 0 and the class is flagged
//! so downstream tables can mark it instead of propagating NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::LinearModel;
use crate::pool::{DatasetPool, StepId};
use crate::scalar::Scalar;
use crate::uncertainty::pseudo_label;

/// Row = true class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    step_count: usize,
}

impl ConfusionMatrix {
    pub fn new(step_count: usize) -> Self {
        ConfusionMatrix {
            counts: vec![0; step_count * step_count],
            step_count,
        }
    }

    pub fn from_pairs(step_count: usize, pairs: &[(StepId, StepId)]) -> Self {
        let mut m = ConfusionMatrix::new(step_count);
        for &(true_step, predicted) in pairs {
            m.record(true_step, predicted);
        }
        m
    }

    pub fn record(&mut self, true_step: StepId, predicted: StepId) {
        self.counts[true_step.index() * self.step_count + predicted.index()] += 1;
    }

    pub fn count(&self, true_step: usize, predicted: usize) -> u64 {
        self.counts[true_step * self.step_count + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }
}

/// Per-class ratios plus the class's clip count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub jaccard: f64,
    pub support: u64,
    /// True when some ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

/// The evaluation suite for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_jaccard: f64,
    pub per_class: Vec<ClassMetrics>,
}

impl MetricReport {
    /// Tabulates the report from a confusion matrix.
    pub fn from_confusion(matrix: &ConfusionMatrix) -> Result<Self> {
        let total = matrix.total();
        if total == 0 {
            return Err(Error::EmptyTestSet);
        }
        let c = matrix.step_count();
        let mut per_class = Vec::with_capacity(c);
        let mut trace = 0u64;
        for k in 0..c {
            let tp = matrix.count(k, k);
            trace += tp;
            let fn_: u64 = (0..c).filter(|&j| j != k).map(|j| matrix.count(k, j)).sum();
            let fp: u64 = (0..c).filter(|&i| i != k).map(|i| matrix.count(i, k)).sum();
            let mut zero_division = false;
            let mut ratio = |num: u64, den: u64| -> f64 {
                if den == 0 {
                    zero_division = true;
                    0.0
                } else {
                    num as f64 / den as f64
                }
            };
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let jaccard = ratio(tp, tp + fp + fn_);
            per_class.push(ClassMetrics {
                precision,
                recall,
                jaccard,
                support: tp + fn_,
                zero_division,
            });
        }
        let supported: Vec<&ClassMetrics> =
            per_class.iter().filter(|m| m.support > 0).collect();
        let denom = supported.len() as f64;
        let mean = |f: fn(&ClassMetrics) -> f64| -> f64 {
            supported.iter().map(|m| f(m)).sum::<f64>() / denom
        };
        Ok(MetricReport {
            accuracy: trace as f64 / total as f64,
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_jaccard: mean(|m| m.jaccard),
            per_class,
        })
    }
}

/// Builds a report directly from `(true, predicted)` pairs.
pub fn report_from_pairs(step_count: usize, pairs: &[(StepId, StepId)]) -> Result<MetricReport> {
    MetricReport::from_confusion(&ConfusionMatrix::from_pairs(step_count, pairs))
}

/// Runs the model over every clip of `pool` and tabulates clip-wise metrics
/// against the stored ground truth. The pool is not modified.
pub fn evaluate<T: Scalar>(pool: &DatasetPool<T>, model: &LinearModel<T>) -> Result<MetricReport> {
    if pool.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut pairs = Vec::new();
    for video in pool.videos() {
        for clip in video.clips_by_index() {
            let logits = model.logits(&clip.features)?;
            pairs.push((clip.true_step, pseudo_label(&logits)?));
        }
    }
    report_from_pairs(pool.step_count(), &pairs)
}
