//! Probability and entropy scoring.
//!
//! Clip logits become probabilities via a max-subtracted softmax; clip
//! entropy is `-sum_c p_c * ln(p_c + eps)` and video entropy averages clip
//! entropies in ascending clip order. Natural log throughout: a base change
//! only rescales scores and never reorders them.
//!
//! The alternative video scorer [`mean_prob_entropy`] (average the clip
//! distributions first, then take the entropy of the mean) is kept for the
//! ablation harness; the per-clip average is the canonical weight.

use crate::error::{Error, Result};
use crate::pool::{StepId, VideoView};
use crate::scalar::Scalar;

/// Guard added inside the log when computing entropies and when normalizing
/// prototype blocks. Small enough to leave entropies within 1e-6 of exact,
/// large enough to keep `ln(0)` out of double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon<T>(T);

impl<T: Scalar> Epsilon<T> {
    pub const DEFAULT_VALUE: f64 = 1e-8;

    /// Validates `0 < value <= 1e-6`.
    pub fn new(value: T) -> Result<Self> {
        let max = T::from_config(1e-6);
        if value <= T::zero() || value > max {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be in (0, 1e-6], got {value}"
            )));
        }
        Ok(Epsilon(value))
    }

    pub fn value(self) -> T {
        self.0
    }
}

impl<T: Scalar> Default for Epsilon<T> {
    fn default() -> Self {
        Epsilon(T::from_config(Self::DEFAULT_VALUE))
    }
}

/// A probability distribution over the `C` classes: entries in `[0, 1]`
/// summing to one within [`Scalar::SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector<T>(Vec<T>);

impl<T: Scalar> ProbVector<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let mut sum = T::zero();
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < T::zero() || p > T::one() {
                return Err(Error::NonFiniteInput { index });
            }
            sum += p;
        }
        if (sum - T::one()).abs() > T::SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(ProbVector(probs))
    }

    pub fn probs(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Max-subtracted softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<ProbVector<T>> {
    if logits.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "softmax needs at least 2 logits, got {}",
            logits.len()
        )));
    }
    let mut max = T::neg_infinity();
    for (index, &z) in logits.iter().enumerate() {
        if !z.is_finite() {
            return Err(Error::NonFiniteInput { index });
        }
        if z > max {
            max = z;
        }
    }
    let mut exps = Vec::with_capacity(logits.len());
    let mut sum = T::zero();
    for &z in logits {
        let e = (z - max).exp();
        exps.push(e);
        sum += e;
    }
    for e in &mut exps {
        *e = *e / sum;
    }
    Ok(ProbVector(exps))
}

/// Argmax over logits; ties break to the lowest class index.
pub fn pseudo_label<T: Scalar>(logits: &[T]) -> Result<StepId> {
    if logits.is_empty() {
        return Err(Error::EmptyInput {
            context: "pseudo_label logits",
        });
    }
    let mut best = 0;
    for (index, &z) in logits.iter().enumerate() {
        if !z.is_finite() {
            return Err(Error::NonFiniteInput { index });
        }
        if z > logits[best] {
            best = index;
        }
    }
    Ok(StepId::new(best))
}

/// Entropy of one clip distribution in nats: `-sum_c p_c * ln(p_c + eps)`.
pub fn clip_entropy<T: Scalar>(p: &ProbVector<T>, eps: Epsilon<T>) -> T {
    let mut acc = T::zero();
    for &pc in p.probs() {
        acc -= pc * (pc + eps.value()).ln();
    }
    acc
}

/// Video entropy: mean clip entropy over clips in ascending order.
pub fn video_entropy<T: Scalar>(video: &VideoView<'_, T>, eps: Epsilon<T>) -> Result<T> {
    let clips = video.clips_by_index();
    let mut acc = T::zero();
    for clip in &clips {
        let logits = clip.logits().ok_or_else(|| Error::MissingLogits {
            video_id: video.video_id().to_string(),
        })?;
        acc += clip_entropy(&softmax(logits)?, eps);
    }
    Ok(acc / T::from_usize(clips.len()).expect("clip count fits scalar"))
}

/// Alternative video scorer: entropy of the mean clip distribution.
pub fn mean_prob_entropy<T: Scalar>(video: &VideoView<'_, T>, eps: Epsilon<T>) -> Result<T> {
    let clips = video.clips_by_index();
    let mut mean: Option<Vec<T>> = None;
    for clip in &clips {
        let logits = clip.logits().ok_or_else(|| Error::MissingLogits {
            video_id: video.video_id().to_string(),
        })?;
        let p = softmax(logits)?;
        match &mut mean {
            None => mean = Some(p.probs().to_vec()),
            Some(m) => {
                for (acc, &pc) in m.iter_mut().zip(p.probs()) {
                    *acc += pc;
                }
            }
        }
    }
    let mut mean = mean.ok_or(Error::EmptyInput {
        context: "mean_prob_entropy clips",
    })?;
    let t = T::from_usize(clips.len()).expect("clip count fits scalar");
    for m in &mut mean {
        *m = *m / t;
    }
    Ok(clip_entropy(&ProbVector(mean), eps))
}

/// Margin: top-1 minus top-2 probability. Smaller means more uncertain.
pub fn margin_score<T: Scalar>(p: &ProbVector<T>) -> T {
    debug_assert!(p.len() >= 2);
    let mut top1 = T::neg_infinity();
    let mut top2 = T::neg_infinity();
    for &pc in p.probs() {
        if pc > top1 {
            top2 = top1;
            top1 = pc;
        } else if pc > top2 {
            top2 = pc;
        }
    }
    top1 - top2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::{ClipRecord, PoolState, VideoRecord};
    use approx::assert_relative_eq;

    fn video_with_logits(logits: Vec<Vec<f64>>) -> VideoRecord<f64> {
        VideoRecord {
            video_id: "v".into(),
            clips: logits
                .into_iter()
                .enumerate()
                .map(|(i, l)| ClipRecord {
                    clip_index: i,
                    features: vec![0.0],
                    logits: Some(l),
                    true_step: StepId::new(0),
                    pseudo_step: None,
                })
                .collect(),
            pool_state: PoolState::Unlabeled,
        }
    }

    #[test]
    fn softmax_symmetry_and_shift_invariance() {
        let p = softmax(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(p.probs()[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.probs()[1], 0.5, epsilon = 1e-15);

        let base = softmax::<f64>(&[1.0, 2.0, 3.0]).unwrap();
        let shifted = softmax::<f64>(&[101.0, 102.0, 103.0]).unwrap();
        for (a, b) in base.probs().iter().zip(shifted.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_hand_evaluated() {
        // exp(1)/Z, exp(2)/Z, exp(3)/Z with Z = exp(1)+exp(2)+exp(3).
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(p.probs()[0], 0.09003057317038046, epsilon = 1e-10);
        assert_relative_eq!(p.probs()[1], 0.24472847105479767, epsilon = 1e-10);
        assert_relative_eq!(p.probs()[2], 0.6652409557748219, epsilon = 1e-10);
    }

    #[test]
    fn softmax_rejects_non_finite_and_short_input() {
        assert!(matches!(
            softmax(&[f64::NAN, 0.0]),
            Err(Error::NonFiniteInput { index: 0 })
        ));
        assert!(softmax(&[1.0]).is_err());
    }

    #[test]
    fn pseudo_label_argmax_and_tie_break() {
        assert_eq!(pseudo_label(&[0.1, 0.9]).unwrap().index(), 1);
        assert_eq!(pseudo_label(&[0.5, 0.5]).unwrap().index(), 0);
        // softmax never reorders the argmax
        let logits = [3.0, 1.0, 2.0];
        let p = softmax(&logits).unwrap();
        assert_eq!(
            pseudo_label(p.probs()).unwrap(),
            pseudo_label(&logits).unwrap()
        );
    }

    #[test]
    fn clip_entropy_uniform_one_hot_and_hand_value() {
        let eps = Epsilon::default();
        let uniform = ProbVector::new(vec![0.25; 4]).unwrap();
        assert_relative_eq!(clip_entropy(&uniform, eps), 4f64.ln(), epsilon = 1e-6);

        let one_hot = ProbVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(clip_entropy(&one_hot, eps).abs() <= 2e-8);

        // -(0.7 ln 0.7 + 0.2 ln 0.2 + 0.1 ln 0.1), eps perturbation < 1e-5.
        let p = ProbVector::new(vec![0.7, 0.2, 0.1]).unwrap();
        assert_relative_eq!(clip_entropy(&p, eps), 0.801819, epsilon = 1e-5);
    }

    #[test]
    fn one_hot_entropy_shrinks_with_epsilon() {
        let one_hot = ProbVector::<f64>::new(vec![1.0, 0.0]).unwrap();
        // The sweep deliberately exceeds the configurable cap, so it builds
        // the guard directly.
        let magnitudes: Vec<f64> = [1e-4, 1e-6, 1e-8]
            .iter()
            .map(|&e| clip_entropy(&one_hot, Epsilon(e)).abs())
            .collect();
        assert!(magnitudes[0] > magnitudes[1] && magnitudes[1] > magnitudes[2]);
    }

    #[test]
    fn video_entropy_averages_clips() {
        let eps = Epsilon::default();
        // Every clip uniform over C=2 -> ln 2.
        let v = video_with_logits(vec![vec![0.0, 0.0], vec![5.0, 5.0]]);
        assert_relative_eq!(
            video_entropy(&v.view(), eps).unwrap(),
            2f64.ln(),
            epsilon = 1e-6
        );

        // Single clip equals that clip's entropy.
        let v = video_with_logits(vec![vec![1.0, 2.0]]);
        let expected = clip_entropy(&softmax(&[1.0, 2.0]).unwrap(), eps);
        assert_eq!(video_entropy(&v.view(), eps).unwrap(), expected);

        // Mean of two clip entropies.
        let v = video_with_logits(vec![vec![0.0, 3.0], vec![0.0, 0.5]]);
        let h0 = clip_entropy(&softmax(&[0.0, 3.0]).unwrap(), eps);
        let h1 = clip_entropy(&softmax(&[0.0, 0.5]).unwrap(), eps);
        assert_relative_eq!(
            video_entropy(&v.view(), eps).unwrap(),
            (h0 + h1) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn video_entropy_requires_logits() {
        let mut v = video_with_logits(vec![vec![0.0, 0.0]]);
        v.clips[0].logits = None;
        assert!(matches!(
            video_entropy(&v.view(), Epsilon::default()),
            Err(Error::MissingLogits { .. })
        ));
    }

    #[test]
    fn mean_prob_entropy_differs_from_clip_average() {
        let eps = Epsilon::default();
        // Two confident but opposite clips: per-clip entropies are low,
        // the mean distribution is uniform.
        let v = video_with_logits(vec![vec![10.0, 0.0], vec![0.0, 10.0]]);
        let averaged = video_entropy(&v.view(), eps).unwrap();
        let of_mean = mean_prob_entropy(&v.view(), eps).unwrap();
        assert!(of_mean > averaged);
        assert_relative_eq!(of_mean, 2f64.ln(), epsilon = 1e-3);
    }

    #[test]
    fn margin_extremes() {
        let tied = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(margin_score(&tied), 0.0);
        let one_hot = ProbVector::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(margin_score(&one_hot), 1.0);
        let p = ProbVector::new(vec![0.6, 0.3, 0.1]).unwrap();
        assert_relative_eq!(margin_score(&p), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn epsilon_bounds() {
        assert!(Epsilon::new(0.0).is_err());
        assert!(Epsilon::new(1e-5).is_err());
        assert!(Epsilon::new(1e-6).is_ok());
        assert_eq!(Epsilon::<f64>::default().value(), 1e-8);
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![0.6, 0.6]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
    }
}
