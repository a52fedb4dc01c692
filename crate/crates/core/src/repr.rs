//! Step-aware video representation.
//!
//! Clips are grouped by pseudo-label; each group's mean feature vector is a
//! step prototype (groups with no clips fall back to the video's global mean
//! so every step is represented). Prototypes are length-normalized with an
//! epsilon guard and concatenated in ascending step order into one vector of
//! length `C * D`. The normalization keeps block norms at most 1, so a video
//! dominated by one predicted step still exposes its composition to the
//! clustering distance.

use crate::error::{Error, Result};
use crate::pool::{StepId, VideoView};
use crate::scalar::{l2_norm, Scalar};
use crate::uncertainty::Epsilon;

/// Per-step clip index lists: entry `c` holds the `clip_index` values whose
/// pseudo-label is `c`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepIndexSets {
    per_step: Vec<Vec<usize>>,
}

impl StepIndexSets {
    pub fn step_count(&self) -> usize {
        self.per_step.len()
    }

    pub fn indices_for(&self, step: StepId) -> &[usize] {
        &self.per_step[step.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (StepId, &[usize])> {
        self.per_step
            .iter()
            .enumerate()
            .map(|(c, v)| (StepId::new(c), v.as_slice()))
    }
}

/// The concatenated normalized prototypes for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAwareRepr<T> {
    flattened: Vec<T>,
    feature_dim: usize,
    /// Steps whose prototype fell back to the global average (no clips
    /// predicted as that step).
    fallback_steps: Vec<StepId>,
    /// Steps whose prototype was the zero vector and normalized to zero.
    zero_steps: Vec<StepId>,
}

impl<T: Scalar> StepAwareRepr<T> {
    pub fn step_count(&self) -> usize {
        self.flattened.len() / self.feature_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// The `C * D` concatenation, blocks in ascending step order.
    pub fn flattened(&self) -> &[T] {
        &self.flattened
    }

    pub fn into_flattened(self) -> Vec<T> {
        self.flattened
    }

    /// Block `c` of the concatenation.
    pub fn block(&self, step: StepId) -> &[T] {
        let d = self.feature_dim;
        &self.flattened[step.index() * d..(step.index() + 1) * d]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[T]> {
        self.flattened.chunks_exact(self.feature_dim)
    }

    pub fn fallback_steps(&self) -> &[StepId] {
        &self.fallback_steps
    }

    pub fn zero_steps(&self) -> &[StepId] {
        &self.zero_steps
    }
}

/// Groups clip indices by pseudo-label.
pub fn index_sets<T: Scalar>(video: &VideoView<'_, T>, step_count: usize) -> Result<StepIndexSets> {
    let mut per_step = vec![Vec::new(); step_count];
    for clip in video.clips_by_index() {
        let step = clip.pseudo_step().ok_or_else(|| Error::MissingPseudoLabels {
            video_id: video.video_id().to_string(),
        })?;
        if step.index() >= step_count {
            return Err(Error::DimensionMismatch {
                context: "pseudo-label class index",
                expected: step_count,
                got: step.index(),
            });
        }
        per_step[step.index()].push(clip.clip_index());
    }
    Ok(StepIndexSets { per_step })
}

/// Mean feature vector over all clips, summed in ascending clip order.
pub fn global_average<T: Scalar>(video: &VideoView<'_, T>) -> Vec<T> {
    let clips = video.clips_by_index();
    let d = clips[0].features().len();
    let mut mean = vec![T::zero(); d];
    for clip in &clips {
        for (acc, &x) in mean.iter_mut().zip(clip.features()) {
            *acc += x;
        }
    }
    let t = T::from_usize(clips.len()).expect("clip count fits scalar");
    for m in &mut mean {
        *m = *m / t;
    }
    mean
}

/// Mean feature over the clips predicted as step `c`, or the global average
/// when no clip was.
pub fn step_prototype<T: Scalar>(
    video: &VideoView<'_, T>,
    sets: &StepIndexSets,
    step: StepId,
) -> Vec<T> {
    let indices = sets.indices_for(step);
    if indices.is_empty() {
        return global_average(video);
    }
    let clips = video.clips_by_index();
    let d = clips[0].features().len();
    let mut mean = vec![T::zero(); d];
    for &t in indices {
        for (acc, &x) in mean.iter_mut().zip(clips[t].features()) {
            *acc += x;
        }
    }
    let n = T::from_usize(indices.len()).expect("index count fits scalar");
    for m in &mut mean {
        *m = *m / n;
    }
    mean
}

/// Builds the full step-aware representation for one video.
///
/// Block `c` is `f_c / (|f_c| + eps)` where `f_c` is the step prototype. A
/// zero prototype stays zero (the guard makes the division total) and is
/// recorded in the diagnostics rather than treated as an error.
pub fn build_repr<T: Scalar>(
    video: &VideoView<'_, T>,
    step_count: usize,
    eps: Epsilon<T>,
) -> Result<StepAwareRepr<T>> {
    let sets = index_sets(video, step_count)?;
    let clips = video.clips_by_index();
    let d = clips[0].features().len();
    let mut flattened = Vec::with_capacity(step_count * d);
    let mut fallback_steps = Vec::new();
    let mut zero_steps = Vec::new();
    for c in 0..step_count {
        let step = StepId::new(c);
        if sets.indices_for(step).is_empty() {
            fallback_steps.push(step);
        }
        let proto = step_prototype(video, &sets, step);
        let norm = l2_norm(&proto);
        if norm == T::zero() {
            zero_steps.push(step);
        }
        let scale = norm + eps.value();
        flattened.extend(proto.into_iter().map(|x| x / scale));
    }
    Ok(StepAwareRepr {
        flattened,
        feature_dim: d,
        fallback_steps,
        zero_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::{ClipRecord, PoolState, VideoRecord};
    use approx::assert_relative_eq;

    fn video(clips: Vec<(Vec<f64>, usize)>) -> VideoRecord<f64> {
        VideoRecord {
            video_id: "v".into(),
            clips: clips
                .into_iter()
                .enumerate()
                .map(|(i, (features, pseudo))| ClipRecord {
                    clip_index: i,
                    features,
                    logits: None,
                    true_step: StepId::new(0),
                    pseudo_step: Some(StepId::new(pseudo)),
                })
                .collect(),
            pool_state: PoolState::Unlabeled,
        }
    }

    #[test]
    fn index_sets_group_by_pseudo_label() {
        let v = video(vec![
            (vec![0.0], 0),
            (vec![0.0], 0),
            (vec![0.0], 1),
        ]);
        let sets = index_sets(&v.view(), 2).unwrap();
        assert_eq!(sets.indices_for(StepId::new(0)), &[0, 1]);
        assert_eq!(sets.indices_for(StepId::new(1)), &[2]);
    }

    #[test]
    fn index_sets_single_class_video() {
        let v = video(vec![(vec![0.0], 0), (vec![0.0], 0)]);
        let sets = index_sets(&v.view(), 3).unwrap();
        assert_eq!(sets.indices_for(StepId::new(0)), &[0, 1]);
        assert!(sets.indices_for(StepId::new(1)).is_empty());
        assert!(sets.indices_for(StepId::new(2)).is_empty());
        // T >= 1 guarantees at least one nonempty set.
        assert!(sets.iter().any(|(_, idx)| !idx.is_empty()));
    }

    #[test]
    fn index_sets_require_pseudo_labels() {
        let mut v = video(vec![(vec![0.0], 0)]);
        v.clips[0].pseudo_step = None;
        assert!(matches!(
            index_sets(&v.view(), 2),
            Err(Error::MissingPseudoLabels { .. })
        ));
    }

    #[test]
    fn global_average_examples() {
        let v = video(vec![(vec![1.0, 2.0], 0)]);
        assert_eq!(global_average(&v.view()), vec![1.0, 2.0]);

        let v = video(vec![(vec![1.0, 0.0], 0), (vec![0.0, 1.0], 0)]);
        assert_eq!(global_average(&v.view()), vec![0.5, 0.5]);
    }

    #[test]
    fn global_average_ignores_storage_order() {
        let mut v = video(vec![
            (vec![1.0, 0.0], 0),
            (vec![0.0, 1.0], 0),
            (vec![3.0, 3.0], 0),
        ]);
        let base = global_average(&v.view());
        v.clips.swap(0, 2);
        v.clips.swap(1, 2);
        assert_eq!(global_average(&v.view()), base);
    }

    #[test]
    fn step_prototype_mean_and_fallback() {
        let v = video(vec![(vec![2.0, 0.0], 0), (vec![0.0, 2.0], 0)]);
        let sets = index_sets(&v.view(), 2).unwrap();
        assert_eq!(step_prototype(&v.view(), &sets, StepId::new(0)), vec![1.0, 1.0]);
        // Empty class falls back to the global average.
        assert_eq!(
            step_prototype(&v.view(), &sets, StepId::new(1)),
            global_average(&v.view())
        );
    }

    #[test]
    fn build_repr_hand_evaluated() {
        // class-0 mean (1,0), class-1 mean (0,1) -> z ~ [1,0,0,1]
        let v = video(vec![(vec![1.0, 0.0], 0), (vec![0.0, 1.0], 1)]);
        let z = build_repr(&v.view(), 2, Epsilon::default()).unwrap();
        let expected = [1.0, 0.0, 0.0, 1.0];
        for (a, b) in z.flattened().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(z.fallback_steps().is_empty());
    }

    #[test]
    fn build_repr_single_class_duplicates_block() {
        // All clips pseudo-labeled 0: class 1 falls back to the global mean,
        // so both blocks are the same normalized vector.
        let v = video(vec![(vec![3.0, 4.0], 0)]);
        let z = build_repr(&v.view(), 2, Epsilon::default()).unwrap();
        let b0 = z.block(StepId::new(0)).to_vec();
        let b1 = z.block(StepId::new(1)).to_vec();
        assert_eq!(b0, b1);
        assert_relative_eq!(l2_norm(&b0), 1.0, epsilon = 1e-7);
        assert_eq!(z.fallback_steps(), &[StepId::new(1)]);
    }

    #[test]
    fn build_repr_scale_invariance_up_to_eps() {
        let v1 = video(vec![(vec![1.0, 2.0], 0)]);
        let v2 = video(vec![(vec![5.0, 10.0], 0)]);
        let z1 = build_repr(&v1.view(), 2, Epsilon::default()).unwrap();
        let z2 = build_repr(&v2.view(), 2, Epsilon::default()).unwrap();
        for (a, b) in z1.flattened().iter().zip(z2.flattened()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn build_repr_zero_prototype_is_zero_block() {
        let v = video(vec![(vec![0.0, 0.0], 0)]);
        let z = build_repr(&v.view(), 2, Epsilon::default()).unwrap();
        assert!(z.flattened().iter().all(|&x| x == 0.0));
        assert_eq!(z.zero_steps().len(), 2);
    }

    #[test]
    fn build_repr_is_storage_order_invariant() {
        let mut v = video(vec![
            (vec![1.0, 0.5], 0),
            (vec![0.25, 1.0], 1),
            (vec![0.5, 0.25], 0),
        ]);
        let base = build_repr(&v.view(), 3, Epsilon::default()).unwrap();
        v.clips.rotate_left(1);
        let rotated = build_repr(&v.view(), 3, Epsilon::default()).unwrap();
        assert_eq!(base.flattened(), rotated.flattened());
    }
}
