//! Dataset pool shared by strategies, the learner, and the harness.
//!
//! A pool holds videos keyed by id; each video is an ordered list of clips
//! with features and (after inference) logits and pseudo-labels. Videos are
//! either `Labeled` or `Unlabeled`; annotation flips that state. All
//! deterministic orderings are ascending lexicographic on `video_id`.
//!
//! Ground-truth clip labels are stored on [`ClipRecord`] but access-gated:
//! selection strategies receive a [`PoolView`] that exposes everything except
//! `true_step`. Only the oracle-annotation step (the harness) and the metrics
//! module read true labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Class index of a step, `0..C`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct StepId(usize);

impl StepId {
    pub fn new(index: usize) -> Self {
        StepId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for StepId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolState {
    Labeled,
    Unlabeled,
}

/// One clip: position in its video, feature vector, and model outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord<T> {
    /// Position `t` within the video, `0..T`.
    pub clip_index: usize,
    /// Embedding of length `D`.
    pub features: Vec<T>,
    /// Class scores of length `C`; absent until inference runs.
    pub logits: Option<Vec<T>>,
    /// Oracle label. Hidden from strategies via [`PoolView`].
    pub true_step: StepId,
    /// Argmax of `logits` (lowest index wins ties); absent until inference.
    pub pseudo_step: Option<StepId>,
}

/// One untrimmed video: its ordered clips plus labeled/unlabeled state.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord<T> {
    pub video_id: String,
    pub clips: Vec<ClipRecord<T>>,
    pub pool_state: PoolState,
}

impl<T: Scalar> VideoRecord<T> {
    pub fn clip_count(&self) -> usize {
        self.clips.len()
    }

    /// Clips sorted ascending by `clip_index`. Every summation over clips
    /// iterates this order, so results do not depend on storage order.
    pub fn clips_by_index(&self) -> Vec<&ClipRecord<T>> {
        let mut refs: Vec<&ClipRecord<T>> = self.clips.iter().collect();
        refs.sort_by_key(|c| c.clip_index);
        refs
    }

    /// Label-blind accessor wrapper for this video.
    pub fn view(&self) -> VideoView<'_, T> {
        VideoView { record: self }
    }
}

/// The full pool: videos keyed by id plus the dataset-wide dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPool<T> {
    videos: BTreeMap<String, VideoRecord<T>>,
    step_count: usize,
    feature_dim: usize,
}

impl<T: Scalar> DatasetPool<T> {
    /// Creates an empty pool with `C` classes and `D` feature dimensions.
    pub fn new(step_count: usize, feature_dim: usize) -> Result<Self> {
        if step_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "step_count must be >= 2, got {step_count}"
            )));
        }
        if feature_dim < 1 {
            return Err(Error::InvalidConfig("feature_dim must be >= 1".into()));
        }
        Ok(DatasetPool {
            videos: BTreeMap::new(),
            step_count,
            feature_dim,
        })
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// Inserts a video after validating it against the pool dimensions.
    pub fn insert_video(&mut self, video: VideoRecord<T>) -> Result<()> {
        self.validate_video(&video)?;
        if self.videos.contains_key(&video.video_id) {
            return Err(Error::InvalidConfig(format!(
                "duplicate video id '{}'",
                video.video_id
            )));
        }
        self.videos.insert(video.video_id.clone(), video);
        Ok(())
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord<T>> {
        self.videos.get(id)
    }

    /// Videos in ascending id order.
    pub fn videos(&self) -> impl Iterator<Item = &VideoRecord<T>> {
        self.videos.values()
    }

    pub(crate) fn videos_mut(&mut self) -> impl Iterator<Item = &mut VideoRecord<T>> {
        self.videos.values_mut()
    }

    /// Splits ids into `(labeled, unlabeled)`, each sorted ascending.
    pub fn partition(&self) -> (Vec<String>, Vec<String>) {
        let mut labeled = Vec::new();
        let mut unlabeled = Vec::new();
        for video in self.videos.values() {
            match video.pool_state {
                PoolState::Labeled => labeled.push(video.video_id.clone()),
                PoolState::Unlabeled => unlabeled.push(video.video_id.clone()),
            }
        }
        (labeled, unlabeled)
    }

    pub fn labeled_ids(&self) -> Vec<String> {
        self.partition().0
    }

    pub fn unlabeled_ids(&self) -> Vec<String> {
        self.partition().1
    }

    /// Flips the given ids to `Labeled`.
    ///
    /// Validates all ids up front, so on error the pool is unchanged.
    pub fn move_to_labeled(&mut self, ids: &[String]) -> Result<()> {
        for id in ids {
            match self.videos.get(id) {
                None => {
                    return Err(Error::UnknownVideo {
                        video_id: id.clone(),
                    })
                }
                Some(v) if v.pool_state == PoolState::Labeled => {
                    return Err(Error::AlreadyLabeled {
                        video_id: id.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        for id in ids {
            self.videos.get_mut(id).expect("validated above").pool_state = PoolState::Labeled;
        }
        Ok(())
    }

    /// A new pool containing clones of the given videos only.
    pub fn subset(&self, ids: &[String]) -> Result<Self> {
        let mut out = DatasetPool::new(self.step_count, self.feature_dim)?;
        for id in ids {
            let video = self.video(id).ok_or_else(|| Error::UnknownVideo {
                video_id: id.clone(),
            })?;
            out.videos.insert(id.clone(), video.clone());
        }
        Ok(out)
    }

    /// Label-blind view handed to selection strategies.
    pub fn view(&self) -> PoolView<'_, T> {
        PoolView { pool: self }
    }

    fn validate_video(&self, video: &VideoRecord<T>) -> Result<()> {
        if video.clips.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "video '{}' has no clips",
                video.video_id
            )));
        }
        let t = video.clips.len();
        let mut seen = vec![false; t];
        for clip in &video.clips {
            if clip.clip_index >= t || seen[clip.clip_index] {
                return Err(Error::InvalidConfig(format!(
                    "video '{}': clip_index values must be a permutation of 0..{t}",
                    video.video_id
                )));
            }
            seen[clip.clip_index] = true;
            if clip.features.len() != self.feature_dim {
                return Err(Error::DimensionMismatch {
                    context: "clip features",
                    expected: self.feature_dim,
                    got: clip.features.len(),
                });
            }
            if let Some(logits) = &clip.logits {
                if logits.len() != self.step_count {
                    return Err(Error::DimensionMismatch {
                        context: "clip logits",
                        expected: self.step_count,
                        got: logits.len(),
                    });
                }
            }
            if clip.true_step.index() >= self.step_count {
                return Err(Error::InvalidConfig(format!(
                    "video '{}': true_step {} out of range [0, {})",
                    video.video_id,
                    clip.true_step,
                    self.step_count
                )));
            }
            if let Some(p) = clip.pseudo_step {
                if p.index() >= self.step_count {
                    return Err(Error::InvalidConfig(format!(
                        "video '{}': pseudo_step {} out of range [0, {})",
                        video.video_id, p, self.step_count
                    )));
                }
            }
        }
        Ok(())
    }

    /// Revalidates every video; useful after bulk construction.
    pub fn validate(&self) -> Result<()> {
        for video in self.videos.values() {
            self.validate_video(video)?;
        }
        Ok(())
    }
}

/// Read-only pool accessor without ground-truth labels.
#[derive(Clone, Copy)]
pub struct PoolView<'a, T> {
    pool: &'a DatasetPool<T>,
}

impl<'a, T: Scalar> PoolView<'a, T> {
    pub fn step_count(&self) -> usize {
        self.pool.step_count
    }

    pub fn feature_dim(&self) -> usize {
        self.pool.feature_dim
    }

    pub fn labeled_ids(&self) -> Vec<String> {
        self.pool.labeled_ids()
    }

    pub fn unlabeled_ids(&self) -> Vec<String> {
        self.pool.unlabeled_ids()
    }

    pub fn video(&self, id: &str) -> Option<VideoView<'a, T>> {
        self.pool.video(id).map(|record| VideoView { record })
    }

    /// All videos in ascending id order.
    pub fn videos(&self) -> impl Iterator<Item = VideoView<'a, T>> + '_ {
        self.pool.videos().map(|record| VideoView { record })
    }
}

/// Read-only video accessor without ground-truth labels.
#[derive(Clone, Copy)]
pub struct VideoView<'a, T> {
    record: &'a VideoRecord<T>,
}

impl<'a, T: Scalar> VideoView<'a, T> {
    pub fn video_id(&self) -> &'a str {
        &self.record.video_id
    }

    pub fn pool_state(&self) -> PoolState {
        self.record.pool_state
    }

    pub fn clip_count(&self) -> usize {
        self.record.clips.len()
    }

    /// Clips sorted ascending by `clip_index`.
    pub fn clips_by_index(&self) -> Vec<ClipView<'a, T>> {
        self.record
            .clips_by_index()
            .into_iter()
            .map(|clip| ClipView { clip })
            .collect()
    }

    /// True when every clip carries logits.
    pub fn has_logits(&self) -> bool {
        self.record.clips.iter().all(|c| c.logits.is_some())
    }
}

/// Read-only clip accessor without the ground-truth label.
#[derive(Clone, Copy)]
pub struct ClipView<'a, T> {
    clip: &'a ClipRecord<T>,
}

impl<'a, T: Scalar> ClipView<'a, T> {
    pub fn clip_index(&self) -> usize {
        self.clip.clip_index
    }

    pub fn features(&self) -> &'a [T] {
        &self.clip.features
    }

    pub fn logits(&self) -> Option<&'a [T]> {
        self.clip.logits.as_deref()
    }

    pub fn pseudo_step(&self) -> Option<StepId> {
        self.clip.pseudo_step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(index: usize, features: Vec<f64>, label: usize) -> ClipRecord<f64> {
        ClipRecord {
            clip_index: index,
            features,
            logits: None,
            true_step: StepId::new(label),
            pseudo_step: None,
        }
    }

    fn two_video_pool() -> DatasetPool<f64> {
        let mut pool = DatasetPool::new(2, 2).unwrap();
        pool.insert_video(VideoRecord {
            video_id: "a".into(),
            clips: vec![clip(0, vec![1.0, 0.0], 0)],
            pool_state: PoolState::Labeled,
        })
        .unwrap();
        pool.insert_video(VideoRecord {
            video_id: "b".into(),
            clips: vec![clip(0, vec![0.0, 1.0], 1)],
            pool_state: PoolState::Unlabeled,
        })
        .unwrap();
        pool
    }

    #[test]
    fn partition_splits_by_state() {
        let pool = two_video_pool();
        let (labeled, unlabeled) = pool.partition();
        assert_eq!(labeled, vec!["a".to_string()]);
        assert_eq!(unlabeled, vec!["b".to_string()]);
    }

    #[test]
    fn partition_all_labeled_and_empty() {
        let mut pool = two_video_pool();
        pool.move_to_labeled(&["b".to_string()]).unwrap();
        let (labeled, unlabeled) = pool.partition();
        assert_eq!(labeled, vec!["a".to_string(), "b".to_string()]);
        assert!(unlabeled.is_empty());

        let empty = DatasetPool::<f64>::new(2, 2).unwrap();
        assert_eq!(empty.partition(), (vec![], vec![]));
    }

    #[test]
    fn partition_is_pure() {
        let pool = two_video_pool();
        assert_eq!(pool.partition(), pool.partition());
    }

    #[test]
    fn move_to_labeled_flips_exactly_those_ids() {
        let mut pool = two_video_pool();
        pool.move_to_labeled(&["b".to_string()]).unwrap();
        assert_eq!(pool.video("b").unwrap().pool_state, PoolState::Labeled);
        assert_eq!(pool.video("a").unwrap().pool_state, PoolState::Labeled);
    }

    #[test]
    fn move_to_labeled_empty_is_identity() {
        let mut pool = two_video_pool();
        let before = pool.clone();
        pool.move_to_labeled(&[]).unwrap();
        assert_eq!(pool, before);
    }

    #[test]
    fn move_to_labeled_rejects_already_labeled_and_unknown() {
        let mut pool = two_video_pool();
        let err = pool.move_to_labeled(&["a".to_string()]).unwrap_err();
        assert!(matches!(err, Error::AlreadyLabeled { .. }));
        let err = pool.move_to_labeled(&["zz".to_string()]).unwrap_err();
        assert!(matches!(err, Error::UnknownVideo { .. }));
        // Error paths leave the pool untouched.
        let before = pool.clone();
        let _ = pool.move_to_labeled(&["b".to_string(), "a".to_string()]);
        assert_eq!(pool, before);
    }

    #[test]
    fn label_counts_are_conserved() {
        let mut pool = two_video_pool();
        let total = pool.len();
        pool.move_to_labeled(&["b".to_string()]).unwrap();
        let (labeled, unlabeled) = pool.partition();
        assert_eq!(labeled.len() + unlabeled.len(), total);
    }

    #[test]
    fn validation_rejects_bad_clip_indices_and_dims() {
        let mut pool = DatasetPool::<f64>::new(2, 2).unwrap();
        let bad_index = VideoRecord {
            video_id: "x".into(),
            clips: vec![clip(1, vec![0.0, 0.0], 0)],
            pool_state: PoolState::Unlabeled,
        };
        assert!(pool.insert_video(bad_index).is_err());

        let bad_dim = VideoRecord {
            video_id: "y".into(),
            clips: vec![clip(0, vec![0.0], 0)],
            pool_state: PoolState::Unlabeled,
        };
        assert!(pool.insert_video(bad_dim).is_err());
    }

    #[test]
    fn clips_by_index_orders_shuffled_storage() {
        let video = VideoRecord {
            video_id: "v".into(),
            clips: vec![
                clip(2, vec![2.0, 0.0], 0),
                clip(0, vec![0.0, 0.0], 0),
                clip(1, vec![1.0, 0.0], 0),
            ],
            pool_state: PoolState::Unlabeled,
        };
        let order: Vec<usize> = video.clips_by_index().iter().map(|c| c.clip_index).collect();
        assert_eq!(order, vec![0, 1, 2]);
    }
}
