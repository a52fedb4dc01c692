//! Binary pool manifest: the import/export format for pre-extracted clip
//! features and labels.
//!
//! Layout (all integers little-endian, all floats 64-bit IEEE little-endian):
//!
//! ```text
//! magic      8 bytes  "SALPOOL\0"
//! version    u32      currently 1
//! step_count u32      C
//! feature_dim u32     D
//! n_videos   u32
//! per video, ascending id:
//!   id_len   u32
//!   id       id_len bytes, UTF-8
//!   clip_count u32    T
//!   has_logits u8     0 or 1 (applies to every clip of the video)
//!   per clip, ascending clip index:
//!     features   D x f64
//!     true_step  u32
//!     logits     C x f64, present only when has_logits = 1
//! ```
//!
//! Reads are strict: wrong magic, unknown version, truncation, trailing
//! bytes, or out-of-range labels are rejected with the byte offset at which
//! the problem was found. Pool state is not stored; loaded videos start
//! unlabeled and pseudo-labels are rebuilt from logits when present.

use std::path::Path;

use thiserror::Error;

use stepal_core::pool::{ClipRecord, DatasetPool, PoolState, StepId, VideoRecord};
use stepal_core::scalar::Scalar;
use stepal_core::uncertainty::pseudo_label;

pub const MANIFEST_MAGIC: &[u8; 8] = b"SALPOOL\0";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic at byte 0: found {found:02x?}, expected {MANIFEST_MAGIC:02x?}")]
    Magic { found: Vec<u8> },

    #[error("unsupported manifest version {found} at byte {offset} (supported: {MANIFEST_VERSION})")]
    Version { found: u32, offset: u64 },

    #[error("shape mismatch at byte {offset}: {detail}")]
    Shape { offset: u64, detail: String },

    #[error("invalid data at byte {offset}: {detail}")]
    Data { offset: u64, detail: String },
}

/// Serializes a pool. Videos are written in ascending id order, clips in
/// ascending clip index; pool state is not part of the format.
pub fn write_manifest<T: Scalar>(pool: &DatasetPool<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MANIFEST_MAGIC);
    out.extend_from_slice(&MANIFEST_VERSION.to_le_bytes());
    out.extend_from_slice(&(pool.step_count() as u32).to_le_bytes());
    out.extend_from_slice(&(pool.feature_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(pool.len() as u32).to_le_bytes());
    for video in pool.videos() {
        let id = video.video_id.as_bytes();
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&(video.clips.len() as u32).to_le_bytes());
        let has_logits = video.clips.iter().all(|c| c.logits.is_some());
        out.push(u8::from(has_logits));
        for clip in video.clips_by_index() {
            for x in &clip.features {
                out.extend_from_slice(&x.to_f64().expect("finite feature").to_le_bytes());
            }
            out.extend_from_slice(&(clip.true_step.index() as u32).to_le_bytes());
            if has_logits {
                for z in clip.logits.as_ref().expect("checked above") {
                    out.extend_from_slice(&z.to_f64().expect("finite logit").to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn save_manifest<T: Scalar>(pool: &DatasetPool<T>, path: &Path) -> Result<(), ManifestError> {
    std::fs::write(path, write_manifest(pool))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ManifestError> {
        if self.offset + n > self.bytes.len() {
            return Err(ManifestError::Shape {
                offset: self.offset as u64,
                detail: format!(
                    "truncated while reading {what}: need {n} bytes, {} remain",
                    self.bytes.len() - self.offset
                ),
            });
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32, ManifestError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8, ManifestError> {
        Ok(self.take(1, what)?[0])
    }

    fn f64(&mut self, what: &str) -> Result<f64, ManifestError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Parses a manifest back into a pool.
pub fn read_manifest<T: Scalar>(bytes: &[u8]) -> Result<DatasetPool<T>, ManifestError> {
    let mut r = Reader { bytes, offset: 0 };
    let magic = r.take(8, "magic")?;
    if magic != MANIFEST_MAGIC {
        return Err(ManifestError::Magic {
            found: magic.to_vec(),
        });
    }
    let version_offset = r.offset as u64;
    let version = r.u32("version")?;
    if version != MANIFEST_VERSION {
        return Err(ManifestError::Version {
            found: version,
            offset: version_offset,
        });
    }
    let step_count = r.u32("step_count")? as usize;
    let feature_dim = r.u32("feature_dim")? as usize;
    let n_videos = r.u32("n_videos")? as usize;
    let mut pool =
        DatasetPool::new(step_count, feature_dim).map_err(|e| ManifestError::Data {
            offset: 12,
            detail: e.to_string(),
        })?;
    for v in 0..n_videos {
        let id_len = r.u32("id length")? as usize;
        let id_offset = r.offset as u64;
        let id_bytes = r.take(id_len, "video id")?;
        let video_id = std::str::from_utf8(id_bytes)
            .map_err(|e| ManifestError::Data {
                offset: id_offset,
                detail: format!("video id is not UTF-8: {e}"),
            })?
            .to_string();
        let clip_count = r.u32("clip count")? as usize;
        if clip_count == 0 {
            return Err(ManifestError::Shape {
                offset: r.offset as u64 - 4,
                detail: format!("video '{video_id}' declares zero clips"),
            });
        }
        let has_logits = match r.u8("logits flag")? {
            0 => false,
            1 => true,
            other => {
                return Err(ManifestError::Data {
                    offset: r.offset as u64 - 1,
                    detail: format!("logits flag must be 0 or 1, found {other}"),
                })
            }
        };
        let mut clips = Vec::with_capacity(clip_count);
        for t in 0..clip_count {
            let mut features = Vec::with_capacity(feature_dim);
            for _ in 0..feature_dim {
                features.push(T::from_config(r.f64("clip feature")?));
            }
            let label_offset = r.offset as u64;
            let label = r.u32("true step")? as usize;
            if label >= step_count {
                return Err(ManifestError::Data {
                    offset: label_offset,
                    detail: format!(
                        "video '{video_id}' clip {t}: true step {label} out of range [0, {step_count})"
                    ),
                });
            }
            let logits = if has_logits {
                let mut l = Vec::with_capacity(step_count);
                for _ in 0..step_count {
                    l.push(T::from_config(r.f64("clip logit")?));
                }
                Some(l)
            } else {
                None
            };
            let pseudo_step = logits
                .as_deref()
                .map(|l| pseudo_label(l).expect("finite logits"));
            clips.push(ClipRecord {
                clip_index: t,
                features,
                logits,
                true_step: StepId::new(label),
                pseudo_step,
            });
        }
        pool.insert_video(VideoRecord {
            video_id: video_id.clone(),
            clips,
            pool_state: PoolState::Unlabeled,
        })
        .map_err(|e| ManifestError::Data {
            offset: r.offset as u64,
            detail: format!("video {v} ('{video_id}'): {e}"),
        })?;
    }
    if r.offset != bytes.len() {
        return Err(ManifestError::Shape {
            offset: r.offset as u64,
            detail: format!("{} trailing bytes after the declared payload", bytes.len() - r.offset),
        });
    }
    Ok(pool)
}

pub fn load_manifest<T: Scalar>(path: &Path) -> Result<DatasetPool<T>, ManifestError> {
    let bytes = std::fs::read(path)?;
    read_manifest(&bytes)
}

/// Header-plus-totals summary used by `inspect-manifest`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestSummary {
    pub version: u32,
    pub step_count: usize,
    pub feature_dim: usize,
    pub n_videos: usize,
    pub total_clips: usize,
    pub videos_with_logits: usize,
    pub min_clips: usize,
    pub max_clips: usize,
}

pub fn summarize<T: Scalar>(pool: &DatasetPool<T>) -> ManifestSummary {
    let mut total_clips = 0;
    let mut videos_with_logits = 0;
    let mut min_clips = usize::MAX;
    let mut max_clips = 0;
    for video in pool.videos() {
        let t = video.clips.len();
        total_clips += t;
        min_clips = min_clips.min(t);
        max_clips = max_clips.max(t);
        if video.clips.iter().all(|c| c.logits.is_some()) {
            videos_with_logits += 1;
        }
    }
    ManifestSummary {
        version: MANIFEST_VERSION,
        step_count: pool.step_count(),
        feature_dim: pool.feature_dim(),
        n_videos: pool.len(),
        total_clips,
        videos_with_logits,
        min_clips: if pool.is_empty() { 0 } else { min_clips },
        max_clips,
    }
}

impl std::fmt::Display for ManifestSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "manifest version {}", self.version)?;
        writeln!(f, "steps (C):        {}", self.step_count)?;
        writeln!(f, "feature dim (D):  {}", self.feature_dim)?;
        writeln!(f, "videos:           {}", self.n_videos)?;
        writeln!(f, "clips:            {}", self.total_clips)?;
        writeln!(f, "clips per video:  {}..{}", self.min_clips, self.max_clips)?;
        write!(f, "videos w/ logits: {}", self.videos_with_logits)
    }
}
