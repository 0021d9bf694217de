//! Skeleton sequences: frames of joint coordinates with subject/action/trial
//! metadata, validation, JSONL persistence and a synthetic generator.
//!
//! Coordinates are kept at 32-bit precision (the on-disk precision) and are
//! widened to `f64` by the numeric stages downstream.

mod jsonl;
mod synth;

pub use jsonl::{read_jsonl, write_jsonl, FrameRecord, JsonlError};
pub use synth::{synth_generate, ClassMotion, JointOscillation, SynthError, SynthSpec, KINECT_V2_TEMPLATE};

use std::collections::HashSet;

use thiserror::Error;

/// Smallest joint count for which a 3-D joint-cloud covariance can be full rank.
pub const MIN_JOINTS: usize = 4;

/// A sequence needs strictly more than this many frames.
pub const MIN_FRAMES_EXCLUSIVE: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("non-finite coordinate at frame {frame}, joint {joint}, axis {axis}")]
    NonFiniteCoordinate { frame: usize, joint: usize, axis: usize },
    #[error("frame {frame} has {found} joints, expected {expected}")]
    InconsistentJointCount {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame}, joint {joint} has dimension {found}, expected {expected}")]
    InconsistentDimension {
        frame: usize,
        joint: usize,
        expected: usize,
        found: usize,
    },
    #[error("unsupported coordinate dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("sequence has {found} frames, need more than {MIN_FRAMES_EXCLUSIVE}")]
    TooFewFrames { found: usize },
    #[error("frame has {found} joints, need at least {MIN_JOINTS}")]
    TooFewJoints { found: usize },
    #[error("frame indices must be consecutive from 0: position {position} has index {found}")]
    NonConsecutiveFrameIndex { position: usize, found: usize },
    #[error("coordinate buffer of length {len} is not a multiple of dimension {dim}")]
    RaggedCoordinates { len: usize, dim: usize },
    #[error("label set needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("duplicate class name {0:?}")]
    DuplicateClassName(String),
}

/// One frame of joint coordinates, stored joint-major (`J * d` values).
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonFrame {
    index: usize,
    dim: usize,
    coords: Vec<f32>,
}

impl SkeletonFrame {
    pub fn new(index: usize, dim: usize, coords: Vec<f32>) -> Result<Self, SkeletonError> {
        if dim != 2 && dim != 3 {
            return Err(SkeletonError::UnsupportedDimension(dim));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(SkeletonError::RaggedCoordinates { len: coords.len(), dim });
        }
        let joints = coords.len() / dim;
        if joints < MIN_JOINTS {
            return Err(SkeletonError::TooFewJoints { found: joints });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(SkeletonError::NonFiniteCoordinate {
                frame: index,
                joint: pos / dim,
                axis: pos % dim,
            });
        }
        Ok(Self { index, dim, coords })
    }

    /// Builds a frame from per-joint vectors; all joints must share a dimension.
    pub fn from_joints(index: usize, joints: &[Vec<f32>]) -> Result<Self, SkeletonError> {
        let dim = joints.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(joints.len() * dim);
        for (j, joint) in joints.iter().enumerate() {
            if joint.len() != dim {
                return Err(SkeletonError::InconsistentDimension {
                    frame: index,
                    joint: j,
                    expected: dim,
                    found: joint.len(),
                });
            }
            coords.extend_from_slice(joint);
        }
        if joints.len() < MIN_JOINTS {
            return Err(SkeletonError::TooFewJoints { found: joints.len() });
        }
        Self::new(index, dim, coords)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn joint_count(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn joint(&self, j: usize) -> &[f32] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn joints(&self) -> std::slice::ChunksExact<'_, f32> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f32] {
        &self.coords
    }

    /// Same joints under a different time step.
    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }
}

/// A validated action sequence: `F > 2` frames, each with the same `J >= 4`
/// joints of dimension `d`, indexed `0..F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence {
    subject_id: String,
    label: usize,
    trial_id: String,
    joint_count: usize,
    dim: usize,
    frames: Vec<SkeletonFrame>,
}

impl ActionSequence {
    pub fn new(
        subject_id: impl Into<String>,
        label: usize,
        trial_id: impl Into<String>,
        frames: Vec<SkeletonFrame>,
    ) -> Result<Self, SkeletonError> {
        if frames.len() <= MIN_FRAMES_EXCLUSIVE {
            return Err(SkeletonError::TooFewFrames { found: frames.len() });
        }
        let joint_count = frames[0].joint_count();
        let dim = frames[0].dim();
        for (position, frame) in frames.iter().enumerate() {
            if frame.joint_count() != joint_count {
                return Err(SkeletonError::InconsistentJointCount {
                    frame: position,
                    expected: joint_count,
                    found: frame.joint_count(),
                });
            }
            if frame.dim() != dim {
                return Err(SkeletonError::InconsistentDimension {
                    frame: position,
                    joint: 0,
                    expected: dim,
                    found: frame.dim(),
                });
            }
            if frame.index() != position {
                return Err(SkeletonError::NonConsecutiveFrameIndex {
                    position,
                    found: frame.index(),
                });
            }
        }
        Ok(Self {
            subject_id: subject_id.into(),
            label,
            trial_id: trial_id.into(),
            joint_count,
            dim,
            frames,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn trial_id(&self) -> &str {
        &self.trial_id
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frames(&self) -> &[SkeletonFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false for a validated sequence; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Unvalidated frame as read from storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    pub index: usize,
    pub joints: Vec<Vec<f64>>,
}

/// Unvalidated sequence as read from storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSequence {
    pub subject: String,
    pub action: usize,
    pub trial: String,
    pub frames: Vec<RawFrame>,
}

/// Checks a raw sequence against every structural constraint and converts it.
///
/// Checks run in a fixed order (frame count, joint count, dimensions,
/// finiteness, index continuity) and the first violation is reported with
/// its location. The input is never modified.
pub fn validate_sequence(raw: &RawSequence) -> Result<ActionSequence, SkeletonError> {
    if raw.frames.len() <= MIN_FRAMES_EXCLUSIVE {
        return Err(SkeletonError::TooFewFrames {
            found: raw.frames.len(),
        });
    }
    let joint_count = raw.frames[0].joints.len();
    if joint_count < MIN_JOINTS {
        return Err(SkeletonError::TooFewJoints { found: joint_count });
    }
    let dim = raw.frames[0].joints[0].len();
    if dim != 2 && dim != 3 {
        return Err(SkeletonError::UnsupportedDimension(dim));
    }

    let mut frames = Vec::with_capacity(raw.frames.len());
    for (position, rf) in raw.frames.iter().enumerate() {
        if rf.joints.len() != joint_count {
            return Err(SkeletonError::InconsistentJointCount {
                frame: rf.index,
                expected: joint_count,
                found: rf.joints.len(),
            });
        }
        let mut coords = Vec::with_capacity(joint_count * dim);
        for (j, joint) in rf.joints.iter().enumerate() {
            if joint.len() != dim {
                return Err(SkeletonError::InconsistentDimension {
                    frame: rf.index,
                    joint: j,
                    expected: dim,
                    found: joint.len(),
                });
            }
            for (axis, &c) in joint.iter().enumerate() {
                let narrowed = c as f32;
                if !c.is_finite() || !narrowed.is_finite() {
                    return Err(SkeletonError::NonFiniteCoordinate {
                        frame: rf.index,
                        joint: j,
                        axis,
                    });
                }
                coords.push(narrowed);
            }
        }
        if rf.index != position {
            return Err(SkeletonError::NonConsecutiveFrameIndex {
                position,
                found: rf.index,
            });
        }
        frames.push(SkeletonFrame {
            index: rf.index,
            dim,
            coords,
        });
    }
    ActionSequence::new(raw.subject.clone(), raw.action, raw.trial.clone(), frames)
}

/// Ordered, unique class names; index `i` is class `i`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, SkeletonError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(SkeletonError::TooFewClasses(names.len()));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(SkeletonError::DuplicateClassName(n.clone()));
            }
        }
        Ok(Self { names })
    }

    /// `a1`, `a2`, ... for `count` classes (1-based names for 0-based indices).
    pub fn numbered(count: usize) -> Result<Self, SkeletonError> {
        Self::new((1..=count).map(|i| format!("a{i}")))
    }

    /// Numbered label set covering every label that occurs in `seqs` (at least 2).
    pub fn covering(seqs: &[ActionSequence]) -> Result<Self, SkeletonError> {
        let count = seqs.iter().map(|s| s.label() + 1).max().unwrap_or(0);
        Self::numbered(count.max(2))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}
