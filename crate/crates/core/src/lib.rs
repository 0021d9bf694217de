//! Online skeleton-based action recognition from spatio-temporal Radon
//! footprints (SRFs).
//!
//! Pipeline per frame: joint coordinates → per-joint Mahalanobis distances
//! to the frame's joint distribution (one row of a growing matrix) → Radon
//! transform of the resampled matrix → a small CNN → cumulative votes.
//!
//! * [`skeleton`]: sequence types, validation, JSONL I/O, synthetic data
//! * [`mahalanobis`]: frame statistics and the Mahalanobis matrix
//! * [`radon`]: Radon transform and SRF encoding
//! * [`cnn`]: the classifier, its training loop and model files
//! * [`online`]: streaming classification with vote confidences
//! * [`harness`]: leave-one-person-out evaluation and reports

pub mod cnn;
pub mod harness;
pub mod image;
pub mod linalg;
pub mod mahalanobis;
pub mod online;
pub mod radon;
pub mod skeleton;

pub use cnn::{Architecture, Model, TrainConfig};
pub use harness::{run_lopo, EvalReport, LopoConfig};
pub use image::GrayImage;
pub use mahalanobis::MahalanobisMatrix;
pub use online::{ConfidenceTracker, OnlineClassifier, StepOutcome};
pub use radon::{srf, Sinogram, SrfConfig};
pub use skeleton::{ActionSequence, LabelSet, SkeletonFrame};
