//! A small VGG-style convolutional classifier over sinograms, written
//! directly against flat `f64` buffers.
//!
//! Layers: 3x3 convolution (stride 1, zero padding 1), ReLU, 2x2 max pooling
//! (stride 2), flatten, dense, and a final softmax. Training minimizes mean
//! categorical cross-entropy with Adam or SGD with momentum.

mod arch;
mod io;
mod layers;
mod model;
mod tensor;
mod train;

pub use arch::{Architecture, LayerSpec};
pub use io::{load_model, save_model, ModelIoError, MODEL_MAGIC};
pub use model::{Model, FORMAT_VERSION};
pub use tensor::Tensor;
pub use train::{history_csv, train, train_with_architecture, EpochStats, Optimizer, TrainConfig};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CnnError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("training dataset contains a single class")]
    SingleClass,
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}
