//! Leave-one-person-out evaluation and report output.

mod lopo;
mod report;

pub use lopo::{
    classify_sequence, encode_training_set, lopo_split, run_lopo, run_lopo_with_progress, sequence_srf, Fold,
    LopoConfig,
};
pub use report::{EvalReport, FoldReport};

use thiserror::Error;

use crate::cnn::CnnError;
use crate::mahalanobis::MahalanobisError;
use crate::online::OnlineError;
use crate::radon::RadonError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("leave-one-person-out needs at least 2 subjects, found {0}")]
    TooFewSubjects(usize),
    #[error("sequence label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("fold {subject:?}: {source}")]
    Fold {
        subject: String,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Mahalanobis(#[from] MahalanobisError),
    #[error(transparent)]
    Radon(#[from] RadonError),
    #[error(transparent)]
    Cnn(#[from] CnnError),
    #[error(transparent)]
    Online(#[from] OnlineError),
    #[error("report: {0}")]
    Report(String),
}
