//! Streaming per-frame classification with cumulative vote confidences.
//!
//! Every frame extends the Mahalanobis matrix. Once at least `min_t` frames
//! have arrived, the SRF of the whole prefix is classified and the winning
//! class receives one vote. The confidence of a class is its vote count
//! divided by the number of frames classified so far, so confidences always
//! form a probability vector.

use thiserror::Error;

use crate::cnn::{CnnError, Model};
use crate::mahalanobis::{MahalanobisError, MahalanobisMatrix};
use crate::radon::{srf, RadonError, SrfConfig};
use crate::skeleton::SkeletonFrame;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OnlineError {
    #[error("no frame has been classified yet")]
    NoClassifiedFrames,
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error(transparent)]
    Mahalanobis(#[from] MahalanobisError),
    #[error(transparent)]
    Radon(#[from] RadonError),
    #[error(transparent)]
    Cnn(#[from] CnnError),
}

/// One classified frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVote {
    /// Frames consumed when the vote was cast (1-based).
    pub t: usize,
    pub class: usize,
    /// Cumulative confidences after this vote.
    pub confidences: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceTracker {
    votes: Vec<u64>,
    frames_classified: usize,
    frames_elapsed: usize,
    log: Vec<FrameVote>,
}

impl ConfidenceTracker {
    pub fn new(classes: usize) -> Self {
        Self {
            votes: vec![0; classes],
            frames_classified: 0,
            frames_elapsed: 0,
            log: Vec::new(),
        }
    }

    pub fn classes(&self) -> usize {
        self.votes.len()
    }

    pub fn votes(&self) -> &[u64] {
        &self.votes
    }

    pub fn frames_classified(&self) -> usize {
        self.frames_classified
    }

    pub fn frames_elapsed(&self) -> usize {
        self.frames_elapsed
    }

    pub fn log(&self) -> &[FrameVote] {
        &self.log
    }

    /// A frame arrived but was not classified.
    pub fn skip_frame(&mut self) {
        self.frames_elapsed += 1;
    }

    /// A frame arrived and was classified as `class`. Returns the updated confidences.
    pub fn record_vote(&mut self, class: usize) -> Result<Vec<f64>, OnlineError> {
        if class >= self.votes.len() {
            return Err(OnlineError::ClassOutOfRange {
                class,
                classes: self.votes.len(),
            });
        }
        self.frames_elapsed += 1;
        self.frames_classified += 1;
        self.votes[class] += 1;
        let confidences = self.confidences().expect("at least one vote");
        self.log.push(FrameVote {
            t: self.frames_elapsed,
            class,
            confidences: confidences.clone(),
        });
        Ok(confidences)
    }

    /// `votes / frames_classified`, or `None` before the first vote.
    pub fn confidences(&self) -> Option<Vec<f64>> {
        (self.frames_classified > 0).then(|| {
            let n = self.frames_classified as f64;
            self.votes.iter().map(|&v| v as f64 / n).collect()
        })
    }

    /// Class with the most votes (lowest index on ties) and its confidence.
    pub fn final_decision(&self) -> Result<(usize, f64), OnlineError> {
        if self.frames_classified == 0 {
            return Err(OnlineError::NoClassifiedFrames);
        }
        let mut best = 0;
        for (k, &v) in self.votes.iter().enumerate() {
            if v > self.votes[best] {
                best = k;
            }
        }
        Ok((best, self.votes[best] as f64 / self.frames_classified as f64))
    }

    /// `t,conf_class_0,...` header plus one row per classified frame.
    pub fn export_confidence_trace(&self) -> String {
        let mut out = String::from("t");
        for k in 0..self.votes.len() {
            out.push_str(&format!(",conf_class_{k}"));
        }
        out.push('\n');
        for entry in &self.log {
            out.push_str(&entry.t.to_string());
            for c in &entry.confidences {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Result of feeding one frame.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// Fewer than `min_t` frames so far.
    NotReady { t: usize },
    Classified {
        t: usize,
        class: usize,
        probabilities: Vec<f64>,
        confidences: Vec<f64>,
    },
}

/// Appends `frame` to `state`, classifies the prefix SRF when it is long
/// enough, and records the vote in `tracker`.
pub fn step(
    tracker: &mut ConfidenceTracker,
    state: &mut MahalanobisMatrix,
    frame: &SkeletonFrame,
    model: &Model,
    config: &SrfConfig,
) -> Result<StepOutcome, OnlineError> {
    state.append_frame(frame)?;
    let t = state.rows();
    if t < config.min_t {
        tracker.skip_frame();
        return Ok(StepOutcome::NotReady { t });
    }
    let sinogram = srf(state, config)?;
    let (class, probabilities) = model.predict(&sinogram)?;
    let confidences = tracker.record_vote(class)?;
    Ok(StepOutcome::Classified {
        t,
        class,
        probabilities,
        confidences,
    })
}

/// Owns the per-stream state; many streams may share one model.
#[derive(Debug, Clone)]
pub struct OnlineClassifier<'m> {
    model: &'m Model,
    config: SrfConfig,
    state: MahalanobisMatrix,
    tracker: ConfidenceTracker,
}

impl<'m> OnlineClassifier<'m> {
    pub fn new(model: &'m Model, config: SrfConfig, joints: usize, lambda_rel: f64) -> Self {
        Self {
            model,
            config,
            state: MahalanobisMatrix::new(joints, lambda_rel),
            tracker: ConfidenceTracker::new(model.classes()),
        }
    }

    pub fn push(&mut self, frame: &SkeletonFrame) -> Result<StepOutcome, OnlineError> {
        step(&mut self.tracker, &mut self.state, frame, self.model, &self.config)
    }

    pub fn tracker(&self) -> &ConfidenceTracker {
        &self.tracker
    }

    pub fn state(&self) -> &MahalanobisMatrix {
        &self.state
    }

    pub fn final_decision(&self) -> Result<(usize, f64), OnlineError> {
        self.tracker.final_decision()
    }
}
