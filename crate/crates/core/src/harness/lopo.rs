use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{EvalReport, FoldReport};
use super::HarnessError;
use crate::cnn::{train, Model, TrainConfig};
use crate::mahalanobis::{MahalanobisMatrix, DEFAULT_LAMBDA_REL};
use crate::online::{ConfidenceTracker, OnlineClassifier};
use crate::radon::{srf, Sinogram, SrfConfig};
use crate::skeleton::{ActionSequence, LabelSet};

/// Train/test partition with one subject held out.
#[derive(Debug, Clone)]
pub struct Fold<'a> {
    pub held_out_subject: String,
    pub train: Vec<&'a ActionSequence>,
    pub test: Vec<&'a ActionSequence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LopoConfig {
    pub srf: SrfConfig,
    pub train: TrainConfig,
    pub lambda_rel: f64,
    /// Also train on the SRF at `t = ceil(F/2)` of every training sequence.
    pub augment_midpoint: bool,
}

impl Default for LopoConfig {
    fn default() -> Self {
        Self {
            srf: SrfConfig::default(),
            train: TrainConfig::default(),
            lambda_rel: DEFAULT_LAMBDA_REL,
            augment_midpoint: false,
        }
    }
}

/// One fold per distinct subject, ordered by subject id.
pub fn lopo_split(dataset: &[ActionSequence]) -> Result<Vec<Fold<'_>>, HarnessError> {
    let mut by_subject: BTreeMap<&str, Vec<&ActionSequence>> = BTreeMap::new();
    for seq in dataset {
        by_subject.entry(seq.subject_id()).or_default().push(seq);
    }
    if by_subject.len() < 2 {
        return Err(HarnessError::TooFewSubjects(by_subject.len()));
    }
    Ok(by_subject
        .keys()
        .map(|&subject| Fold {
            held_out_subject: subject.to_string(),
            train: dataset.iter().filter(|s| s.subject_id() != subject).collect(),
            test: by_subject[subject].clone(),
        })
        .collect())
}

/// SRF of the first `t` frames of a sequence.
pub fn sequence_srf(
    seq: &ActionSequence,
    t: usize,
    config: &SrfConfig,
    lambda_rel: f64,
) -> Result<Sinogram, HarnessError> {
    let t = t.min(seq.len());
    let m = MahalanobisMatrix::from_frames(seq.joint_count(), &seq.frames()[..t], lambda_rel)?;
    Ok(srf(&m, config)?)
}

/// One sample per sequence at its final frame, plus the midpoint sample
/// when `augment_midpoint` is set.
pub fn encode_training_set(
    seqs: &[&ActionSequence],
    config: &LopoConfig,
) -> Result<Vec<(Sinogram, usize)>, HarnessError> {
    let mut out = Vec::with_capacity(seqs.len() * if config.augment_midpoint { 2 } else { 1 });
    for seq in seqs {
        let m = MahalanobisMatrix::from_sequence(seq, config.lambda_rel)?;
        out.push((srf(&m, &config.srf)?, seq.label()));
        if config.augment_midpoint {
            let mid = seq.len().div_ceil(2);
            if mid >= config.srf.min_t && mid < seq.len() {
                out.push((srf(&m.truncated(mid), &config.srf)?, seq.label()));
            }
        }
    }
    Ok(out)
}

/// Replays a sequence frame by frame through the online classifier.
pub fn classify_sequence(
    model: &Model,
    seq: &ActionSequence,
    config: &SrfConfig,
    lambda_rel: f64,
) -> Result<ConfidenceTracker, HarnessError> {
    let mut online = OnlineClassifier::new(model, config.clone(), seq.joint_count(), lambda_rel);
    for frame in seq.frames() {
        online.push(frame)?;
    }
    Ok(online.tracker().clone())
}

struct FoldOutcome {
    report: FoldReport,
    /// (predicted, truth) per test sequence.
    decisions: Vec<(usize, usize)>,
}

fn run_fold(
    index: usize,
    fold: &Fold<'_>,
    labels: &LabelSet,
    config: &LopoConfig,
) -> Result<FoldOutcome, HarnessError> {
    let samples = encode_training_set(&fold.train, config)?;
    let train_config = TrainConfig {
        seed: config.train.seed ^ index as u64,
        ..config.train.clone()
    };
    let (model, history) = train(&samples, labels, &train_config)?;
    let mut decisions = Vec::with_capacity(fold.test.len());
    for seq in &fold.test {
        let tracker = classify_sequence(&model, seq, &config.srf, config.lambda_rel)?;
        let (predicted, _) = tracker.final_decision()?;
        decisions.push((predicted, seq.label()));
    }
    let correct = decisions.iter().filter(|(p, t)| p == t).count();
    Ok(FoldOutcome {
        report: FoldReport {
            subject: fold.held_out_subject.clone(),
            accuracy: correct as f64 / decisions.len() as f64,
            correct,
            test_sequences: decisions.len(),
            train_samples: samples.len(),
            final_train_accuracy: history.last().map_or(0.0, |h| h.train_accuracy),
        },
        decisions,
    })
}

/// Leave-one-person-out evaluation without progress callbacks.
pub fn run_lopo(
    dataset: &[ActionSequence],
    labels: &LabelSet,
    config: &LopoConfig,
) -> Result<EvalReport, HarnessError> {
    run_lopo_with_progress(dataset, labels, config, |_| {})
}

/// For every fold: train on final-frame SRFs of the other subjects, then
/// classify each held-out sequence by online vote replay. Folds may run in
/// parallel; the report is assembled in fold order. The fold seed is
/// `config.train.seed ^ fold_index`.
pub fn run_lopo_with_progress<F>(
    dataset: &[ActionSequence],
    labels: &LabelSet,
    config: &LopoConfig,
    on_fold: F,
) -> Result<EvalReport, HarnessError>
where
    F: Fn(&FoldReport) + Sync,
{
    config.srf.validate()?;
    if let Some(seq) = dataset.iter().find(|s| s.label() >= labels.len()) {
        return Err(HarnessError::LabelOutOfRange {
            label: seq.label(),
            classes: labels.len(),
        });
    }
    let folds = lopo_split(dataset)?;
    let outcomes: Vec<FoldOutcome> = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let out = run_fold(i, fold, labels, config).map_err(|e| HarnessError::Fold {
                subject: fold.held_out_subject.clone(),
                source: Box::new(e),
            })?;
            on_fold(&out.report);
            Ok(out)
        })
        .collect::<Result<_, HarnessError>>()?;

    let c = labels.len();
    let mut confusion = vec![vec![0u64; c]; c];
    for (predicted, truth) in outcomes.iter().flat_map(|o| &o.decisions) {
        confusion[*predicted][*truth] += 1;
    }
    Ok(EvalReport::new(
        labels.names().to_vec(),
        outcomes.into_iter().map(|o| o.report).collect(),
        confusion,
    ))
}
