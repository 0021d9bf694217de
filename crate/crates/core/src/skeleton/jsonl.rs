use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{validate_sequence, ActionSequence, RawFrame, RawSequence, SkeletonError, SkeletonFrame};

/// One line of a skeleton JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub subject: String,
    pub action: usize,
    pub trial: String,
    pub frame: usize,
    pub joints: Vec<Vec<f64>>,
}

impl FrameRecord {
    pub fn parse(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    /// Converts the joints to a checked [`SkeletonFrame`].
    pub fn to_frame(&self) -> Result<SkeletonFrame, SkeletonError> {
        let joints: Vec<Vec<f32>> = self
            .joints
            .iter()
            .map(|j| j.iter().map(|&c| c as f32).collect())
            .collect();
        SkeletonFrame::from_joints(self.frame, &joints)
    }
}

#[derive(Serialize)]
struct OutRecord<'a> {
    subject: &'a str,
    action: usize,
    trial: &'a str,
    frame: usize,
    joints: Vec<&'a [f32]>,
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: duplicate frame {frame} for subject {subject:?}, action {action}, trial {trial:?}")]
    DuplicateFrameIndex {
        line: usize,
        subject: String,
        action: usize,
        trial: String,
        frame: usize,
    },
    #[error("sequence (subject {subject:?}, action {action}, trial {trial:?}): {source}")]
    InvalidSequence {
        subject: String,
        action: usize,
        trial: String,
        #[source]
        source: SkeletonError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads frame records and groups them into sequences keyed by
/// `(subject, action, trial)`, in order of first appearance.
///
/// Blank lines are ignored. Line numbers in errors are 1-based.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<ActionSequence>, JsonlError> {
    type Key = (String, usize, String);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, Vec<(usize, FrameRecord)>> = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = FrameRecord::parse(&line).map_err(|e| JsonlError::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        let key = (rec.subject.clone(), rec.action, rec.trial.clone());
        let group = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        group.push((line_no, rec));
    }

    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let mut recs = groups.remove(&key).unwrap_or_default();
        recs.sort_by_key(|(_, r)| r.frame);
        if let Some(w) = recs.windows(2).find(|w| w[0].1.frame == w[1].1.frame) {
            let (line, r) = &w[1];
            return Err(JsonlError::DuplicateFrameIndex {
                line: *line,
                subject: key.0,
                action: key.1,
                trial: key.2,
                frame: r.frame,
            });
        }
        let (subject, action, trial) = key;
        let raw = RawSequence {
            subject,
            action,
            trial,
            frames: recs
                .into_iter()
                .map(|(_, r)| RawFrame {
                    index: r.frame,
                    joints: r.joints,
                })
                .collect(),
        };
        let seq = validate_sequence(&raw).map_err(|source| JsonlError::InvalidSequence {
            subject: raw.subject.clone(),
            action: raw.action,
            trial: raw.trial.clone(),
            source,
        })?;
        out.push(seq);
    }
    Ok(out)
}

/// Writes one record per frame. Coordinates are emitted as the shortest
/// decimal that round-trips at 32-bit precision (at most 9 significant digits).
pub fn write_jsonl<W: Write>(mut writer: W, seqs: &[ActionSequence]) -> io::Result<()> {
    for seq in seqs {
        for frame in seq.frames() {
            let rec = OutRecord {
                subject: seq.subject_id(),
                action: seq.label(),
                trial: seq.trial_id(),
                frame: frame.index(),
                joints: frame.joints().collect(),
            };
            serde_json::to_writer(&mut writer, &rec)?;
            writer.write_all(b"\n")?;
        }
    }
    writer.flush()
}
