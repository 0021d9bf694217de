//! Per-frame joint-cloud statistics and the Mahalanobis matrix.
//!
//! Each frame's joints are treated as samples of a distribution with mean
//! `mu_f` and covariance `S_f`. Row `f` of the matrix holds, for every joint
//! `j`, `sqrt((x_j - mu_f)^T S_f^-1 (x_j - mu_f))`. Rows are frames, columns
//! are joints. `S_f` is ridge-regularized before inversion so degenerate
//! postures (coincident or collinear joints) still give finite distances.

use rayon::prelude::*;
use thiserror::Error;

use crate::image::GrayImage;
use crate::linalg::SquareMatrix;
use crate::skeleton::{ActionSequence, SkeletonFrame};

/// Default relative ridge strength.
pub const DEFAULT_LAMBDA_REL: f64 = 1e-6;

/// Lower bound on the ridge scale `trace(S)/d`.
pub const RIDGE_SCALE_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MahalanobisError {
    #[error("covariance matrix is not symmetric")]
    NotSymmetric,
    #[error("covariance matrix is singular and no ridge was requested")]
    Singular,
    #[error("negative quadratic form {0}: inverse covariance is not positive definite")]
    NegativeQuadraticForm(f64),
    #[error("frame has {found} joints, matrix expects {expected}")]
    JointCountMismatch { expected: usize, found: usize },
    #[error("vector dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Arithmetic mean of the joint vectors.
pub fn frame_centroid(frame: &SkeletonFrame) -> Vec<f64> {
    let d = frame.dim();
    let mut mu = vec![0.0; d];
    for joint in frame.joints() {
        for (m, &c) in mu.iter_mut().zip(joint) {
            *m += f64::from(c);
        }
    }
    let n = frame.joint_count() as f64;
    mu.iter_mut().for_each(|m| *m /= n);
    mu
}

/// Sample covariance of the joint cloud (denominator `J - 1`).
pub fn frame_covariance(frame: &SkeletonFrame) -> SquareMatrix {
    let mu = frame_centroid(frame);
    covariance_about(frame, &mu)
}

fn covariance_about(frame: &SkeletonFrame, mu: &[f64]) -> SquareMatrix {
    let d = frame.dim();
    let mut s = SquareMatrix::zeros(d);
    let mut dev = [0.0; 3];
    for joint in frame.joints() {
        for a in 0..d {
            dev[a] = f64::from(joint[a]) - mu[a];
        }
        for a in 0..d {
            for b in a..d {
                s[(a, b)] += dev[a] * dev[b];
            }
        }
    }
    let denom = (frame.joint_count() - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = s[(a, b)] / denom;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    s
}

/// Inverse of `S + ridge * I` with `ridge = lambda_rel * max(trace(S)/d, 1e-12)`.
///
/// Returns the inverse together with the ridge actually added.
pub fn regularized_inverse(s: &SquareMatrix, lambda_rel: f64) -> Result<(SquareMatrix, f64), MahalanobisError> {
    if !s.is_symmetric(SYMMETRY_TOL) {
        return Err(MahalanobisError::NotSymmetric);
    }
    let d = s.dim() as f64;
    let ridge = lambda_rel * (s.trace() / d).max(RIDGE_SCALE_FLOOR);
    let inv = s.add_diagonal(ridge).inverse().ok_or(MahalanobisError::Singular)?;
    Ok((inv, ridge))
}

/// `sqrt((x - mu)^T S_inv (x - mu))`.
///
/// Round-off negatives of the quadratic form are clamped to zero; a
/// substantially negative form means `s_inv` is not positive definite.
pub fn mahalanobis_distance(x: &[f64], mu: &[f64], s_inv: &SquareMatrix) -> Result<f64, MahalanobisError> {
    if x.len() != mu.len() || x.len() != s_inv.dim() {
        return Err(MahalanobisError::DimensionMismatch(x.len(), s_inv.dim()));
    }
    let delta: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    let q = s_inv.quadratic_form(&delta);
    if q >= 0.0 {
        return Ok(q.sqrt());
    }
    let norm2: f64 = delta.iter().map(|v| v * v).sum();
    if q >= -1e-12 * norm2 * s_inv.max_abs() {
        Ok(0.0)
    } else {
        Err(MahalanobisError::NegativeQuadraticForm(q))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameStats {
    pub centroid: Vec<f64>,
    pub covariance: SquareMatrix,
    pub regularized_inverse: SquareMatrix,
    pub ridge_used: f64,
}

pub fn frame_stats(frame: &SkeletonFrame, lambda_rel: f64) -> Result<FrameStats, MahalanobisError> {
    let centroid = frame_centroid(frame);
    let covariance = covariance_about(frame, &centroid);
    let (regularized_inverse, ridge_used) = regularized_inverse(&covariance, lambda_rel)?;
    Ok(FrameStats {
        centroid,
        covariance,
        regularized_inverse,
        ridge_used,
    })
}

/// Mahalanobis distance of every joint to its own frame's joint distribution.
pub fn mahalanobis_row(frame: &SkeletonFrame, lambda_rel: f64) -> Result<Vec<f64>, MahalanobisError> {
    let stats = frame_stats(frame, lambda_rel)?;
    let mut x = vec![0.0; frame.dim()];
    frame
        .joints()
        .map(|joint| {
            for (xi, &c) in x.iter_mut().zip(joint) {
                *xi = f64::from(c);
            }
            mahalanobis_distance(&x, &stats.centroid, &stats.regularized_inverse)
        })
        .collect()
}

/// Growing `t x J` matrix of per-frame, per-joint Mahalanobis distances.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisMatrix {
    joints: usize,
    rows: usize,
    lambda_rel: f64,
    values: Vec<f64>,
}

impl MahalanobisMatrix {
    pub fn new(joints: usize, lambda_rel: f64) -> Self {
        Self {
            joints,
            rows: 0,
            lambda_rel,
            values: Vec::new(),
        }
    }

    /// Batch construction; rows are computed independently (in parallel).
    pub fn from_frames(joints: usize, frames: &[SkeletonFrame], lambda_rel: f64) -> Result<Self, MahalanobisError> {
        if let Some(f) = frames.iter().find(|f| f.joint_count() != joints) {
            return Err(MahalanobisError::JointCountMismatch {
                expected: joints,
                found: f.joint_count(),
            });
        }
        let rows: Vec<Vec<f64>> = frames
            .par_iter()
            .map(|f| mahalanobis_row(f, lambda_rel))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            joints,
            rows: rows.len(),
            lambda_rel,
            values: rows.concat(),
        })
    }

    pub fn from_sequence(seq: &ActionSequence, lambda_rel: f64) -> Result<Self, MahalanobisError> {
        Self::from_frames(seq.joint_count(), seq.frames(), lambda_rel)
    }

    /// Appends one row in `O(J d^2)`; existing rows are not touched.
    pub fn append_frame(&mut self, frame: &SkeletonFrame) -> Result<(), MahalanobisError> {
        if frame.joint_count() != self.joints {
            return Err(MahalanobisError::JointCountMismatch {
                expected: self.joints,
                found: frame.joint_count(),
            });
        }
        let row = mahalanobis_row(frame, self.lambda_rel)?;
        self.values.extend_from_slice(&row);
        self.rows += 1;
        Ok(())
    }

    /// Value-returning form of [`append_frame`](Self::append_frame).
    pub fn with_frame(mut self, frame: &SkeletonFrame) -> Result<Self, MahalanobisError> {
        self.append_frame(frame)?;
        Ok(self)
    }

    /// The first `t` rows (the state after `t` frames).
    pub fn truncated(&self, t: usize) -> Self {
        let t = t.min(self.rows);
        Self {
            joints: self.joints,
            rows: t,
            lambda_rel: self.lambda_rel,
            values: self.values[..t * self.joints].to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn lambda_rel(&self) -> f64 {
        self.lambda_rel
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.joints..(r + 1) * self.joints]
    }

    pub fn get(&self, row: usize, joint: usize) -> f64 {
        self.values[row * self.joints + joint]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The matrix as an image: height = frames, width = joints.
    pub fn to_image(&self) -> Option<GrayImage> {
        GrayImage::new(self.rows, self.joints, self.values.clone()).ok()
    }

    /// `t` lines of `J` comma-separated values, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}
