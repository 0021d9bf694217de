//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls into the code under test except to
//! build inputs.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srf_core::cnn::{Architecture, LayerSpec, Model, Tensor};
use srf_core::image::GrayImage;
use srf_core::mahalanobis::{MahalanobisMatrix, RIDGE_SCALE_FLOOR};
use srf_core::online::FrameVote;
use srf_core::radon::{srf, SrfConfig};
use srf_core::skeleton::{ActionSequence, LabelSet, SkeletonFrame};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Joints scattered around a random body-sized center, loosely anisotropic.
pub fn random_frame(rng: &mut impl Rng, index: usize, joints: usize) -> SkeletonFrame {
    let center: [f64; 3] = [
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(1.5..4.0),
    ];
    let spread = [
        rng.random_range(0.2..0.6),
        rng.random_range(0.4..1.0),
        rng.random_range(0.1..0.4),
    ];
    let coords = (0..joints)
        .flat_map(|_| {
            (0..3)
                .map(|a| (center[a] + spread[a] * rng.random_range(-1.0..1.0)) as f32)
                .collect::<Vec<_>>()
        })
        .collect();
    SkeletonFrame::new(index, 3, coords).unwrap()
}

pub fn random_sequence(rng: &mut impl Rng, frames: usize, joints: usize) -> Vec<SkeletonFrame> {
    (0..frames).map(|f| random_frame(rng, f, joints)).collect()
}

fn joint_vectors(frame: &SkeletonFrame) -> Vec<Vector3<f64>> {
    frame
        .joints()
        .map(|j| Vector3::new(j[0] as f64, j[1] as f64, j[2] as f64))
        .collect()
}

/// Mahalanobis row via nalgebra: sample covariance, relative ridge, and a
/// linear solve per joint instead of an explicit inverse.
pub fn mahalanobis_row_oracle(frame: &SkeletonFrame, lambda_rel: f64) -> Vec<f64> {
    let xs = joint_vectors(frame);
    let n = xs.len() as f64;
    let mu = xs.iter().fold(Vector3::zeros(), |a, x| a + x) / n;
    let s = xs
        .iter()
        .fold(Matrix3::zeros(), |a, x| a + (x - mu) * (x - mu).transpose())
        / (n - 1.0);
    let ridge = lambda_rel * (s.trace() / 3.0).max(RIDGE_SCALE_FLOOR);
    let reg = s + Matrix3::identity() * ridge;
    let lu = reg.lu();
    xs.iter()
        .map(|x| {
            let d = x - mu;
            let y = lu.solve(&d).expect("regularized covariance is invertible");
            d.dot(&y).max(0.0).sqrt()
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Cell-center bilinear resampling written per output pixel.
pub fn resample_oracle(img: &GrayImage, out_h: usize, out_w: usize) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let src = |i: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        let s = ((i as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let lo = s.floor() as usize;
        (lo, (lo + 1).min(n_in - 1), s - lo as f64)
    };
    let mut out = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let (y0, y1, fy) = src(y, h, out_h);
        for x in 0..out_w {
            let (x0, x1, fx) = src(x, w, out_w);
            let v = img.get(y0, x0) * (1.0 - fx) * (1.0 - fy)
                + img.get(y0, x1) * fx * (1.0 - fy)
                + img.get(y1, x0) * (1.0 - fx) * fy
                + img.get(y1, x1) * fx * fy;
            out.push(v);
        }
    }
    out
}

/// Zero-padded bilinear interpolant at image-centered coordinates.
fn interpolant(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (h, w) = (img.height() as f64, img.width() as f64);
    let px = x + (w - 1.0) / 2.0;
    let py = y + (h - 1.0) / 2.0;
    let mut acc = 0.0;
    let (c0, r0) = (px.floor(), py.floor());
    for (dc, dr) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let (c, r) = (c0 + dc, r0 + dr);
        if c < 0.0 || r < 0.0 || c >= w || r >= h {
            continue;
        }
        let weight = (1.0 - (px - c).abs()) * (1.0 - (py - r).abs());
        acc += weight * img.get(r as usize, c as usize);
    }
    acc
}

/// Line integral along `x cos t + y sin t = rho` over the interpolant's
/// support box, clipped Liang-Barsky style and sampled at `samples` midpoints.
pub fn line_integral_oracle(img: &GrayImage, rho: f64, theta: f64, samples: usize) -> f64 {
    let hx = (img.width() as f64 + 1.0) / 2.0;
    let hy = (img.height() as f64 + 1.0) / 2.0;
    let (dir_x, dir_y) = (-theta.sin(), theta.cos());
    let (p_x, p_y) = (rho * theta.cos(), rho * theta.sin());
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p, d, half) in [(p_x, dir_x, hx), (p_y, dir_y, hy)] {
        if d.abs() < 1e-15 {
            if p.abs() > half {
                return 0.0;
            }
            continue;
        }
        let (a, b) = ((-half - p) / d, (half - p) / d);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    if hi <= lo {
        return 0.0;
    }
    let step = (hi - lo) / samples as f64;
    (0..samples)
        .map(|k| {
            let u = lo + (k as f64 + 0.5) * step;
            interpolant(img, p_x + u * dir_x, p_y + u * dir_y)
        })
        .sum::<f64>()
        * step
}

pub fn theta_of(k: usize, n_theta: usize) -> f64 {
    k as f64 * PI / n_theta as f64
}

pub fn random_image(rng: &mut impl Rng, h: usize, w: usize) -> GrayImage {
    GrayImage::new(h, w, (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
}

/// Largest relative difference between analytic and central-difference
/// gradients over every parameter of `model`.
///
/// The relative error is `|a - n| / max(|a| + |n|, floor)`; the floor keeps
/// parameters with vanishing gradients from dividing round-off by zero.
pub fn gradient_check(model: &Model, batch: &Tensor, labels: &[usize], h: f64, floor: f64) -> (f64, usize) {
    let (_, grads) = model.loss_and_gradients(batch, labels).unwrap();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (p, g) in grads.iter().enumerate() {
        for k in 0..g.len() {
            let orig = probe.params()[p].data()[k];
            probe.params_mut()[p].data_mut()[k] = orig + h;
            let (up, _) = probe.loss_and_gradients(batch, labels).unwrap();
            probe.params_mut()[p].data_mut()[k] = orig - h;
            let (down, _) = probe.loss_and_gradients(batch, labels).unwrap();
            probe.params_mut()[p].data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = g.data()[k];
            worst = worst.max((analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(floor));
            checked += 1;
        }
    }
    (worst, checked)
}

pub fn random_batch(rng: &mut impl Rng, shape: [usize; 3], n: usize) -> Tensor {
    let len = n * shape.iter().product::<usize>();
    Tensor::new(
        vec![n, shape[0], shape[1], shape[2]],
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// A model with small random weights and biases (non-zero biases so that
/// bias gradients and ReLU gating are both exercised).
pub fn random_model(rng: &mut impl Rng, arch: Architecture) -> Model {
    let classes = arch.classes();
    let params = arch
        .param_shapes()
        .into_iter()
        .map(|shape| {
            let len = shape.iter().product();
            Tensor::new(shape, (0..len).map(|_| rng.random_range(-0.5..0.5)).collect()).unwrap()
        })
        .collect();
    Model::from_parts(arch, params, LabelSet::numbered(classes).unwrap()).unwrap()
}

/// Architectures that together cover every layer type at random small sizes.
pub fn layer_probe_architectures(rng: &mut impl Rng) -> Vec<(&'static str, Architecture)> {
    use LayerSpec::*;
    let mut out = Vec::new();
    let mut dims = || {
        (
            rng.random_range(1..=2),
            rng.random_range(4..=7),
            rng.random_range(4..=7),
            rng.random_range(2..=4),
            rng.random_range(1..=3),
        )
    };
    let (c, h, w, classes, _) = dims();
    out.push((
        "dense",
        Architecture::new([c, h, w], vec![Flatten, Dense { out_features: classes }, Softmax]).unwrap(),
    ));
    let (c, h, w, classes, k) = dims();
    out.push((
        "conv",
        Architecture::new(
            [c, h, w],
            vec![
                Conv { out_channels: k },
                Flatten,
                Dense { out_features: classes },
                Softmax,
            ],
        )
        .unwrap(),
    ));
    let (c, h, w, classes, k) = dims();
    out.push((
        "relu",
        Architecture::new(
            [c, h, w],
            vec![
                Conv { out_channels: k },
                Relu,
                Flatten,
                Dense { out_features: 5 },
                Relu,
                Dense { out_features: classes },
                Softmax,
            ],
        )
        .unwrap(),
    ));
    let (c, h, w, classes, k) = dims();
    out.push((
        "maxpool",
        Architecture::new(
            [c, h, w],
            vec![
                Conv { out_channels: k },
                MaxPool,
                Flatten,
                Dense { out_features: classes },
                Softmax,
            ],
        )
        .unwrap(),
    ));
    let (c, h, w, classes, k) = dims();
    out.push((
        "stacked",
        Architecture::new(
            [c, h, w],
            vec![
                Conv { out_channels: k },
                Relu,
                Conv { out_channels: k + 1 },
                Relu,
                MaxPool,
                Flatten,
                Dense { out_features: classes },
                Softmax,
            ],
        )
        .unwrap(),
    ));
    out
}

/// The reference online loop: rebuild the Mahalanobis matrix from scratch for
/// every prefix, classify it, and tally votes by hand.
pub fn batch_replay(model: &Model, seq: &ActionSequence, config: &SrfConfig, lambda_rel: f64) -> Vec<FrameVote> {
    let mut votes = vec![0u64; model.classes()];
    let mut log = Vec::new();
    for (k, t) in (config.min_t..=seq.len()).enumerate() {
        let m = MahalanobisMatrix::from_frames(seq.joint_count(), &seq.frames()[..t], lambda_rel).unwrap();
        let (class, _) = model.predict(&srf(&m, config).unwrap()).unwrap();
        votes[class] += 1;
        let classified = k + 1;
        log.push(FrameVote {
            t,
            class,
            confidences: votes.iter().map(|&v| v as f64 / classified as f64).collect(),
        });
    }
    log
}
