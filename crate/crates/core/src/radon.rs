//! Discrete parallel-beam Radon transform and spatio-temporal Radon
//! footprints (SRFs) of Mahalanobis matrices.
//!
//! Geometry: pixel `(r, c)` has its center at `x = c - (W-1)/2`,
//! `y = r - (H-1)/2` (unit spacing, origin at the image center). The image is
//! the bilinear interpolant of the pixel centers, zero outside, so its support
//! is the box `|x| <= (W+1)/2`, `|y| <= (H+1)/2` and it integrates to the pixel
//! sum. Each bin `(rho, theta)` integrates that function along
//! `x cos(theta) + y sin(theta) = rho` using `samples_per_ray` midpoint samples
//! over the chord that crosses the support box.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{encode_pgm, resample_bilinear, GrayImage};
use crate::mahalanobis::MahalanobisMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadonError {
    #[error("SRF needs at least {min_t} frames, matrix has {t}")]
    SequenceTooShort { t: usize, min_t: usize },
    #[error("invalid SRF configuration: {0}")]
    InvalidConfig(String),
}

/// `n_rho x n_theta` grid of line integrals, stored row-major by rho.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    n_rho: usize,
    n_theta: usize,
    rho_max: f64,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn delta_rho(&self) -> f64 {
        2.0 * self.rho_max / self.n_rho as f64
    }

    /// Center of rho bin `k`.
    pub fn rho(&self, k: usize) -> f64 {
        -self.rho_max + (k as f64 + 0.5) * self.delta_rho()
    }

    /// Angle of column `k`, radians in `[0, pi)`.
    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * PI / self.n_theta as f64
    }

    pub fn get(&self, rho: usize, theta: usize) -> f64 {
        self.values[rho * self.n_theta + theta]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, theta: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rho).map(move |r| self.get(r, theta))
    }

    /// Builds a sinogram from raw values (e.g. when reloading a CSV dump).
    pub fn from_values(n_rho: usize, n_theta: usize, rho_max: f64, values: Vec<f64>) -> Option<Self> {
        (n_rho > 0
            && n_theta > 0
            && rho_max > 0.0
            && values.len() == n_rho * n_theta
            && values.iter().all(|v| v.is_finite()))
        .then_some(Self {
            n_rho,
            n_theta,
            rho_max,
            values,
        })
    }

    /// Binary PGM: `n_theta` columns, `n_rho` rows.
    pub fn to_pgm(&self) -> Vec<u8> {
        encode_pgm(self.n_theta, self.n_rho, &self.values)
    }

    /// `n_rho` lines of `n_theta` values, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.n_theta) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Discretization of the SRF stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrfConfig {
    pub resample_h: usize,
    pub resample_w: usize,
    pub n_rho: usize,
    pub n_theta: usize,
    /// `None` means `2 * max(resample_h, resample_w)`.
    pub samples_per_ray: Option<usize>,
    pub min_t: usize,
}

impl Default for SrfConfig {
    fn default() -> Self {
        Self {
            resample_h: 64,
            resample_w: 64,
            n_rho: 64,
            n_theta: 90,
            samples_per_ray: None,
            min_t: 2,
        }
    }
}

impl SrfConfig {
    pub fn validate(&self) -> Result<(), RadonError> {
        if self.resample_h < 2 || self.resample_w < 2 {
            return Err(RadonError::InvalidConfig(
                "resample dimensions must be at least 2".into(),
            ));
        }
        if self.n_rho == 0 || self.n_theta == 0 || self.samples_per_ray == Some(0) {
            return Err(RadonError::InvalidConfig(
                "sinogram dimensions and ray samples must be positive".into(),
            ));
        }
        if self.min_t < 2 {
            return Err(RadonError::InvalidConfig(format!(
                "min_t must be at least 2, got {}",
                self.min_t
            )));
        }
        Ok(())
    }

    pub fn effective_samples_per_ray(&self) -> usize {
        self.samples_per_ray.unwrap_or(2 * self.resample_h.max(self.resample_w))
    }
}

/// Value of the zero-padded bilinear interpolant at fractional pixel
/// coordinates (`px` along columns, `py` along rows).
#[inline]
fn bilinear_zero(img: &GrayImage, px: f64, py: f64) -> f64 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let x0f = px.floor();
    let y0f = py.floor();
    let fx = px - x0f;
    let fy = py - y0f;
    let (x0, y0) = (x0f as isize, y0f as isize);
    if x0 < -1 || y0 < -1 || x0 >= w || y0 >= h {
        return 0.0;
    }
    let pixels = img.pixels();
    let at = |x: isize, y: isize| -> f64 {
        if x >= 0 && y >= 0 && x < w && y < h {
            pixels[(y * w + x) as usize]
        } else {
            0.0
        }
    };
    let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
    let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Parameter interval where `p + u * d` lies in `[-half, half]`.
fn slab(p: f64, d: f64, half: f64) -> (f64, f64) {
    if d.abs() < 1e-15 {
        if p.abs() <= half {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        }
    } else {
        let a = (-half - p) / d;
        let b = (half - p) / d;
        (a.min(b), a.max(b))
    }
}

/// Radon transform over `theta in [0, pi)` (`n_theta` steps) and `n_rho`
/// bins spanning `±rho_max`, where `rho_max` is half the diagonal of the
/// interpolant's support box.
///
/// Panics if `n_rho`, `n_theta` or `samples_per_ray` is zero.
pub fn radon_transform(img: &GrayImage, n_rho: usize, n_theta: usize, samples_per_ray: usize) -> Sinogram {
    assert!(
        n_rho > 0 && n_theta > 0 && samples_per_ray > 0,
        "radon grid must be non-empty"
    );
    let (h, w) = (img.height() as f64, img.width() as f64);
    let half_w = (w + 1.0) / 2.0;
    let half_h = (h + 1.0) / 2.0;
    let cx = (w - 1.0) / 2.0;
    let cy = (h - 1.0) / 2.0;
    let rho_max = half_w.hypot(half_h);
    let d_rho = 2.0 * rho_max / n_rho as f64;

    let mut values = vec![0.0; n_rho * n_theta];
    for t in 0..n_theta {
        let theta = t as f64 * PI / n_theta as f64;
        let (sin, cos) = theta.sin_cos();
        for r in 0..n_rho {
            let rho = -rho_max + (r as f64 + 0.5) * d_rho;
            let (bx, by) = (rho * cos, rho * sin);
            // point(u) = (bx - u sin, by + u cos)
            let (ax0, ax1) = slab(bx, -sin, half_w);
            let (ay0, ay1) = slab(by, cos, half_h);
            let u0 = ax0.max(ay0);
            let u1 = ax1.min(ay1);
            if u1 <= u0 {
                continue;
            }
            let step = (u1 - u0) / samples_per_ray as f64;
            let mut sum = 0.0;
            for k in 0..samples_per_ray {
                let u = u0 + (k as f64 + 0.5) * step;
                sum += bilinear_zero(img, bx - u * sin + cx, by + u * cos + cy);
            }
            values[r * n_theta + t] = sum * step;
        }
    }
    Sinogram {
        n_rho,
        n_theta,
        rho_max,
        values,
    }
}

/// Spatio-temporal Radon footprint of the first `t` frames held in `m`:
/// max-normalize, resample to the configured size, then transform.
pub fn srf(m: &MahalanobisMatrix, config: &SrfConfig) -> Result<Sinogram, RadonError> {
    config.validate()?;
    if m.rows() < config.min_t {
        return Err(RadonError::SequenceTooShort {
            t: m.rows(),
            min_t: config.min_t,
        });
    }
    let img = m
        .to_image()
        .ok_or_else(|| RadonError::InvalidConfig("Mahalanobis matrix is empty".into()))?;
    let resampled = resample_bilinear(&img.normalized_by_max(), config.resample_h, config.resample_w);
    Ok(radon_transform(
        &resampled,
        config.n_rho,
        config.n_theta,
        config.effective_samples_per_ray(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_image_zero_sinogram() {
        let img = GrayImage::filled(9, 12, 0.0).unwrap();
        let s = radon_transform(&img, 16, 10, 24);
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_pixel_peaks_at_central_bin() {
        let mut px = vec![0.0; 15 * 15];
        px[7 * 15 + 7] = 1.0;
        let img = GrayImage::new(15, 15, px).unwrap();
        let s = radon_transform(&img, 33, 36, 60);
        for t in 0..s.n_theta() {
            let col: Vec<f64> = s.column(t).collect();
            let argmax = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
            assert_eq!(argmax, 16, "theta column {t}");
        }
    }

    #[test]
    fn rho_axis_is_symmetric() {
        let img = GrayImage::filled(4, 6, 1.0).unwrap();
        let s = radon_transform(&img, 8, 4, 10);
        for k in 0..8 {
            assert!((s.rho(k) + s.rho(7 - k)).abs() < 1e-12);
        }
        assert_eq!(s.theta(0), 0.0);
        assert!((s.theta(2) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn vertical_projection_of_constant_image() {
        // theta = 0 integrates along y; a constant image of height H has
        // column integral H inside |x| <= (W-1)/2.
        let img = GrayImage::filled(8, 8, 1.0).unwrap();
        let s = radon_transform(&img, 64, 4, 400);
        let central = s.n_rho() / 2;
        assert!((s.get(central, 0) - 8.0).abs() < 0.05, "{}", s.get(central, 0));
    }

    #[test]
    fn srf_requires_two_frames() {
        let m = MahalanobisMatrix::new(25, 1e-6);
        let cfg = SrfConfig::default();
        assert_eq!(srf(&m, &cfg), Err(RadonError::SequenceTooShort { t: 0, min_t: 2 }));
    }

    #[test]
    fn config_validation() {
        assert!(SrfConfig::default().validate().is_ok());
        assert_eq!(SrfConfig::default().effective_samples_per_ray(), 128);
        let bad = SrfConfig {
            min_t: 1,
            ..SrfConfig::default()
        };
        assert!(matches!(bad.validate(), Err(RadonError::InvalidConfig(_))));
    }

    #[test]
    fn sinogram_exports() {
        let mut px = vec![0.0; 25];
        px[12] = 1.0;
        let s = radon_transform(&GrayImage::new(5, 5, px).unwrap(), 5, 3, 20);
        let pgm = s.to_pgm();
        let header = b"P5\n3 5\n255\n";
        assert!(pgm.starts_with(header));
        assert_eq!(pgm.len(), header.len() + 15);
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 5);
        let back: Vec<f64> = csv
            .lines()
            .flat_map(|l| l.split(','))
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(back, s.values());
    }
}
