//! Single-channel `f64` images, bilinear resampling and PGM export.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {height}x{width}")]
    EmptyImage { height: usize, width: usize },
    #[error("pixel buffer has {found} values, expected {expected}")]
    BufferSize { expected: usize, found: usize },
    #[error("non-finite pixel at ({row}, {col})")]
    NonFinitePixel { row: usize, col: usize },
}

/// Row-major grayscale image with finite pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::EmptyImage { height, width });
        }
        if pixels.len() != height * width {
            return Err(ImageError::BufferSize {
                expected: height * width,
                found: pixels.len(),
            });
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(ImageError::NonFinitePixel {
                row: i / width,
                col: i % width,
            });
        }
        Ok(Self { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self, ImageError> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn total_mass(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Divides by the maximum pixel when it is positive; otherwise unchanged.
    pub fn normalized_by_max(&self) -> Self {
        let m = self.max();
        if m > 0.0 {
            Self {
                pixels: self.pixels.iter().map(|p| p / m).collect(),
                ..self.clone()
            }
        } else {
            self.clone()
        }
    }

    /// Binary 8-bit PGM, min-max normalized.
    pub fn to_pgm(&self) -> Vec<u8> {
        encode_pgm(self.width, self.height, &self.pixels)
    }
}

/// `P5` header followed by `width * height` bytes scaled so the minimum maps
/// to 0 and the maximum to 255. A constant input encodes as all zeros.
pub fn encode_pgm(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let span = hi - lo;
    out.extend(values.iter().map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// Maps output index `i` of an `n_out` grid onto the cell-center coordinate
/// of an `n_in` grid, clamped to `[0, n_in - 1]`. Returns the lower source
/// index and the interpolation fraction.
fn source_coord(i: usize, n_in: usize, n_out: usize) -> (usize, f64) {
    let s = (i as f64 + 0.5) * (n_in as f64 / n_out as f64) - 0.5;
    let s = s.clamp(0.0, (n_in - 1) as f64);
    let i0 = (s.floor() as usize).min(n_in - 1);
    (i0, s - i0 as f64)
}

/// Bilinear resampling on the cell-center grid (edge pixels are clamped).
pub fn resample_bilinear(img: &GrayImage, out_h: usize, out_w: usize) -> GrayImage {
    let (h, w) = (img.height, img.width);
    let cols: Vec<(usize, usize, f64)> = (0..out_w)
        .map(|x| {
            let (x0, fx) = source_coord(x, w, out_w);
            (x0, (x0 + 1).min(w - 1), fx)
        })
        .collect();
    let mut pixels = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let (y0, fy) = source_coord(y, h, out_h);
        let y1 = (y0 + 1).min(h - 1);
        let r0 = &img.pixels[y0 * w..(y0 + 1) * w];
        let r1 = &img.pixels[y1 * w..(y1 + 1) * w];
        for &(x0, x1, fx) in &cols {
            let top = r0[x0] + (r0[x1] - r0[x0]) * fx;
            let bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
            pixels.push(top + (bottom - top) * fy);
        }
    }
    GrayImage {
        height: out_h,
        width: out_w,
        pixels,
    }
}
