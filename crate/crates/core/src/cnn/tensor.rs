use super::CnnError;
use crate::radon::Sinogram;

/// Row-major n-dimensional array of finite `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, CnnError> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) || data.len() != expected {
            return Err(CnnError::ShapeMismatch {
                expected: shape,
                found: vec![data.len()],
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CnnError::NonFinite("tensor data"));
        }
        Ok(Self { shape, data })
    }

    /// Unchecked constructor; `data.len()` must equal the shape's product.
    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Stacks sinograms into an `[N, 1, n_rho, n_theta]` batch.
    pub fn from_sinograms<'a>(sinograms: impl IntoIterator<Item = &'a Sinogram>) -> Result<Self, CnnError> {
        let mut dims: Option<(usize, usize)> = None;
        let mut data = Vec::new();
        let mut n = 0;
        for s in sinograms {
            let d = (s.n_rho(), s.n_theta());
            match dims {
                None => dims = Some(d),
                Some(prev) if prev != d => {
                    return Err(CnnError::ShapeMismatch {
                        expected: vec![1, prev.0, prev.1],
                        found: vec![1, d.0, d.1],
                    })
                }
                _ => {}
            }
            data.extend_from_slice(s.values());
            n += 1;
        }
        let (h, w) = dims.ok_or(CnnError::EmptyDataset)?;
        Ok(Self {
            shape: vec![n, 1, h, w],
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `i` along the first axis.
    pub fn outer(&self, i: usize) -> &[f64] {
        let stride = self.data.len() / self.shape[0];
        &self.data[i * stride..(i + 1) * stride]
    }
}
