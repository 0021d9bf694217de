use serde::{Deserialize, Serialize};

use super::CnnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    /// 3x3 kernel, stride 1, zero padding 1.
    Conv {
        out_channels: usize,
    },
    Relu,
    /// 2x2 window, stride 2 (odd trailing rows/columns are dropped).
    MaxPool,
    Flatten,
    Dense {
        out_features: usize,
    },
    Softmax,
}

/// Input shape `(channels, height, width)` plus an ordered layer list that
/// must end in a single softmax.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    input: [usize; 3],
    layers: Vec<LayerSpec>,
}

impl Architecture {
    pub fn new(input: [usize; 3], layers: Vec<LayerSpec>) -> Result<Self, CnnError> {
        let arch = Self { input, layers };
        arch.output_shapes()?;
        Ok(arch)
    }

    /// Conv(8)-ReLU-Conv(8)-ReLU-Pool, Conv(16)-ReLU-Conv(16)-ReLU-Pool,
    /// Flatten, Dense(64)-ReLU, Dense(C)-Softmax.
    pub fn vgg_default(n_rho: usize, n_theta: usize, classes: usize) -> Result<Self, CnnError> {
        use LayerSpec::*;
        Self::new(
            [1, n_rho, n_theta],
            vec![
                Conv { out_channels: 8 },
                Relu,
                Conv { out_channels: 8 },
                Relu,
                MaxPool,
                Conv { out_channels: 16 },
                Relu,
                Conv { out_channels: 16 },
                Relu,
                MaxPool,
                Flatten,
                Dense { out_features: 64 },
                Relu,
                Dense { out_features: classes },
                Softmax,
            ],
        )
    }

    /// One convolution and one dense layer; used for gradient checks.
    pub fn thumbnail(height: usize, width: usize, classes: usize) -> Result<Self, CnnError> {
        use LayerSpec::*;
        Self::new(
            [1, height, width],
            vec![
                Conv { out_channels: 2 },
                Relu,
                Flatten,
                Dense { out_features: classes },
                Softmax,
            ],
        )
    }

    pub fn input(&self) -> [usize; 3] {
        self.input
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn classes(&self) -> usize {
        match self.output_shapes() {
            Ok(shapes) => shapes.last().map_or(0, |s| s[0]),
            Err(_) => 0,
        }
    }

    /// Output shape of every layer, checking that the chain is consistent.
    pub fn output_shapes(&self) -> Result<Vec<Vec<usize>>, CnnError> {
        let bad = |msg: String| Err(CnnError::InvalidArchitecture(msg));
        if self.input.contains(&0) {
            return bad("input dimensions must be positive".into());
        }
        match self.layers.last() {
            Some(LayerSpec::Softmax) => {}
            _ => return bad("last layer must be softmax".into()),
        }
        let mut shape = self.input.to_vec();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match (*layer, shape.as_slice()) {
                (LayerSpec::Conv { out_channels }, &[_, h, w]) if out_channels > 0 => vec![out_channels, h, w],
                (LayerSpec::Relu, s) => s.to_vec(),
                (LayerSpec::MaxPool, &[c, h, w]) if h >= 2 && w >= 2 => vec![c, h / 2, w / 2],
                (LayerSpec::Flatten, &[c, h, w]) => vec![c * h * w],
                (LayerSpec::Dense { out_features }, &[_]) if out_features > 0 => vec![out_features],
                (LayerSpec::Softmax, &[n]) if i + 1 == self.layers.len() && n >= 2 => vec![n],
                (l, s) => return bad(format!("layer {i} ({l:?}) cannot follow shape {s:?}")),
            };
            shapes.push(shape.clone());
        }
        Ok(shapes)
    }

    /// Parameter tensor shapes in layer order: weight then bias for every
    /// Conv (`[out, in, 3, 3]`, `[out]`) and Dense (`[out, in]`, `[out]`).
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shape = self.input.to_vec();
        let mut out = Vec::new();
        let shapes = self.output_shapes().unwrap_or_default();
        for (layer, next) in self.layers.iter().zip(shapes) {
            match *layer {
                LayerSpec::Conv { out_channels } => {
                    out.push(vec![out_channels, shape[0], 3, 3]);
                    out.push(vec![out_channels]);
                }
                LayerSpec::Dense { out_features } => {
                    out.push(vec![out_features, shape[0]]);
                    out.push(vec![out_features]);
                }
                _ => {}
            }
            shape = next;
        }
        out
    }

    /// Fan-in of each parameterized layer, in parameter order (weights only).
    pub(crate) fn fan_ins(&self) -> Vec<usize> {
        self.param_shapes()
            .iter()
            .step_by(2)
            .map(|s| s[1..].iter().product())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let a = Architecture::vgg_default(64, 90, 10).unwrap();
        let shapes = a.output_shapes().unwrap();
        assert_eq!(shapes[4], vec![8, 32, 45]);
        assert_eq!(shapes[9], vec![16, 16, 22]);
        assert_eq!(shapes[10], vec![16 * 16 * 22]);
        assert_eq!(shapes.last().unwrap(), &vec![10]);
        assert_eq!(a.classes(), 10);
        assert_eq!(
            a.param_shapes(),
            vec![
                vec![8, 1, 3, 3],
                vec![8],
                vec![8, 8, 3, 3],
                vec![8],
                vec![16, 8, 3, 3],
                vec![16],
                vec![16, 16, 3, 3],
                vec![16],
                vec![64, 5632],
                vec![64],
                vec![10, 64],
                vec![10],
            ]
        );
        assert_eq!(a.fan_ins(), vec![9, 72, 72, 144, 5632, 64]);
    }

    #[test]
    fn rejects_broken_chains() {
        use LayerSpec::*;
        assert!(Architecture::new([1, 8, 8], vec![Dense { out_features: 2 }, Softmax]).is_err());
        assert!(Architecture::new([1, 8, 8], vec![Flatten, Dense { out_features: 2 }]).is_err());
        assert!(Architecture::new([1, 1, 8], vec![MaxPool, Flatten, Dense { out_features: 2 }, Softmax]).is_err());
        assert!(Architecture::new([1, 8, 8], vec![Flatten, Dense { out_features: 1 }, Softmax]).is_err());
        assert!(Architecture::new([1, 8, 8], vec![Flatten, Softmax, Dense { out_features: 2 }, Softmax]).is_err());
    }
}
