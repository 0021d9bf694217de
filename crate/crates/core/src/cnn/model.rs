use rand::Rng;

use super::arch::{Architecture, LayerSpec};
use super::layers::{self, ConvShape};
use super::{CnnError, Tensor};
use crate::radon::Sinogram;
use crate::skeleton::LabelSet;

/// Current on-disk model format version.
pub const FORMAT_VERSION: u32 = 1;

/// Architecture, parameters and class names of a trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    architecture: Architecture,
    params: Vec<Tensor>,
    labels: LabelSet,
    format_version: u32,
}

/// Activations of one forward pass, kept for backpropagation.
struct Trace {
    /// `outputs[i]` is the output of layer `i`.
    outputs: Vec<Vec<f64>>,
    pool_argmax: Vec<Vec<usize>>,
    /// Log-sum-exp of the logits.
    lse: f64,
}

impl Model {
    /// All parameters zero: every input maps to the uniform distribution.
    pub fn zeroed(architecture: Architecture, labels: LabelSet) -> Result<Self, CnnError> {
        let params = architecture.param_shapes().into_iter().map(Tensor::zeros).collect();
        Self::from_parts(architecture, params, labels)
    }

    /// He-uniform weights (`U(±sqrt(6 / fan_in))`), zero biases.
    pub fn he_uniform<R: Rng + ?Sized>(
        architecture: Architecture,
        labels: LabelSet,
        rng: &mut R,
    ) -> Result<Self, CnnError> {
        let mut model = Self::zeroed(architecture, labels)?;
        let fan_ins = model.architecture.fan_ins();
        for (k, fan_in) in fan_ins.into_iter().enumerate() {
            let limit = (6.0 / fan_in as f64).sqrt();
            for w in model.params[2 * k].data_mut() {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(model)
    }

    pub fn from_parts(architecture: Architecture, params: Vec<Tensor>, labels: LabelSet) -> Result<Self, CnnError> {
        let shapes = architecture.param_shapes();
        if shapes.len() != params.len() {
            return Err(CnnError::InvalidArchitecture(format!(
                "expected {} parameter tensors, got {}",
                shapes.len(),
                params.len()
            )));
        }
        for (s, p) in shapes.iter().zip(&params) {
            if s.as_slice() != p.shape() {
                return Err(CnnError::ShapeMismatch {
                    expected: s.clone(),
                    found: p.shape().to_vec(),
                });
            }
        }
        if architecture.classes() != labels.len() {
            return Err(CnnError::InvalidArchitecture(format!(
                "architecture has {} outputs but {} labels",
                architecture.classes(),
                labels.len()
            )));
        }
        Ok(Self {
            architecture,
            params,
            labels,
            format_version: FORMAT_VERSION,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub fn classes(&self) -> usize {
        self.labels.len()
    }

    fn input_len(&self) -> usize {
        self.architecture.input().iter().product()
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize, CnnError> {
        let [c, h, w] = self.architecture.input();
        let shape = batch.shape();
        if shape.len() != 4 || shape[1..] != [c, h, w] {
            return Err(CnnError::ShapeMismatch {
                expected: vec![shape.first().copied().unwrap_or(0), c, h, w],
                found: shape.to_vec(),
            });
        }
        Ok(shape[0])
    }

    fn trace(&self, input: &[f64]) -> Trace {
        let shapes = self
            .architecture
            .output_shapes()
            .expect("architecture validated at construction");
        let mut in_shape = self.architecture.input().to_vec();
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(shapes.len());
        let mut pool_argmax = Vec::new();
        let mut lse = 0.0;
        let mut p = 0;
        for (layer, out_shape) in self.architecture.layers().iter().zip(&shapes) {
            let x: &[f64] = outputs.last().map_or(input, Vec::as_slice);
            let mut y = vec![0.0; out_shape.iter().product()];
            match *layer {
                LayerSpec::Conv { out_channels } => {
                    let s = ConvShape {
                        c_in: in_shape[0],
                        c_out: out_channels,
                        h: in_shape[1],
                        w: in_shape[2],
                    };
                    layers::conv3x3_forward(&s, x, self.params[p].data(), self.params[p + 1].data(), &mut y);
                    p += 2;
                }
                LayerSpec::Relu => layers::relu_forward(x, &mut y),
                LayerSpec::MaxPool => {
                    let mut idx = vec![0; y.len()];
                    layers::maxpool_forward(in_shape[0], in_shape[1], in_shape[2], x, &mut y, &mut idx);
                    pool_argmax.push(idx);
                }
                LayerSpec::Flatten => y.copy_from_slice(x),
                LayerSpec::Dense { .. } => {
                    layers::dense_forward(x, self.params[p].data(), self.params[p + 1].data(), &mut y);
                    p += 2;
                }
                LayerSpec::Softmax => lse = layers::softmax(x, &mut y),
            }
            outputs.push(y);
            in_shape.clone_from(out_shape);
        }
        Trace {
            outputs,
            pool_argmax,
            lse,
        }
    }

    /// Backpropagates `delta_logits` (gradient w.r.t. the softmax input)
    /// and adds parameter gradients into `grads`.
    fn backward(&self, input: &[f64], trace: &Trace, delta_logits: Vec<f64>, grads: &mut [Vec<f64>]) {
        let layers_list = self.architecture.layers();
        let shapes = self
            .architecture
            .output_shapes()
            .expect("architecture validated at construction");
        let mut p = self.params.len();
        let mut pool = trace.pool_argmax.len();
        let mut delta = delta_logits;
        let input_shape = self.architecture.input();
        // skip the softmax itself
        for i in (0..layers_list.len() - 1).rev() {
            let x: &[f64] = if i == 0 { input } else { &trace.outputs[i - 1] };
            let in_shape: &[usize] = if i == 0 { &input_shape } else { &shapes[i - 1] };
            let need_delta_in = i > 0;
            match layers_list[i] {
                LayerSpec::Conv { out_channels } => {
                    p -= 2;
                    let s = ConvShape {
                        c_in: in_shape[0],
                        c_out: out_channels,
                        h: in_shape[1],
                        w: in_shape[2],
                    };
                    let mut delta_in = vec![0.0; if need_delta_in { x.len() } else { 0 }];
                    let (gw, rest) = grads[p..].split_at_mut(1);
                    layers::conv3x3_backward(
                        &s,
                        x,
                        self.params[p].data(),
                        &delta,
                        &mut gw[0],
                        &mut rest[0],
                        need_delta_in.then_some(&mut delta_in[..]),
                    );
                    delta = delta_in;
                }
                LayerSpec::Relu => layers::relu_backward(&trace.outputs[i], &mut delta),
                LayerSpec::MaxPool => {
                    pool -= 1;
                    let mut delta_in = vec![0.0; x.len()];
                    layers::maxpool_backward(&trace.pool_argmax[pool], &delta, &mut delta_in);
                    delta = delta_in;
                }
                LayerSpec::Flatten => {}
                LayerSpec::Dense { .. } => {
                    p -= 2;
                    let mut delta_in = vec![0.0; if need_delta_in { x.len() } else { 0 }];
                    let (gw, rest) = grads[p..].split_at_mut(1);
                    layers::dense_backward(
                        x,
                        self.params[p].data(),
                        &delta,
                        &mut gw[0],
                        &mut rest[0],
                        need_delta_in.then_some(&mut delta_in[..]),
                    );
                    delta = delta_in;
                }
                LayerSpec::Softmax => unreachable!("softmax is only the last layer"),
            }
            if !need_delta_in {
                break;
            }
        }
    }

    /// Class probabilities for one flat input of the architecture's input size.
    pub(crate) fn probabilities(&self, input: &[f64]) -> Vec<f64> {
        self.trace(input).outputs.pop().unwrap_or_default()
    }

    /// Softmax outputs `[N, C]` for a batch `[N, c, h, w]`.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor, CnnError> {
        let n = self.check_batch(batch)?;
        let mut data = Vec::with_capacity(n * self.classes());
        for i in 0..n {
            data.extend(self.probabilities(batch.outer(i)));
        }
        Ok(Tensor::from_raw(vec![n, self.classes()], data))
    }

    /// Mean cross-entropy over the batch, and its gradient for every parameter.
    pub fn loss_and_gradients(&self, batch: &Tensor, labels: &[usize]) -> Result<(f64, Vec<Tensor>), CnnError> {
        let n = self.check_batch(batch)?;
        if labels.len() != n {
            return Err(CnnError::ShapeMismatch {
                expected: vec![n],
                found: vec![labels.len()],
            });
        }
        let inputs: Vec<&[f64]> = (0..n).map(|i| batch.outer(i)).collect();
        let (loss, grads, _) = self.batch_step(&inputs, labels)?;
        let grads = grads
            .into_iter()
            .zip(&self.params)
            .map(|(g, p)| Tensor::from_raw(p.shape().to_vec(), g))
            .collect();
        Ok((loss, grads))
    }

    /// Loss, summed-then-averaged gradients (flat) and the number of inputs
    /// whose argmax matched the label. Samples are reduced in order.
    pub(crate) fn batch_step(
        &self,
        inputs: &[&[f64]],
        labels: &[usize],
    ) -> Result<(f64, Vec<Vec<f64>>, usize), CnnError> {
        let classes = self.classes();
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(CnnError::LabelOutOfRange { label, classes });
        }
        if inputs.iter().any(|x| x.len() != self.input_len()) {
            return Err(CnnError::ShapeMismatch {
                expected: vec![self.input_len()],
                found: inputs.iter().map(|x| x.len()).collect(),
            });
        }
        let n = inputs.len() as f64;
        let mut grads: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        let mut loss = 0.0;
        let mut correct = 0;
        for (&x, &label) in inputs.iter().zip(labels) {
            let trace = self.trace(x);
            let probs = trace.outputs.last().expect("non-empty network");
            let logits = &trace.outputs[trace.outputs.len() - 2];
            loss += trace.lse - logits[label];
            if argmax(probs) == label {
                correct += 1;
            }
            let delta: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(k, &pk)| (pk - if k == label { 1.0 } else { 0.0 }) / n)
                .collect();
            self.backward(x, &trace, delta, &mut grads);
        }
        Ok((loss / n, grads, correct))
    }

    /// Most probable class (lowest index on ties) and the probability vector.
    pub fn predict(&self, s: &Sinogram) -> Result<(usize, Vec<f64>), CnnError> {
        let [c, h, w] = self.architecture.input();
        if c != 1 || s.n_rho() != h || s.n_theta() != w {
            return Err(CnnError::ShapeMismatch {
                expected: vec![c, h, w],
                found: vec![1, s.n_rho(), s.n_theta()],
            });
        }
        let probs = self.probabilities(s.values());
        Ok((argmax(&probs), probs))
    }
}

/// Index of the first maximum.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
