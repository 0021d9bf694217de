use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::argmax;
use super::{Architecture, CnnError, Model};
use crate::radon::Sinogram;
use crate::skeleton::LabelSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub const fn sgd_momentum() -> Self {
        Optimizer::SgdMomentum { momentum: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 30,
            batch_size: 16,
            seed: 0,
            optimizer: Optimizer::adam(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), CnnError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(CnnError::InvalidConfig("learning rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(CnnError::InvalidConfig("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Mean training loss over the epoch's mini-batches, and training-set
/// accuracy of the parameters at the end of the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    fn new(kind: Optimizer, lr: f64, model: &Model) -> Self {
        let zeros: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            kind,
            lr,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    fn apply(&mut self, model: &mut Model, grads: &[Vec<f64>]) {
        self.step += 1;
        for (k, (param, g)) in model.params_mut().iter_mut().zip(grads).enumerate() {
            let w = param.data_mut();
            match self.kind {
                Optimizer::SgdMomentum { momentum } => {
                    for ((wi, &gi), vi) in w.iter_mut().zip(g).zip(&mut self.first[k]) {
                        *vi = momentum * *vi - self.lr * gi;
                        *wi += *vi;
                    }
                }
                Optimizer::Adam { beta1, beta2, eps } => {
                    let c1 = 1.0 - beta1.powi(self.step);
                    let c2 = 1.0 - beta2.powi(self.step);
                    let (m, v) = (&mut self.first[k], &mut self.second[k]);
                    for (((wi, &gi), mi), vi) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                        *wi -= self.lr * (*mi / c1) / ((*vi / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

/// Trains the default VGG-style architecture sized to the sinograms.
pub fn train(
    dataset: &[(Sinogram, usize)],
    labels: &LabelSet,
    config: &TrainConfig,
) -> Result<(Model, Vec<EpochStats>), CnnError> {
    let first = dataset.first().ok_or(CnnError::EmptyDataset)?;
    let arch = Architecture::vgg_default(first.0.n_rho(), first.0.n_theta(), labels.len())?;
    train_with_architecture(arch, dataset, labels, config)
}

/// Mini-batch training from a He-uniform start. The initialization and
/// every per-epoch shuffle draw from one ChaCha stream seeded with
/// `config.seed`, so results are bit-reproducible.
pub fn train_with_architecture(
    arch: Architecture,
    dataset: &[(Sinogram, usize)],
    labels: &LabelSet,
    config: &TrainConfig,
) -> Result<(Model, Vec<EpochStats>), CnnError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(CnnError::EmptyDataset);
    }
    let classes = labels.len();
    if let Some((_, label)) = dataset.iter().find(|(_, l)| *l >= classes) {
        return Err(CnnError::LabelOutOfRange { label: *label, classes });
    }
    if dataset.iter().all(|(_, l)| *l == dataset[0].1) {
        return Err(CnnError::SingleClass);
    }
    let [_, h, w] = arch.input();
    if let Some((s, _)) = dataset.iter().find(|(s, _)| s.n_rho() != h || s.n_theta() != w) {
        return Err(CnnError::ShapeMismatch {
            expected: vec![1, h, w],
            found: vec![1, s.n_rho(), s.n_theta()],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Model::he_uniform(arch, labels.clone(), &mut rng)?;
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, &model);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<&[f64]> = batch.iter().map(|&i| dataset[i].0.values()).collect();
            let targets: Vec<usize> = batch.iter().map(|&i| dataset[i].1).collect();
            let (loss, grads, _) = model.batch_step(&inputs, &targets)?;
            if !loss.is_finite() {
                return Err(CnnError::NonFinite("training loss"));
            }
            loss_sum += loss * batch.len() as f64;
            opt.apply(&mut model, &grads);
        }
        let correct = dataset
            .iter()
            .filter(|(s, l)| argmax(&model.probabilities(s.values())) == *l)
            .count();
        history.push(EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / dataset.len() as f64,
            train_accuracy: correct as f64 / dataset.len() as f64,
        });
    }
    Ok((model, history))
}

/// `epoch,loss,train_accuracy` lines with a header.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,train_accuracy\n");
    for h in history {
        out.push_str(&format!("{},{},{}\n", h.epoch, h.loss, h.train_accuracy));
    }
    out
}
