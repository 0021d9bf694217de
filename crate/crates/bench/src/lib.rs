//! Shared fixtures for the pipeline benchmarks.

use srf_core::cnn::{Architecture, Model, Tensor};
use srf_core::skeleton::{synth_generate, ActionSequence, LabelSet, SynthSpec};
use srf_core::{MahalanobisMatrix, Sinogram, SrfConfig};

pub const LAMBDA_REL: f64 = 1e-6;

/// One synthetic 25-joint sequence of `frames` frames.
pub fn sequence(frames: usize) -> ActionSequence {
    synth_generate(&SynthSpec::well_separated(3), 1, 1, frames, 11)
        .expect("valid synthetic request")
        .remove(0)
}

pub fn matrix(frames: usize) -> MahalanobisMatrix {
    MahalanobisMatrix::from_sequence(&sequence(frames), LAMBDA_REL).expect("synthetic frames are finite")
}

pub fn sinogram(frames: usize, config: &SrfConfig) -> Sinogram {
    srf_core::srf(&matrix(frames), config).expect("sequence is long enough")
}

/// The default classifier for `classes` actions, He-initialized with a fixed seed.
pub fn model(config: &SrfConfig, classes: usize) -> Model {
    use rand::SeedableRng;
    let arch = Architecture::vgg_default(config.n_rho, config.n_theta, classes).expect("valid architecture");
    let labels = LabelSet::numbered(classes).expect("at least one class");
    Model::he_uniform(arch, labels, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0)).expect("shapes agree")
}

/// `n` copies of one sinogram stacked into a batch.
pub fn batch(s: &Sinogram, n: usize) -> Tensor {
    Tensor::from_sinograms(std::iter::repeat_n(s, n)).expect("equal shapes")
}
