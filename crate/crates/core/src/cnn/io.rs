//! Binary model files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "SRFMODEL"
//! version    u32
//! input      3 x u32  channels, height, width
//! layers     u32 count, then per layer: u8 tag [+ u32 width for conv/dense]
//! labels     u32 count, then per label: u32 byte length + UTF-8 bytes
//! params     u64 count of f64 values, then the values (f64 LE) in
//!            parameter-tensor order
//! ```

use thiserror::Error;

use super::{Architecture, LayerSpec, Model, Tensor, FORMAT_VERSION};
use crate::skeleton::LabelSet;

pub const MODEL_MAGIC: &[u8; 8] = b"SRFMODEL";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelIoError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),
}

const TAG_CONV: u8 = 0;
const TAG_RELU: u8 = 1;
const TAG_POOL: u8 = 2;
const TAG_FLATTEN: u8 = 3;
const TAG_DENSE: u8 = 4;
const TAG_SOFTMAX: u8 = 5;

pub fn save_model(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let arch = model.architecture();
    for d in arch.input() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(arch.layers().len() as u32).to_le_bytes());
    for layer in arch.layers() {
        match *layer {
            LayerSpec::Conv { out_channels } => {
                out.push(TAG_CONV);
                out.extend_from_slice(&(out_channels as u32).to_le_bytes());
            }
            LayerSpec::Relu => out.push(TAG_RELU),
            LayerSpec::MaxPool => out.push(TAG_POOL),
            LayerSpec::Flatten => out.push(TAG_FLATTEN),
            LayerSpec::Dense { out_features } => {
                out.push(TAG_DENSE);
                out.extend_from_slice(&(out_features as u32).to_le_bytes());
            }
            LayerSpec::Softmax => out.push(TAG_SOFTMAX),
        }
    }
    let names = model.labels().names();
    out.extend_from_slice(&(names.len() as u32).to_le_bytes());
    for name in names {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    let total: usize = model.params().iter().map(Tensor::len).sum();
    out.extend_from_slice(&(total as u64).to_le_bytes());
    for p in model.params() {
        for v in p.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelIoError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| ModelIoError::CorruptPayload(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, ModelIoError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelIoError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ModelIoError> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn load_model(bytes: &[u8]) -> Result<Model, ModelIoError> {
    let corrupt = |m: String| ModelIoError::CorruptPayload(m);
    if bytes.len() < MODEL_MAGIC.len() || &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let mut r = Reader {
        buf: bytes,
        pos: MODEL_MAGIC.len(),
    };
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(ModelIoError::UnsupportedVersion(version));
    }
    let mut input = [0usize; 3];
    for d in &mut input {
        *d = r.u32("input shape")? as usize;
    }
    let n_layers = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        layers.push(match r.u8("layer tag")? {
            TAG_CONV => LayerSpec::Conv {
                out_channels: r.u32("conv width")? as usize,
            },
            TAG_RELU => LayerSpec::Relu,
            TAG_POOL => LayerSpec::MaxPool,
            TAG_FLATTEN => LayerSpec::Flatten,
            TAG_DENSE => LayerSpec::Dense {
                out_features: r.u32("dense width")? as usize,
            },
            TAG_SOFTMAX => LayerSpec::Softmax,
            t => return Err(corrupt(format!("unknown layer tag {t}"))),
        });
    }
    let arch = Architecture::new(input, layers).map_err(|e| corrupt(e.to_string()))?;

    let n_labels = r.u32("label count")? as usize;
    let mut names = Vec::with_capacity(n_labels.min(1024));
    for _ in 0..n_labels {
        let len = r.u32("label length")? as usize;
        let raw = r.take(len, "label")?;
        names.push(String::from_utf8(raw.to_vec()).map_err(|e| corrupt(e.to_string()))?);
    }
    let labels = LabelSet::new(names).map_err(|e| corrupt(e.to_string()))?;

    let total = r.u64("parameter count")? as usize;
    let shapes = arch.param_shapes();
    let expected: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
    if total != expected {
        return Err(corrupt(format!(
            "{total} parameters declared, architecture needs {expected}"
        )));
    }
    let remaining = bytes.len() - r.pos;
    if remaining != total * 8 {
        return Err(corrupt(format!(
            "{remaining} parameter bytes present, {} expected",
            total * 8
        )));
    }
    let mut params = Vec::with_capacity(shapes.len());
    for shape in shapes {
        let n: usize = shape.iter().product();
        let raw = r.take(n * 8, "parameters")?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        params.push(Tensor::new(shape, data).map_err(|e| corrupt(e.to_string()))?);
    }
    Model::from_parts(arch, params, labels).map_err(|e| corrupt(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let labels = LabelSet::new(["wave", "clap", "kick"]).unwrap();
        Model::he_uniform(Architecture::vgg_default(16, 12, 3).unwrap(), labels, &mut rng).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let back = load_model(&save_model(&m)).unwrap();
        assert_eq!(back, m);
        for (a, b) in m.params().iter().zip(back.params()) {
            let ab: Vec<u64> = a.data().iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u64> = b.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb);
        }
    }

    #[test]
    fn truncated_stream_is_corrupt() {
        let bytes = save_model(&model());
        for cut in [bytes.len() - 1, bytes.len() - 8, 30, 13] {
            assert!(
                matches!(load_model(&bytes[..cut]), Err(ModelIoError::CorruptPayload(_))),
                "cut at {cut}"
            );
        }
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(load_model(&longer), Err(ModelIoError::CorruptPayload(_))));
    }

    #[test]
    fn wrong_magic_and_version() {
        let mut bytes = save_model(&model());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(load_model(&bad), Err(ModelIoError::BadMagic));
        assert_eq!(load_model(b"SRF"), Err(ModelIoError::BadMagic));
        bytes[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert_eq!(load_model(&bytes), Err(ModelIoError::UnsupportedVersion(7)));
    }
}
