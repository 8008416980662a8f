//! Model file format. All integers are u32 little-endian, all tensor
//! values f64 little-endian.
//!
//! ```text
//! magic        8 bytes  "S2PMODEL"
//! version      u32      1
//! config       u32 length + UTF-8 key=value lines
//! vocab        u32 count, then count × (u32 length + UTF-8 token),
//!              in id order starting at id 4 (ids 0..4 are reserved)
//! tensors      u32 count, then count × (u32 name length + name,
//!              u32 rows, u32 cols, rows·cols × f64, row-major)
//! ```
//!
//! Tensors appear in the order of `ModelParams::visit`.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{parse_kv, ModelConfig};
use super::model::ModelParams;
use super::train::TrainedModel;
use super::vocab::Vocab;
use super::TinyError;

pub const MAGIC: &[u8; 8] = b"S2PMODEL";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

pub fn model_to_bytes(model: &TrainedModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_str(&mut out, &model.config.to_kv());
    let entries = model.vocab.entries();
    put_u32(&mut out, entries.len());
    for t in entries {
        put_str(&mut out, t);
    }
    let tensors = model.params.named_tensors();
    put_u32(&mut out, tensors.len());
    for (name, m) in tensors {
        put_str(&mut out, &name);
        put_u32(&mut out, m.rows);
        put_u32(&mut out, m.cols);
        for v in &m.data {
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
    fn take(&mut self, n: usize) -> Result<&'a [u8], TinyError> {
        if self.buf.len() - self.pos < n {
            return Err(TinyError::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, TinyError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64, TinyError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, TinyError> {
        let n = self.u32()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| TinyError::Format(format!("invalid UTF-8 before byte {}", self.pos)))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<TrainedModel, TinyError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(TinyError::Format("bad magic".into()));
    }
    let version = r.u32()? as u32;
    if version != FORMAT_VERSION {
        return Err(TinyError::Format(format!("unsupported version {version}")));
    }
    let kv = r.string()?;
    let mut config = ModelConfig::default();
    let rest = config.apply_kv(parse_kv(&kv)?)?;
    if let Some((k, _)) = rest.first() {
        return Err(TinyError::Format(format!("unknown config key `{k}`")));
    }
    config.validate()?;
    let n = r.u32()?;
    let tokens = (0..n).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
    let vocab = Vocab::from_tokens(tokens)?;

    let mut params = ModelParams::init(&config, vocab.len(), &mut ChaCha8Rng::seed_from_u64(0));
    let expected: Vec<(String, usize, usize)> = params
        .named_tensors()
        .into_iter()
        .map(|(name, m)| (name, m.rows, m.cols))
        .collect();
    let count = r.u32()?;
    if count != expected.len() {
        return Err(TinyError::Format(format!("expected {} tensors, found {count}", expected.len())));
    }
    for ((name, rows, cols), slot) in expected.into_iter().zip(params.tensors_mut()) {
        let got = r.string()?;
        let (gr, gc) = (r.u32()?, r.u32()?);
        if got != name || (gr, gc) != (rows, cols) {
            return Err(TinyError::Format(format!("tensor {got} {gr}x{gc}, expected {name} {rows}x{cols}")));
        }
        for v in slot.data.iter_mut() {
            *v = r.f64()?;
        }
    }
    if r.pos != bytes.len() {
        return Err(TinyError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    if !params.all_finite() {
        return Err(TinyError::Format("non-finite parameter".into()));
    }
    Ok(TrainedModel { config, vocab, params })
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<(), TinyError> {
    std::fs::write(path, model_to_bytes(model)).map_err(|source| TinyError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, TinyError> {
    let bytes = std::fs::read(path).map_err(|source| TinyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ParallelPair;
    use crate::tinyformer::vocab::build_vocab;

    fn model() -> TrainedModel {
        let config = ModelConfig {
            d_model: 8,
            heads: 2,
            encoder_layers: 1,
            decoder_layers: 2,
            ffn_dim: 12,
            max_len: 10,
            dropout: 0.1,
            seed: 9,
        };
        let vocab = build_vocab(
            &[ParallelPair {
                source: "x = 1".into(),
                target: "SET x TO 1".into(),
            }],
            1,
        )
        .unwrap();
        let params = ModelParams::init(&config, vocab.len(), &mut ChaCha8Rng::seed_from_u64(9));
        TrainedModel { config, vocab, params }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = model_to_bytes(&m);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(model_from_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = model_to_bytes(&model());
        assert!(model_from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(model_from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(model_from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(model_from_bytes(&long).is_err());
    }
}
