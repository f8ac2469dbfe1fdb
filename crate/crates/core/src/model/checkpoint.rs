//! Binary checkpoint format.
//!
//! ```text
//! 8 bytes   magic "APEMODEL"
//! 4 bytes   format version, u32 little-endian
//! 4 bytes   header length N, u32 little-endian
//! N bytes   UTF-8 JSON header {"config", "vocab", "params": [{"name", "shape"}]}
//! ...       parameters in canonical layout order, little-endian floats of the
//!           configured width (4 bytes for f32 models, 8 for f64)
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::numerics::{Float, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"APEMODEL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab: Vec<String>,
    params: Vec<ParamEntry>,
}

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

pub fn save_checkpoint<T: Float>(model: &Model<T>, vocab: &Vocabulary, path: &Path) -> Result<()> {
    if vocab.len() != model.config().vocab_size {
        return Err(Error::VocabSizeMismatch {
            vocab: vocab.len(),
            config: model.config().vocab_size,
        });
    }
    let header = Header {
        config: model.config().clone(),
        vocab: vocab.tokens().to_vec(),
        params: model
            .param_names()
            .iter()
            .zip(model.params())
            .map(|(name, p)| ParamEntry {
                name: name.clone(),
                shape: p.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Header(e.to_string()))?;
    let mut bytes = Vec::with_capacity(16 + json.len() + model.param_count() * T::BYTES);
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&json);
    for p in model.params() {
        for &v in p.data() {
            v.write_le(&mut bytes);
        }
    }
    // Write-then-rename keeps an existing checkpoint intact on failure.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Float>(path: &Path) -> Result<(Model<T>, Vocabulary)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

/// Reads only the configuration stored in a checkpoint's header, e.g. to
/// pick the float width before a full load.
pub fn peek_config(path: &Path) -> Result<ModelConfig> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_header(&mut bytes.as_slice())?.config)
}

fn decode_header(bytes: &mut &[u8]) -> Result<Header> {
    let magic = take(bytes, 8, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            found: magic.to_vec(),
        });
    }
    let version = u32::from_le_bytes(take(bytes, 4, "version")?.try_into().expect("4"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let hlen = u32::from_le_bytes(take(bytes, 4, "header length")?.try_into().expect("4"));
    let header: Header = serde_json::from_slice(take(bytes, hlen as usize, "header")?)
        .map_err(|e| Error::Header(e.to_string()))?;
    if header.vocab.len() != header.config.vocab_size {
        return Err(Error::VocabSizeMismatch {
            vocab: header.vocab.len(),
            config: header.config.vocab_size,
        });
    }
    Ok(header)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Truncated(format!(
            "{what}: need {n} bytes, {} left",
            bytes.len()
        )));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub(crate) fn decode_checkpoint<T: Float>(mut bytes: &[u8]) -> Result<(Model<T>, Vocabulary)> {
    let header = decode_header(&mut bytes)?;
    if header.config.float != T::WIDTH {
        return Err(Error::Header(format!(
            "checkpoint stores {:?} parameters, caller expects {:?}",
            header.config.float,
            T::WIDTH
        )));
    }
    let vocab = Vocabulary::from_tokens(header.vocab).map_err(|e| Error::Header(e.to_string()))?;
    let mut params = Vec::with_capacity(header.params.len());
    for entry in &header.params {
        let n: usize = entry.shape.iter().product();
        let raw = take(&mut bytes, n * T::BYTES, &entry.name)?;
        let data = raw.chunks_exact(T::BYTES).map(T::read_le).collect();
        params.push(Tensor::new(entry.shape.clone(), data)?);
    }
    if !bytes.is_empty() {
        return Err(Error::Header(format!(
            "{} trailing bytes after parameters",
            bytes.len()
        )));
    }
    let model =
        Model::from_params(header.config, params).map_err(|e| Error::Header(e.to_string()))?;
    Ok((model, vocab))
}
