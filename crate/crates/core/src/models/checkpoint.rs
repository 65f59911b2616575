//! Binary checkpoint container.
//!
//! Layout: the magic `LUPIETCK`, a little-endian `u32` format version, a
//! little-endian `u64` header length, a JSON header (architecture, config,
//! seed, vocabulary hash, tensor names and shapes), then every tensor's raw
//! little-endian `f64` values in header order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

use super::params::{Architecture, ModelConfig, ModelParams};

const MAGIC: &[u8; 8] = b"LUPIETCK";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    architecture: Architecture,
    config: ModelConfig,
    seed: u64,
    vocab_hash: String,
    tensors: Vec<(String, Vec<usize>)>,
}

pub fn write_checkpoint(params: &ModelParams, vocab_hash: &str, mut out: impl Write) -> Result<()> {
    let header = Header {
        architecture: params.architecture,
        config: params.config.clone(),
        seed: params.seed,
        vocab_hash: vocab_hash.to_string(),
        tensors: params.iter().map(|(n, t)| (n.to_string(), t.shape().to_vec())).collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for (_, t) in params.iter() {
        let mut buf = Vec::with_capacity(t.len() * 8);
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

/// Returns the parameters and the vocabulary hash they were trained with.
pub fn read_checkpoint(mut input: impl Read) -> Result<(ModelParams, String)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;

    let mut tensors = BTreeMap::new();
    for (name, shape) in header.tensors {
        let n: usize = shape.iter().product();
        let mut raw = vec![0u8; n * 8];
        input.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        tensors.insert(name, Tensor::new(shape, data)?);
    }
    let params = ModelParams::from_tensors(header.architecture, header.config, header.seed, tensors)?;
    Ok((params, header.vocab_hash))
}

pub fn save_checkpoint(params: &ModelParams, vocab_hash: &str, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write_checkpoint(params, vocab_hash, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelParams, String)> {
    read_checkpoint(std::io::BufReader::new(fs::File::open(path)?))
}
