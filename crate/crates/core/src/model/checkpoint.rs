//! Binary checkpoint format: magic, version, JSON header, raw tensors.

use super::config::ModelConfig;
use super::params::{Params, Scalar};
use super::vocab::Vocab;
use crate::error::ModelError;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"SEQ2SEQ\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    src_vocab: Vec<String>,
    tgt_vocab: Vec<String>,
    dtype: String,
    init: String,
    feeding: String,
    tensors: Vec<TensorMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    shape: Vec<usize>,
}

pub struct Checkpoint<F: Scalar> {
    pub config: ModelConfig,
    pub params: Params<F>,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
}

pub fn save_checkpoint<F: Scalar>(
    path: &Path,
    config: &ModelConfig,
    params: &Params<F>,
    src_vocab: &Vocab,
    tgt_vocab: &Vocab,
) -> Result<(), ModelError> {
    let mut tensors = Vec::new();
    params.for_each(|name, a| {
        tensors.push(TensorMeta {
            name,
            shape: a.shape().to_vec(),
        })
    });
    let header = Header {
        config: config.clone(),
        src_vocab: src_vocab.tokens().to_vec(),
        tgt_vocab: tgt_vocab.tokens().to_vec(),
        dtype: F::DTYPE.to_string(),
        init: "decoder state from concatenated final encoder states".into(),
        feeding: "no input feeding; context joins the output projection".into(),
        tensors,
    };
    let header_json = serde_json::to_vec(&header).map_err(|e| ModelError::Format(e.to_string()))?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(header_json.len() as u64).to_le_bytes())?;
    file.write_all(&header_json)?;
    let mut err = None;
    params.for_each(|_, a| {
        if err.is_some() {
            return;
        }
        let mut bytes = Vec::with_capacity(a.len() * F::width());
        for &x in a.iter() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        if let Err(e) = file.write_all(&bytes) {
            err = Some(e);
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<Checkpoint<F>, ModelError> {
    let mut file = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Format("bad magic bytes".into()));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(ModelError::Format(format!("unsupported version {version}")));
    }
    let mut len8 = [0u8; 8];
    file.read_exact(&mut len8)?;
    let header_len = u64::from_le_bytes(len8) as usize;
    let mut header_json = vec![0u8; header_len];
    file.read_exact(&mut header_json)?;
    let header: Header =
        serde_json::from_slice(&header_json).map_err(|e| ModelError::Format(e.to_string()))?;
    if header.dtype != F::DTYPE {
        return Err(ModelError::Format(format!(
            "dtype mismatch: file holds {}, requested {}",
            header.dtype,
            F::DTYPE
        )));
    }
    header.config.validate()?;
    let src_vocab = Vocab::from_tokens(header.src_vocab.clone());
    let tgt_vocab = Vocab::from_tokens(header.tgt_vocab.clone());
    let mut params: Params<F> =
        Params::init(&header.config, src_vocab.len(), tgt_vocab.len());
    let mut idx = 0;
    let mut read_err: Option<ModelError> = None;
    params.for_each_mut(|name, mut a| {
        if read_err.is_some() {
            return;
        }
        let meta = match header.tensors.get(idx) {
            Some(m) => m,
            None => {
                read_err = Some(ModelError::Format("missing tensor entry".into()));
                return;
            }
        };
        if meta.name != name || meta.shape != a.shape() {
            read_err = Some(ModelError::Format(format!(
                "tensor mismatch at {name}: header says {} {:?}",
                meta.name, meta.shape
            )));
            return;
        }
        let mut bytes = vec![0u8; a.len() * F::width()];
        if let Err(e) = file.read_exact(&mut bytes) {
            read_err = Some(e.into());
            return;
        }
        for (x, chunk) in a.iter_mut().zip(bytes.chunks_exact(F::width())) {
            *x = F::from_le_slice(chunk);
        }
        idx += 1;
    });
    if let Some(e) = read_err {
        return Err(e);
    }
    Ok(Checkpoint {
        config: header.config,
        params,
        src_vocab,
        tgt_vocab,
    })
}
