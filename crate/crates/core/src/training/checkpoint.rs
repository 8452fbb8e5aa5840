//! Binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "DLG1"  magic
//! u32     format version
//! u64     header length, then that many bytes of JSON (CheckpointMeta)
//! u32     tensor count
//! per tensor:
//!   u32 name length, name bytes (UTF-8)
//!   u32 rank, then rank × u64 dimensions
//!   product(dims) × f64 payload
//!   8-byte checksum: leading bytes of SHA-256 over the payload
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrainConfig;
use crate::corpus::{LabelSet, Vocabulary};
use crate::encoders::{BowKind, Classifier, EncoderKind, ParameterSet, TfIdfModel};
use crate::error::{Error, Result};
use crate::nn::{Matrix, Parameters, RngState};

pub const MAGIC: &[u8; 4] = b"DLG1";
pub const FORMAT_VERSION: u32 = 1;

/// Everything in a checkpoint besides the tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: TrainConfig,
    pub vocab_hash: String,
    pub labels_hash: String,
    pub label_names: Vec<String>,
    pub epoch: usize,
    pub best_valid_error: f64,
    pub rng: RngState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub classifier: Classifier,
}

impl Checkpoint {
    pub fn encoder(&self) -> EncoderKind {
        self.classifier.kind()
    }

    /// Refuses a vocabulary or label set other than the one trained with.
    pub fn verify(&self, vocab: &Vocabulary, labels: &LabelSet) -> Result<()> {
        let vh = vocab.content_hash();
        if vh != self.meta.vocab_hash {
            return Err(Error::Config(format!(
                "vocabulary hash {vh} does not match checkpoint ({})",
                self.meta.vocab_hash
            )));
        }
        let lh = labels.content_hash();
        if lh != self.meta.labels_hash {
            return Err(Error::Config(format!(
                "label set hash {lh} does not match checkpoint ({})",
                self.meta.labels_hash
            )));
        }
        Ok(())
    }

    pub fn labels(&self) -> Result<LabelSet> {
        LabelSet::new(self.meta.label_names.clone())
    }
}

struct Tensor {
    name: String,
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn tensors_of(classifier: &Classifier) -> Vec<Tensor> {
    match classifier {
        Classifier::Neural { params, .. } => params
            .tensor_specs()
            .into_iter()
            .zip(params.tensors())
            .map(|((name, dims), t)| Tensor {
                name,
                dims,
                data: t.to_vec(),
            })
            .collect(),
        Classifier::Bow(m) => vec![
            Tensor {
                name: "idf".into(),
                dims: vec![m.idf.len()],
                data: m.idf.clone(),
            },
            Tensor {
                name: "weights".into(),
                dims: vec![m.weights.rows(), m.weights.cols()],
                data: m.weights.as_slice().to_vec(),
            },
            Tensor {
                name: "bias".into(),
                dims: vec![m.bias.len()],
                data: m.bias.clone(),
            },
        ],
    }
}

fn checksum(payload: &[u8]) -> [u8; 8] {
    let digest = Sha256::digest(payload);
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    out
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let header = serde_json::to_vec(&ckpt.meta).expect("metadata always serializes");
    let tensors = tensors_of(&ckpt.classifier);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for d in &t.dims {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        let start = out.len();
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let sum = checksum(&out[start..]);
        out.extend_from_slice(&sum);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corruption(format!("truncated checkpoint at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Corruption("length overflows usize".into()))
    }
}

fn read_tensor(r: &mut Reader<'_>) -> Result<Tensor> {
    let name_len = r.u32()? as usize;
    let name = std::str::from_utf8(r.take(name_len)?)
        .map_err(|_| Error::Corruption("tensor name is not UTF-8".into()))?
        .to_string();
    let rank = r.u32()? as usize;
    if rank > 2 {
        return Err(Error::Corruption(format!("tensor {name} has rank {rank}")));
    }
    let dims: Vec<usize> = (0..rank).map(|_| r.len()).collect::<Result<_>>()?;
    let count = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::Corruption(format!("tensor {name} is impossibly large")))?;
    let payload = r.take(count)?;
    let stored = r.take(8)?;
    if checksum(payload) != stored {
        return Err(Error::Corruption(format!("checksum mismatch in tensor {name}")));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Tensor { name, dims, data })
}

fn expect_layout(tensors: &[Tensor], specs: &[(String, Vec<usize>)]) -> Result<()> {
    if tensors.len() != specs.len() {
        return Err(Error::Format(format!(
            "expected {} tensors, found {}",
            specs.len(),
            tensors.len()
        )));
    }
    for (t, (name, dims)) in tensors.iter().zip(specs) {
        if &t.name != name || &t.dims != dims {
            return Err(Error::Format(format!(
                "expected tensor {name} {dims:?}, found {} {:?}",
                t.name, t.dims
            )));
        }
    }
    Ok(())
}

fn rebuild(meta: &CheckpointMeta, tensors: Vec<Tensor>) -> Result<Classifier> {
    let model = &meta.config.model;
    let kind = model.encoder;
    if kind.is_bow() {
        let n_e = model.n_e;
        let v = model.vocab_size;
        let specs = [
            ("idf".to_string(), vec![v]),
            ("weights".to_string(), vec![n_e, v]),
            ("bias".to_string(), vec![n_e]),
        ];
        expect_layout(&tensors, &specs)?;
        let mut it = tensors.into_iter();
        let idf = it.next().expect("three tensors").data;
        let weights = Matrix::from_vec(n_e, v, it.next().expect("three tensors").data)?;
        let bias = it.next().expect("three tensors").data;
        let bow_kind = if kind == EncoderKind::BowSingle {
            BowKind::Single
        } else {
            BowKind::Flattened
        };
        return Ok(Classifier::Bow(TfIdfModel {
            kind: bow_kind,
            idf,
            weights,
            bias,
        }));
    }
    let mut params = ParameterSet::zeros(model);
    expect_layout(&tensors, &params.tensor_specs())?;
    for (slot, t) in params.tensors_mut().into_iter().zip(tensors) {
        slot.copy_from_slice(&t.data);
    }
    if !params.all_finite() {
        return Err(Error::Corruption("non-finite parameter values".into()));
    }
    Classifier::neural(kind, params)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < 4 || r.take(4)? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32().map_err(|_| Error::Format("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let header_len = r.len()?;
    let meta: CheckpointMeta = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| Error::Corruption(format!("bad checkpoint header: {e}")))?;
    meta.config.validate()?;
    let count = r.u32()? as usize;
    let tensors: Vec<Tensor> = (0..count).map(|_| read_tensor(&mut r)).collect::<Result<_>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Corruption(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let classifier = rebuild(&meta, tensors)?;
    Ok(Checkpoint { meta, classifier })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(ckpt)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
