//! Binary checkpoints: a magic line, a JSON header, and little-endian f64 tensors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{LabelMode, PropertyCatalog};
use crate::decoders::mt::TargetVocab;
use crate::decoders::spr::Activation;
use crate::error::{Error, Result};
use crate::model::{Decoder, Model, ModelConfig};

const MAGIC: &str = "SPRL-CHECKPOINT v1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderMeta {
    pub task: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PropertyCatalog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<LabelMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<TargetVocab>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
}

/// How to rebuild the embedding lookup used in training.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub dim: usize,
    pub oov_seed: u64,
    /// Pre-trained vector file, absent for purely random embeddings.
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    /// Hash of the model configuration and decoder layout.
    pub fingerprint: String,
    pub epoch: usize,
    pub dev_metric: Option<f64>,
    pub model_config: ModelConfig,
    pub decoders: Vec<DecoderMeta>,
    pub tensors: Vec<TensorMeta>,
    pub clip_norm: Option<f64>,
    pub embeddings: EmbeddingMeta,
    pub payload_sha256: String,
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub model: Model,
}

/// Stable hash of a model's configuration and decoder layout.
pub fn fingerprint(config: &ModelConfig, decoders: &[DecoderMeta], tensors: &[TensorMeta]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(serde_json::to_vec(decoders).expect("decoder metadata serializes"));
    h.update(serde_json::to_vec(tensors).expect("tensor metadata serializes"));
    hex::encode(h.finalize())
}

fn decoder_meta(model: &Model, modes: &BTreeMap<String, LabelMode>) -> Vec<DecoderMeta> {
    model
        .decoders
        .iter()
        .map(|(task, d)| {
            let mut meta = DecoderMeta {
                task: task.clone(),
                kind: d.kind().to_string(),
                catalog: None,
                activation: None,
                mode: modes.get(task).copied(),
                vocab: None,
            };
            match d {
                Decoder::Spr(p) => {
                    meta.catalog = Some(p.catalog.clone());
                    meta.activation = Some(p.activation);
                }
                Decoder::Mt { vocab, .. } => meta.vocab = Some(vocab.clone()),
                _ => {}
            }
            meta
        })
        .collect()
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl Checkpoint {
    /// Snapshot of `model`. `modes` records the label mode of SPR decoders.
    pub fn new(
        model: Model,
        epoch: usize,
        dev_metric: Option<f64>,
        modes: &BTreeMap<String, LabelMode>,
        clip_norm: Option<f64>,
        embeddings: EmbeddingMeta,
    ) -> Self {
        let decoders = decoder_meta(&model, modes);
        let tensors: Vec<TensorMeta> = model
            .params()
            .iter()
            .map(|p| TensorMeta {
                name: p.name().to_string(),
                shape: p.shape().to_vec(),
            })
            .collect();
        let header = CheckpointHeader {
            version: FORMAT_VERSION,
            fingerprint: fingerprint(&model.config, &decoders, &tensors),
            epoch,
            dev_metric,
            model_config: model.config.clone(),
            decoders,
            tensors,
            clip_norm,
            embeddings,
            payload_sha256: String::new(),
        };
        Checkpoint { header, model }
    }

    fn payload(&self) -> Vec<u8> {
        let params = self.model.params();
        let n: usize = params.iter().map(|p| p.value().len()).sum();
        let mut out = Vec::with_capacity(n * 8);
        for p in params {
            for v in p.value().data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = self.payload();
        let mut header = self.header.clone();
        header.payload_sha256 = hex::encode(Sha256::digest(&payload));
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(json.len() + payload.len() + 64);
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "{}", json.len())?;
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (magic, rest) = split_line(bytes).ok_or_else(|| corrupt("missing magic line"))?;
        if magic != MAGIC.as_bytes() {
            return Err(corrupt("not a checkpoint file"));
        }
        let (len_line, rest) = split_line(rest).ok_or_else(|| corrupt("missing header length"))?;
        let header_len: usize = std::str::from_utf8(len_line)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt("bad header length"))?;
        if rest.len() < header_len {
            return Err(corrupt("truncated header"));
        }
        let header: CheckpointHeader = serde_json::from_slice(&rest[..header_len])
            .map_err(|e| corrupt(format!("bad header: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(corrupt(format!("unsupported version {}", header.version)));
        }
        let payload = &rest[header_len..];
        let expected: usize = header
            .tensors
            .iter()
            .map(|t| t.shape.iter().product::<usize>() * 8)
            .sum();
        if payload.len() != expected {
            return Err(corrupt(format!(
                "payload has {} bytes, header describes {expected}",
                payload.len()
            )));
        }
        if hex::encode(Sha256::digest(payload)) != header.payload_sha256 {
            return Err(corrupt("payload checksum mismatch"));
        }
        if fingerprint(&header.model_config, &header.decoders, &header.tensors) != header.fingerprint {
            return Err(corrupt("configuration fingerprint mismatch"));
        }
        let mut model = skeleton(&header)?;
        {
            let mut params = model.params_mut();
            if params.len() != header.tensors.len() {
                return Err(corrupt(format!(
                    "header lists {} tensors, model layout has {}",
                    header.tensors.len(),
                    params.len()
                )));
            }
            let mut offset = 0;
            for (p, meta) in params.iter_mut().zip(&header.tensors) {
                if p.name() != meta.name || p.shape() != meta.shape.as_slice() {
                    return Err(corrupt(format!(
                        "tensor {} {:?} does not match layout {} {:?}",
                        meta.name,
                        meta.shape,
                        p.name(),
                        p.shape()
                    )));
                }
                for v in p.value_mut().data_mut() {
                    *v = f64::from_le_bytes(payload[offset..offset + 8].try_into().unwrap());
                    offset += 8;
                }
            }
        }
        Ok(Checkpoint { header, model })
    }

    /// Label mode recorded for an SPR task.
    pub fn mode(&self, task: &str) -> Option<LabelMode> {
        self.header.decoders.iter().find(|d| d.task == task).and_then(|d| d.mode)
    }
}

fn split_line(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let i = bytes.iter().position(|&b| b == b'\n')?;
    Some((&bytes[..i], &bytes[i + 1..]))
}

/// A model with the header's layout; values are overwritten by the payload.
fn skeleton(header: &CheckpointHeader) -> Result<Model> {
    let mut model = Model::new(header.model_config.clone(), 0);
    for d in &header.decoders {
        match d.kind.as_str() {
            "spr" => {
                let catalog = d
                    .catalog
                    .clone()
                    .ok_or_else(|| corrupt(format!("SPR decoder {:?} has no catalog", d.task)))?;
                let configured = model.config.activation;
                model.config.activation = d.activation.unwrap_or(configured);
                model.add_spr(&d.task, catalog, 0)?;
                model.config.activation = configured;
            }
            "propbank" => model.add_propbank(&d.task, 0)?,
            "supersense" => model.add_supersense(&d.task, 0)?,
            "mt" => {
                let vocab = d
                    .vocab
                    .clone()
                    .ok_or_else(|| corrupt(format!("MT decoder {:?} has no vocabulary", d.task)))?;
                model.add_mt(&d.task, vocab, 0)?;
            }
            other => return Err(corrupt(format!("unknown decoder kind {other:?}"))),
        }
    }
    Ok(model)
}
