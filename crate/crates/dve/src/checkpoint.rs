//! Checkpoint directories.
//!
//! ```text
//! <dir>/metadata.json       dims, alpha, seed, encoders, selected epoch, config
//! <dir>/manifest.json       tensor name -> file, shape
//! <dir>/history.json        per-epoch validation metrics
//! <dir>/*.bin               little-endian f32, row-major
//! ```
//!
//! Writing is deterministic: the same model always produces the same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use dve_core::evaluator::{EpochMetrics, EvaluatorHeads, FeatureDims};
use dve_core::{EvaluatorModel, TrainConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoders::EncoderSpec;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint format {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("tensor `{name}`: {message}")]
    Tensor { name: String, message: String },
    #[error("encoder spec `{metadata}` does not match recorded encoder id `{model}`")]
    EncoderMismatch { metadata: String, model: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub format_version: u32,
    pub dims: FeatureDims,
    pub alpha: f64,
    pub seed: u64,
    pub visual_encoder: EncoderSpec,
    pub text_encoder: EncoderSpec,
    pub visual_encoder_id: String,
    pub text_encoder_id: String,
    pub selected_epoch: Option<usize>,
    pub train_config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub file: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub dtype: String,
    pub tensors: Vec<TensorEntry>,
}

/// A model plus the encoder specs needed to rebuild its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: EvaluatorModel,
    pub visual: EncoderSpec,
    pub text: EncoderSpec,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.to_path_buf(), source }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CheckpointError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| CheckpointError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CheckpointError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| CheckpointError::Json { path: path.to_path_buf(), source })
}

fn f32_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

fn read_f32(path: &Path, entry: &TensorEntry) -> Result<Vec<f64>, CheckpointError> {
    let bytes = fs::read(path).map_err(io(path))?;
    let expected: usize = entry.shape.iter().product();
    if bytes.len() != expected * 4 {
        return Err(CheckpointError::Tensor {
            name: entry.name.clone(),
            message: format!("{} bytes for shape {:?}", bytes.len(), entry.shape),
        });
    }
    Ok(bytes.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect())
}

fn tensors(dim: usize) -> [(&'static str, &'static str, Vec<usize>); 4] {
    [
        ("strength.weight", "strength_weight.bin", vec![dim]),
        ("strength.bias", "strength_bias.bin", vec![1]),
        ("classifier.weight", "classifier_weight.bin", vec![2, dim]),
        ("classifier.bias", "classifier_bias.bin", vec![2]),
    ]
}

impl Checkpoint {
    pub fn new(model: EvaluatorModel, visual: EncoderSpec, text: EncoderSpec) -> Self {
        Self { model, visual, text }
    }

    /// Write into `dir`, creating it and replacing any previous checkpoint.
    pub fn save(&self, dir: &Path) -> Result<(), CheckpointError> {
        fs::create_dir_all(dir).map_err(io(dir))?;
        let m = &self.model;
        let dim = m.dims.fused();
        let meta = Metadata {
            format_version: FORMAT_VERSION,
            dims: m.dims,
            alpha: m.config.alpha,
            seed: m.config.seed,
            visual_encoder: self.visual.clone(),
            text_encoder: self.text.clone(),
            visual_encoder_id: m.visual_encoder.clone(),
            text_encoder_id: m.text_encoder.clone(),
            selected_epoch: m.selected_epoch,
            train_config: m.config.clone(),
        };
        write_json(&dir.join("metadata.json"), &meta)?;

        let h = &m.heads;
        let blobs: [&[f64]; 4] = [&h.strength.weight, &[h.strength.bias], &h.classifier.weight, &h.classifier.bias];
        let mut entries = Vec::new();
        for ((name, file, shape), values) in tensors(dim).into_iter().zip(blobs) {
            let path = dir.join(file);
            fs::write(&path, f32_bytes(values)).map_err(io(&path))?;
            entries.push(TensorEntry { name: name.into(), file: file.into(), shape });
        }
        write_json(&dir.join("manifest.json"), &Manifest { dtype: "f32-le".into(), tensors: entries })?;
        write_json(&dir.join("history.json"), &m.history)
    }

    pub fn load(dir: &Path) -> Result<Self, CheckpointError> {
        let meta: Metadata = read_json(&dir.join("metadata.json"))?;
        if meta.format_version != FORMAT_VERSION {
            return Err(CheckpointError::Version { found: meta.format_version });
        }
        for (spec, id) in [(&meta.visual_encoder, &meta.visual_encoder_id), (&meta.text_encoder, &meta.text_encoder_id)]
        {
            if spec.kind.as_str() != id {
                return Err(CheckpointError::EncoderMismatch { metadata: spec.kind.to_string(), model: id.clone() });
            }
        }
        let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
        let dim = meta.dims.fused();
        let mut heads = EvaluatorHeads::zeros(dim);
        for (name, _, shape) in tensors(dim) {
            let entry = manifest.tensors.iter().find(|e| e.name == name).ok_or_else(|| CheckpointError::Tensor {
                name: name.into(),
                message: "missing from manifest".into(),
            })?;
            if entry.shape != shape {
                return Err(CheckpointError::Tensor {
                    name: name.into(),
                    message: format!("shape {:?}, expected {shape:?}", entry.shape),
                });
            }
            let values = read_f32(&dir.join(&entry.file), entry)?;
            match name {
                "strength.weight" => heads.strength.weight = values,
                "strength.bias" => heads.strength.bias = values[0],
                "classifier.weight" => heads.classifier.weight = values,
                _ => heads.classifier.bias = [values[0], values[1]],
            }
        }
        let history: Vec<EpochMetrics> = read_json(&dir.join("history.json"))?;
        let model = EvaluatorModel {
            dims: meta.dims,
            visual_encoder: meta.visual_encoder_id,
            text_encoder: meta.text_encoder_id,
            heads,
            config: meta.train_config,
            selected_epoch: meta.selected_epoch,
            history,
        };
        Ok(Self { model, visual: meta.visual_encoder, text: meta.text_encoder })
    }
}

impl Checkpoint {
    /// Rebuild both encoders and check they still produce the recorded sizes.
    pub fn build_encoders(&self) -> anyhow::Result<(crate::encoders::BoxedVisual, crate::encoders::BoxedText)> {
        let visual = self.visual.build_visual()?;
        let text = self.text.build_text()?;
        let dims = &self.model.dims;
        if visual.output_dim() != dims.visual || text.output_dim() != dims.text {
            anyhow::bail!(
                "encoders produce {}+{} dims but the checkpoint expects {}+{}",
                visual.output_dim(),
                text.output_dim(),
                dims.visual,
                dims.text
            );
        }
        Ok((visual, text))
    }
}
