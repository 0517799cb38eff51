//! Encoder selection by name.
//!
//! `test-deterministic` is always available. `paper-visual` (ResNet-50
//! pooled features, 2048 dims) and `paper-text` (BERT pair encoder, pooled
//! `[CLS]`) need the `backbones` feature and local weight files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use dve_core::{DeterministicTestEncoder, TextPairEncoder, VisualEncoder};
use serde::{Deserialize, Serialize};

pub type BoxedVisual = Box<dyn VisualEncoder + Send + Sync>;
pub type BoxedText = Box<dyn TextPairEncoder + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderKind {
    #[serde(rename = "paper-visual")]
    PaperVisual,
    #[serde(rename = "paper-text")]
    PaperText,
    #[serde(rename = "test-deterministic")]
    TestDeterministic,
}

impl EncoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::PaperVisual => "paper-visual",
            EncoderKind::PaperText => "paper-text",
            EncoderKind::TestDeterministic => "test-deterministic",
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-visual" => Ok(EncoderKind::PaperVisual),
            "paper-text" => Ok(EncoderKind::PaperText),
            "test-deterministic" => Ok(EncoderKind::TestDeterministic),
            _ => bail!("unknown encoder `{s}` (expected paper-visual, paper-text or test-deterministic)"),
        }
    }
}

/// Everything needed to rebuild an encoder; stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    /// Output size of the test encoder. Ignored by the pretrained ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Safetensors weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    /// `config.json` of the text model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_config: Option<PathBuf>,
    /// `tokenizer.json` of the text model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<usize>,
}

pub const TEST_DEFAULT_DIM: usize = 64;
pub const TEST_DEFAULT_SEED: u64 = 0;

impl EncoderSpec {
    pub fn new(kind: EncoderKind) -> Self {
        Self { kind, dim: None, seed: None, weights: None, model_config: None, tokenizer: None, max_tokens: None }
    }

    pub fn test(dim: usize, seed: u64) -> Self {
        Self { dim: Some(dim), seed: Some(seed), ..Self::new(EncoderKind::TestDeterministic) }
    }

    fn test_encoder(&self) -> DeterministicTestEncoder {
        let enc =
            DeterministicTestEncoder::new(self.dim.unwrap_or(TEST_DEFAULT_DIM), self.seed.unwrap_or(TEST_DEFAULT_SEED));
        match self.max_tokens {
            Some(n) => enc.with_max_tokens(n),
            None => enc,
        }
    }

    pub fn build_visual(&self) -> anyhow::Result<BoxedVisual> {
        match self.kind {
            EncoderKind::TestDeterministic => Ok(Box::new(self.test_encoder())),
            EncoderKind::PaperVisual => {
                let weights = self.weights.as_ref().context("paper-visual needs a `weights` path")?;
                pretrained_visual(weights)
            }
            EncoderKind::PaperText => bail!("paper-text is a text encoder, not a visual one"),
        }
    }

    pub fn build_text(&self) -> anyhow::Result<BoxedText> {
        match self.kind {
            EncoderKind::TestDeterministic => Ok(Box::new(self.test_encoder())),
            EncoderKind::PaperText => {
                let weights = self.weights.as_ref().context("paper-text needs a `weights` path")?;
                let config = self.model_config.as_ref().context("paper-text needs a `model_config` path")?;
                let tokenizer = self.tokenizer.as_ref().context("paper-text needs a `tokenizer` path")?;
                pretrained_text(weights, config, tokenizer, self.max_tokens.unwrap_or(512))
            }
            EncoderKind::PaperVisual => bail!("paper-visual is a visual encoder, not a text one"),
        }
    }
}

#[cfg(feature = "backbones")]
fn pretrained_visual(weights: &std::path::Path) -> anyhow::Result<BoxedVisual> {
    Ok(Box::new(crate::backbones::ResNetEncoder::load(weights)?))
}

#[cfg(feature = "backbones")]
fn pretrained_text(
    weights: &std::path::Path,
    config: &std::path::Path,
    tokenizer: &std::path::Path,
    max_tokens: usize,
) -> anyhow::Result<BoxedText> {
    Ok(Box::new(crate::backbones::BertPairEncoder::load(weights, config, tokenizer, max_tokens)?))
}

#[cfg(not(feature = "backbones"))]
fn pretrained_visual(_: &std::path::Path) -> anyhow::Result<BoxedVisual> {
    bail!("paper-visual requires building with `--features backbones`")
}

#[cfg(not(feature = "backbones"))]
fn pretrained_text(
    _: &std::path::Path,
    _: &std::path::Path,
    _: &std::path::Path,
    _: usize,
) -> anyhow::Result<BoxedText> {
    bail!("paper-text requires building with `--features backbones`")
}
