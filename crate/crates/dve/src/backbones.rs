//! Pretrained backbones on candle (CPU). Both run as frozen feature
//! extractors; only the evaluator heads are trained.

use std::path::Path;

use anyhow::{anyhow, Context};
use candle_core::{DType, Device, Module, Tensor};
use candle_nn::{Func, VarBuilder};
use candle_transformers::models::bert::{BertModel, Config};
use candle_transformers::models::resnet::resnet50_no_final_layer;
use dve_core::encoder::{check_output, EncoderError};
use dve_core::{Hypothesis, ImagePremise, TextPairEncoder, VisualEncoder};
use tokenizers::{Tokenizer, TruncationParams, TruncationStrategy};

use crate::image_prep::{load_rgb, preprocess, CROP};

fn backend(e: impl std::fmt::Display) -> EncoderError {
    EncoderError::Backend(e.to_string())
}

pub struct ResNetEncoder {
    model: Func<'static>,
    device: Device,
}

impl ResNetEncoder {
    pub const ID: &'static str = "paper-visual";
    pub const DIM: usize = 2048;

    pub fn load(weights: &Path) -> anyhow::Result<Self> {
        let device = Device::Cpu;
        // SAFETY: the file is memory-mapped read-only and not modified while loaded.
        let vb = unsafe { VarBuilder::from_mmaped_safetensors(&[weights], DType::F32, &device) }
            .with_context(|| format!("loading {}", weights.display()))?;
        let model = resnet50_no_final_layer(vb)?;
        Ok(Self { model, device })
    }
}

impl VisualEncoder for ResNetEncoder {
    fn id(&self) -> &str {
        Self::ID
    }

    fn output_dim(&self) -> usize {
        Self::DIM
    }

    fn encode_image(&self, premise: &ImagePremise) -> Result<Vec<f32>, EncoderError> {
        let img = load_rgb(Path::new(&premise.source_path))
            .map_err(|reason| EncoderError::ImageDecode { image_id: premise.image_id.clone(), reason })?;
        let data = preprocess(&img);
        let side = CROP as usize;
        let input = Tensor::from_vec(data, (1, 3, side, side), &self.device).map_err(backend)?;
        let out = self.model.forward(&input).map_err(backend)?;
        let v: Vec<f32> = out.flatten_all().and_then(|t| t.to_vec1()).map_err(backend)?;
        check_output(Self::DIM, &v)?;
        Ok(v)
    }
}

pub struct BertPairEncoder {
    model: BertModel,
    tokenizer: Tokenizer,
    hidden: usize,
    max_tokens: usize,
    device: Device,
}

impl BertPairEncoder {
    pub const ID: &'static str = "paper-text";

    pub fn load(weights: &Path, config: &Path, tokenizer: &Path, max_tokens: usize) -> anyhow::Result<Self> {
        let device = Device::Cpu;
        let config: Config = serde_json::from_str(&std::fs::read_to_string(config)?)?;
        let mut tokenizer = Tokenizer::from_file(tokenizer).map_err(|e| anyhow!("tokenizer: {e}"))?;
        // keep the hypothesis whole, cut the tail of the second segment
        tokenizer
            .with_truncation(Some(TruncationParams {
                max_length: max_tokens,
                strategy: TruncationStrategy::OnlySecond,
                ..TruncationParams::default()
            }))
            .map_err(|e| anyhow!("tokenizer: {e}"))?;
        tokenizer.with_padding(None);
        // SAFETY: as above.
        let vb = unsafe { VarBuilder::from_mmaped_safetensors(&[weights], DType::F32, &device) }
            .with_context(|| format!("loading {}", weights.display()))?;
        let hidden = config.hidden_size;
        let model = BertModel::load(vb, &config)?;
        Ok(Self { model, tokenizer, hidden, max_tokens, device })
    }
}

impl TextPairEncoder for BertPairEncoder {
    fn id(&self) -> &str {
        Self::ID
    }

    fn output_dim(&self) -> usize {
        self.hidden
    }

    fn encode_pair(&self, hypothesis: &Hypothesis, text: &str) -> Result<Vec<f32>, EncoderError> {
        if text.trim().is_empty() {
            return Err(EncoderError::EmptyText);
        }
        let hyp_len = self.tokenizer.encode(hypothesis.as_str(), false).map_err(backend)?.len();
        // [CLS] hyp [SEP] text [SEP]
        let needed = hyp_len + 4;
        if needed > self.max_tokens {
            return Err(EncoderError::TokenBudgetExceeded { needed, budget: self.max_tokens });
        }
        let enc = self.tokenizer.encode((hypothesis.as_str(), text), true).map_err(backend)?;
        let row = |ids: &[u32]| Tensor::new(ids, &self.device).and_then(|t| t.unsqueeze(0));
        let input_ids = row(enc.get_ids()).map_err(backend)?;
        let type_ids = row(enc.get_type_ids()).map_err(backend)?;
        let mask = row(enc.get_attention_mask()).map_err(backend)?;
        let hidden = self.model.forward(&input_ids, &type_ids, Some(&mask)).map_err(backend)?;
        // pooled pair representation: the [CLS] position
        let cls = hidden.get(0).and_then(|h| h.get(0)).and_then(|t| t.to_vec1::<f32>()).map_err(backend)?;
        check_output(self.hidden, &cls)?;
        Ok(cls)
    }
}
