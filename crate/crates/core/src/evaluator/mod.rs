//! The inference-aware evaluator.
//!
//! A triplet (image, hypothesis, update) is encoded into a visual and a
//! text-pair embedding, concatenated into a [`FusedFeature`], and fed to two
//! linear heads: a strength head producing an unbounded score (higher means
//! the update makes the hypothesis more likely) and a two-way classification
//! head (index 0 weakener, index 1 strengthener).

pub mod loss;
pub mod objective;
pub mod optim;
pub mod train;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{check_output, EncoderError, TextPairEncoder, VisualEncoder};
use crate::numeric::{dot, sigmoid, softmax2};
use crate::types::{Hypothesis, ImagePremise, UpdateLabel};

pub use loss::{categorical_loss, combined_loss, pairwise_contrastive_loss, LossError};
pub use objective::{BatchLosses, HeadGradients};
pub use train::{train, EncodedExample, EpochMetrics, TrainConfig, TrainError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model was built for encoder `{expected}`, got `{got}`")]
    EncoderMismatch { expected: String, got: String },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

/// Embedding sizes of the two encoders feeding the heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDims {
    pub visual: usize,
    pub text: usize,
}

impl FeatureDims {
    pub const fn new(visual: usize, text: usize) -> Self {
        Self { visual, text }
    }

    pub const fn fused(&self) -> usize {
        self.visual + self.text
    }
}

/// Concatenated embedding `[visual, text]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedFeature {
    values: Vec<f32>,
    visual_dim: usize,
}

impl FusedFeature {
    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn visual(&self) -> &[f32] {
        &self.values[..self.visual_dim]
    }

    pub fn text(&self) -> &[f32] {
        &self.values[self.visual_dim..]
    }

    pub fn dims(&self) -> FeatureDims {
        FeatureDims::new(self.visual_dim, self.values.len() - self.visual_dim)
    }

    /// Build from a raw vector whose first `visual_dim` entries are visual.
    pub fn from_parts(values: Vec<f32>, visual_dim: usize) -> Result<Self, EvalError> {
        if visual_dim > values.len() {
            return Err(EvalError::DimensionMismatch { expected: visual_dim, got: values.len() });
        }
        Ok(Self { values, visual_dim })
    }
}

/// Concatenate a visual and a text-pair embedding in that order, checking
/// both against `dims`.
pub fn fuse(visual: &[f32], text: &[f32], dims: FeatureDims) -> Result<FusedFeature, EvalError> {
    if visual.len() != dims.visual {
        return Err(EvalError::DimensionMismatch { expected: dims.visual, got: visual.len() });
    }
    if text.len() != dims.text {
        return Err(EvalError::DimensionMismatch { expected: dims.text, got: text.len() });
    }
    let mut values = Vec::with_capacity(dims.fused());
    values.extend_from_slice(visual);
    values.extend_from_slice(text);
    Ok(FusedFeature { values, visual_dim: dims.visual })
}

/// `s = ⟨w, m⟩ + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthHead {
    pub weight: Vec<f64>,
    pub bias: f64,
}

impl StrengthHead {
    pub fn zeros(dim: usize) -> Self {
        Self { weight: vec![0.0; dim], bias: 0.0 }
    }

    pub fn score(&self, m: &FusedFeature) -> Result<f64, EvalError> {
        check_len(self.weight.len(), m.len())?;
        Ok(dot(&self.weight, m.as_slice()) + self.bias)
    }
}

/// Two logits `W m + b`; `weight` is row-major `[2][dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationHead {
    pub weight: Vec<f64>,
    pub bias: [f64; 2],
}

impl ClassificationHead {
    pub fn zeros(dim: usize) -> Self {
        Self { weight: vec![0.0; 2 * dim], bias: [0.0; 2] }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.len() / 2
    }

    pub fn row(&self, class: usize) -> &[f64] {
        let d = self.input_dim();
        &self.weight[class * d..(class + 1) * d]
    }

    pub fn logits(&self, m: &FusedFeature) -> Result<[f64; 2], EvalError> {
        check_len(self.input_dim(), m.len())?;
        let x = m.as_slice();
        Ok([dot(self.row(0), x) + self.bias[0], dot(self.row(1), x) + self.bias[1]])
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), EvalError> {
    if expected == got {
        Ok(())
    } else {
        Err(EvalError::DimensionMismatch { expected, got })
    }
}

/// How the two classification logits become probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassNormalization {
    /// Joint softmax; probabilities sum to one and pair with categorical
    /// cross-entropy.
    #[default]
    Softmax,
    /// Independent sigmoid per logit, trained with per-logit binary
    /// cross-entropy.
    Sigmoid,
}

impl ClassNormalization {
    pub fn probabilities(self, logits: [f64; 2]) -> [f64; 2] {
        match self {
            ClassNormalization::Softmax => softmax2(logits),
            ClassNormalization::Sigmoid => [sigmoid(logits[0]), sigmoid(logits[1])],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub logits: [f64; 2],
    pub probabilities: [f64; 2],
    pub label: UpdateLabel,
}

impl Classification {
    pub fn from_logits(logits: [f64; 2], normalization: ClassNormalization) -> Self {
        // ties resolve to the first class
        let index = usize::from(logits[1] > logits[0]);
        let label = UpdateLabel::from_class_index(index).unwrap_or(UpdateLabel::Weakener);
        Self { logits, probabilities: normalization.probabilities(logits), label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorHeads {
    pub strength: StrengthHead,
    pub classifier: ClassificationHead,
}

impl EvaluatorHeads {
    pub fn zeros(dim: usize) -> Self {
        Self { strength: StrengthHead::zeros(dim), classifier: ClassificationHead::zeros(dim) }
    }

    pub fn input_dim(&self) -> usize {
        self.strength.weight.len()
    }

    /// Round every parameter to the nearest `f32`, the precision checkpoints
    /// are stored in.
    pub fn snap_to_f32(&mut self) {
        let snap = |v: &mut f64| *v = f64::from(*v as f32);
        self.strength.weight.iter_mut().for_each(snap);
        snap(&mut self.strength.bias);
        self.classifier.weight.iter_mut().for_each(snap);
        self.classifier.bias.iter_mut().for_each(snap);
    }

    pub fn is_finite(&self) -> bool {
        self.strength.bias.is_finite()
            && self.strength.weight.iter().all(|v| v.is_finite())
            && self.classifier.weight.iter().all(|v| v.is_finite())
            && self.classifier.bias.iter().all(|v| v.is_finite())
    }
}

/// Trained heads together with the identity of the encoders they expect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorModel {
    pub dims: FeatureDims,
    pub visual_encoder: String,
    pub text_encoder: String,
    pub heads: EvaluatorHeads,
    pub config: TrainConfig,
    /// 1-based epoch the heads were taken from; `None` when untrained.
    pub selected_epoch: Option<usize>,
    pub history: Vec<EpochMetrics>,
}

impl EvaluatorModel {
    /// Zero-initialised heads sized for the given encoders.
    pub fn zeroed<V, T>(visual: &V, text: &T, config: TrainConfig) -> Self
    where
        V: VisualEncoder + ?Sized,
        T: TextPairEncoder + ?Sized,
    {
        let dims = FeatureDims::new(visual.output_dim(), text.output_dim());
        Self {
            dims,
            visual_encoder: visual.id().into(),
            text_encoder: text.id().into(),
            heads: EvaluatorHeads::zeros(dims.fused()),
            config,
            selected_epoch: None,
            history: Vec::new(),
        }
    }

    pub fn normalization(&self) -> ClassNormalization {
        self.config.normalization
    }

    pub fn strength_score(&self, m: &FusedFeature) -> Result<f64, EvalError> {
        self.heads.strength.score(m)
    }

    pub fn classify(&self, m: &FusedFeature) -> Result<Classification, EvalError> {
        let logits = self.heads.classifier.logits(m)?;
        Ok(Classification::from_logits(logits, self.config.normalization))
    }

    fn check_encoders<V, T>(&self, visual: &V, text: &T) -> Result<(), EvalError>
    where
        V: VisualEncoder + ?Sized,
        T: TextPairEncoder + ?Sized,
    {
        if visual.id() != self.visual_encoder {
            return Err(EvalError::EncoderMismatch { expected: self.visual_encoder.clone(), got: visual.id().into() });
        }
        if text.id() != self.text_encoder {
            return Err(EvalError::EncoderMismatch { expected: self.text_encoder.clone(), got: text.id().into() });
        }
        Ok(())
    }

    /// Encode and fuse one triplet.
    pub fn fuse_triplet<V, T>(
        &self,
        visual: &V,
        text: &T,
        premise: &ImagePremise,
        hypothesis: &Hypothesis,
        update_text: &str,
    ) -> Result<FusedFeature, EvalError>
    where
        V: VisualEncoder + ?Sized,
        T: TextPairEncoder + ?Sized,
    {
        self.check_encoders(visual, text)?;
        let i = visual.encode_image(premise)?;
        check_output(self.dims.visual, &i)?;
        let e = text.encode_pair(hypothesis, update_text)?;
        check_output(self.dims.text, &e)?;
        fuse(&i, &e, self.dims)
    }

    /// Entailment strength of (image, hypothesis, update).
    pub fn score_triplet<V, T>(
        &self,
        visual: &V,
        text: &T,
        premise: &ImagePremise,
        hypothesis: &Hypothesis,
        update_text: &str,
    ) -> Result<f64, EvalError>
    where
        V: VisualEncoder + ?Sized,
        T: TextPairEncoder + ?Sized,
    {
        let m = self.fuse_triplet(visual, text, premise, hypothesis, update_text)?;
        self.strength_score(&m)
    }

    pub fn predict_label<V, T>(
        &self,
        visual: &V,
        text: &T,
        premise: &ImagePremise,
        hypothesis: &Hypothesis,
        update_text: &str,
    ) -> Result<UpdateLabel, EvalError>
    where
        V: VisualEncoder + ?Sized,
        T: TextPairEncoder + ?Sized,
    {
        let m = self.fuse_triplet(visual, text, premise, hypothesis, update_text)?;
        Ok(self.classify(&m)?.label)
    }
}
