//! Multitask training of the evaluator heads.
//!
//! Each training example is seen through two triplets sharing the image and
//! hypothesis: (update, image, hypothesis) feeds both the strength score and
//! the classifier, (caption, image, hypothesis) feeds only the strength
//! score. Encoders are treated as fixed feature extractors, so every triplet
//! is encoded once up front.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::objective::{batch_losses, batch_objective, BatchLosses, Objective};
use super::optim::{Adam, AdamSettings};
use super::{fuse, ClassNormalization, EvalError, EvaluatorHeads, EvaluatorModel, FeatureDims, FusedFeature};
use crate::dataset::DveDataset;
use crate::encoder::{check_output, TextPairEncoder, VisualEncoder};
use crate::numeric::sqrt;
use crate::types::{DveSample, Split, UpdateLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of the categorical loss; the contrastive loss gets `1 - alpha`.
    pub alpha: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub freeze_encoders: bool,
    pub normalization: ClassNormalization,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            learning_rate: 5e-6,
            weight_decay: 1e-4,
            batch_size: 32,
            max_epochs: 20,
            seed: 42,
            freeze_encoders: false,
            normalization: ClassNormalization::Softmax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("{field} must be positive")]
    NotPositive { field: &'static str },
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::AlphaOutOfRange(self.alpha));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError::NotPositive { field: "learning_rate" });
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(ConfigError::NotPositive { field: "weight_decay" });
        }
        if self.batch_size == 0 {
            return Err(ConfigError::NotPositive { field: "batch_size" });
        }
        if self.max_epochs == 0 {
            return Err(ConfigError::NotPositive { field: "max_epochs" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} split is empty")]
    EmptySplit(Split),
    #[error("training sample {index} has no caption")]
    MissingCaption { index: usize },
    #[error("sample {index} has no update label")]
    MissingLabel { index: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    DivergenceDetected { epoch: usize, batch: usize },
    #[error("sample {index}: {source}")]
    Encode { index: usize, source: EvalError },
    #[error(transparent)]
    Loss(#[from] super::loss::LossError),
}

/// Both fused triplets of one labelled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub update: FusedFeature,
    pub caption: FusedFeature,
    pub label: UpdateLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub train_combined: f64,
    pub validation: BatchLosses,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHeads {
    pub heads: EvaluatorHeads,
    pub selected_epoch: usize,
    pub history: Vec<EpochMetrics>,
}

/// Encode `(index, sample)` pairs, reusing each image embedding across the
/// samples that share it.
pub fn encode_examples<'a, I, V, T>(samples: I, visual: &V, text: &T) -> Result<Vec<EncodedExample>, TrainError>
where
    I: IntoIterator<Item = (usize, &'a DveSample)>,
    V: VisualEncoder + ?Sized,
    T: TextPairEncoder + ?Sized,
{
    let dims = FeatureDims::new(visual.output_dim(), text.output_dim());
    let mut images: BTreeMap<String, Vec<f32>> = BTreeMap::new();
    let mut out = Vec::new();
    for (index, sample) in samples {
        let wrap = |source: EvalError| TrainError::Encode { index, source };
        let label = sample.update.label.ok_or(TrainError::MissingLabel { index })?;
        if sample.caption.as_str().trim().is_empty() {
            return Err(TrainError::MissingCaption { index });
        }
        let image = match images.get(&sample.premise.image_id) {
            Some(v) => v.clone(),
            None => {
                let v = visual.encode_image(&sample.premise).map_err(|e| wrap(e.into()))?;
                check_output(dims.visual, &v).map_err(|e| wrap(e.into()))?;
                images.insert(sample.premise.image_id.clone(), v.clone());
                v
            }
        };
        let eu = text.encode_pair(&sample.hypothesis, &sample.update.text).map_err(|e| wrap(e.into()))?;
        check_output(dims.text, &eu).map_err(|e| wrap(e.into()))?;
        let ec = text.encode_pair(&sample.hypothesis, sample.caption.as_str()).map_err(|e| wrap(e.into()))?;
        check_output(dims.text, &ec).map_err(|e| wrap(e.into()))?;
        out.push(EncodedExample {
            update: fuse(&image, &eu, dims).map_err(wrap)?,
            caption: fuse(&image, &ec, dims).map_err(wrap)?,
            label,
        });
    }
    Ok(out)
}

/// Uniform `±1/√fan_in` initialisation drawn from the seeded stream.
pub fn init_heads(dim: usize, rng: &mut ChaCha8Rng) -> EvaluatorHeads {
    let bound = 1.0 / sqrt(dim as f64);
    let mut draw = || rng.random_range(-bound..bound);
    let mut heads = EvaluatorHeads::zeros(dim);
    heads.strength.weight.iter_mut().for_each(|w| *w = draw());
    heads.strength.bias = draw();
    heads.classifier.weight.iter_mut().for_each(|w| *w = draw());
    heads.classifier.bias.iter_mut().for_each(|b| *b = draw());
    heads
}

/// Train heads on pre-encoded examples. Returns the heads of the epoch with
/// the lowest validation combined loss, rounded to `f32` precision.
pub fn train_encoded(
    dims: FeatureDims,
    train: &[EncodedExample],
    validation: &[EncodedExample],
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainedHeads, TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptySplit(Split::Train));
    }
    if validation.is_empty() {
        return Err(TrainError::EmptySplit(Split::Validation));
    }
    let dim = dims.fused();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut heads = init_heads(dim, &mut rng);
    let mut adam = Adam::new(AdamSettings::new(config.learning_rate, config.weight_decay), &[dim, 1, 2 * dim, 2]);
    let objective = Objective::Combined { alpha: config.alpha };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, usize, EvaluatorHeads)> = None;
    let mut history = Vec::with_capacity(config.max_epochs);

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let (losses, grads) =
                batch_objective(&heads, chunk.iter().map(|&i| &train[i]), objective, config.normalization)?;
            if !losses.combined.is_finite() || !grads.is_finite() {
                return Err(TrainError::DivergenceDetected { epoch, batch: batch_index });
            }
            adam.begin_step();
            adam.update(0, &mut heads.strength.weight, &grads.strength_weight);
            adam.update(1, core::slice::from_mut(&mut heads.strength.bias), &[grads.strength_bias]);
            adam.update(2, &mut heads.classifier.weight, &grads.class_weight);
            adam.update(3, &mut heads.classifier.bias, &grads.class_bias);
            if !heads.is_finite() {
                return Err(TrainError::DivergenceDetected { epoch, batch: batch_index });
            }
            epoch_loss += losses.combined;
            batches += 1;
        }
        let val = batch_losses(&heads, validation, config.alpha, config.normalization)?;
        if !val.combined.is_finite() {
            return Err(TrainError::DivergenceDetected { epoch, batch: batches });
        }
        let metrics = EpochMetrics { epoch, train_combined: epoch_loss / batches as f64, validation: val };
        observer(&metrics);
        history.push(metrics);
        if best.as_ref().is_none_or(|(loss, _, _)| val.combined < *loss) {
            best = Some((val.combined, epoch, heads.clone()));
        }
    }

    let (_, selected_epoch, mut heads) = best.expect("max_epochs >= 1");
    heads.snap_to_f32();
    Ok(TrainedHeads { heads, selected_epoch, history })
}

/// Train on the dataset's train split, selecting by its validation split.
pub fn train<V, T>(
    dataset: &DveDataset,
    visual: &V,
    text: &T,
    config: &TrainConfig,
) -> Result<EvaluatorModel, TrainError>
where
    V: VisualEncoder + ?Sized,
    T: TextPairEncoder + ?Sized,
{
    train_with_observer(dataset, visual, text, config, &mut |_| {})
}

pub fn train_with_observer<V, T>(
    dataset: &DveDataset,
    visual: &V,
    text: &T,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochMetrics),
) -> Result<EvaluatorModel, TrainError>
where
    V: VisualEncoder + ?Sized,
    T: TextPairEncoder + ?Sized,
{
    config.validate()?;
    let indexed = |split: Split| dataset.samples.iter().enumerate().filter(move |(_, s)| s.split == split);
    if indexed(Split::Train).next().is_none() {
        return Err(TrainError::EmptySplit(Split::Train));
    }
    if indexed(Split::Validation).next().is_none() {
        return Err(TrainError::EmptySplit(Split::Validation));
    }
    let train = encode_examples(indexed(Split::Train), visual, text)?;
    let validation = encode_examples(indexed(Split::Validation), visual, text)?;
    let dims = FeatureDims::new(visual.output_dim(), text.output_dim());
    let trained = train_encoded(dims, &train, &validation, config, observer)?;
    let mut model = EvaluatorModel::zeroed(visual, text, config.clone());
    model.heads = trained.heads;
    model.selected_epoch = Some(trained.selected_epoch);
    model.history = trained.history;
    Ok(model)
}
