//! Batch losses and their analytic gradients with respect to the head
//! parameters.
//!
//! For one example with update feature `m_u`, caption feature `m_c`, sign
//! `l` and one-hot target `y`:
//!
//! * margin `d = (s_u - s_c)·l = l·⟨w_s, m_u - m_c⟩` (the strength bias
//!   cancels), contrastive term `softplus(-d)` with `∂/∂d = -σ(-d)`;
//! * logits `z = W_c m_u + b_c`; softmax cross-entropy `lse(z) - z_y` and
//!   per-logit binary cross-entropy `Σ_j softplus(z_j) - y_j z_j` both have
//!   `∂/∂z = p - y` with `p` the corresponding normalisation.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::loss::{combined_loss, LossError};
use super::train::EncodedExample;
use super::{ClassNormalization, EvaluatorHeads};
use crate::numeric::{dot, logsumexp2, sigmoid, softmax2, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchLosses {
    pub contrastive: f64,
    pub categorical: f64,
    pub combined: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    pub strength_weight: Vec<f64>,
    pub strength_bias: f64,
    pub class_weight: Vec<f64>,
    pub class_bias: [f64; 2],
}

impl HeadGradients {
    pub fn zeros(dim: usize) -> Self {
        Self {
            strength_weight: vec![0.0; dim],
            strength_bias: 0.0,
            class_weight: vec![0.0; 2 * dim],
            class_bias: [0.0; 2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.strength_bias.is_finite()
            && self.class_bias.iter().all(|g| g.is_finite())
            && self.strength_weight.iter().all(|g| g.is_finite())
            && self.class_weight.iter().all(|g| g.is_finite())
    }
}

/// Which terms of the objective a gradient is taken of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Contrastive,
    Categorical,
    Combined { alpha: f64 },
}

impl Objective {
    fn weights(self) -> (f64, f64) {
        match self {
            Objective::Contrastive => (1.0, 0.0),
            Objective::Categorical => (0.0, 1.0),
            Objective::Combined { alpha } => (1.0 - alpha, alpha),
        }
    }
}

fn categorical_term(logits: [f64; 2], target: usize, normalization: ClassNormalization) -> (f64, [f64; 2]) {
    match normalization {
        ClassNormalization::Softmax => (logsumexp2(logits) - logits[target], softmax2(logits)),
        ClassNormalization::Sigmoid => {
            let mut loss = 0.0;
            for (j, &z) in logits.iter().enumerate() {
                loss += softplus(z) - if j == target { z } else { 0.0 };
            }
            (loss, [sigmoid(logits[0]), sigmoid(logits[1])])
        }
    }
}

/// Mean losses over `batch`, without gradients.
pub fn batch_losses<'a, I>(
    heads: &EvaluatorHeads,
    batch: I,
    alpha: f64,
    normalization: ClassNormalization,
) -> Result<BatchLosses, LossError>
where
    I: IntoIterator<Item = &'a EncodedExample>,
{
    evaluate(heads, batch, Objective::Combined { alpha }, normalization, None)
}

/// Mean losses over `batch` and the gradient of `objective` with respect to
/// every head parameter.
pub fn batch_objective<'a, I>(
    heads: &EvaluatorHeads,
    batch: I,
    objective: Objective,
    normalization: ClassNormalization,
) -> Result<(BatchLosses, HeadGradients), LossError>
where
    I: IntoIterator<Item = &'a EncodedExample>,
{
    let mut grads = HeadGradients::zeros(heads.input_dim());
    let losses = evaluate(heads, batch, objective, normalization, Some(&mut grads))?;
    Ok((losses, grads))
}

fn evaluate<'a, I>(
    heads: &EvaluatorHeads,
    batch: I,
    objective: Objective,
    normalization: ClassNormalization,
    mut grads: Option<&mut HeadGradients>,
) -> Result<BatchLosses, LossError>
where
    I: IntoIterator<Item = &'a EncodedExample>,
{
    let alpha = match objective {
        Objective::Combined { alpha } => alpha,
        _ => 0.5,
    };
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LossError::AlphaOutOfRange(alpha));
    }
    let (wp, wc) = objective.weights();
    let dim = heads.input_dim();
    let ws = &heads.strength.weight;
    let classifier = &heads.classifier;

    let mut n = 0usize;
    let mut contrastive = 0.0;
    let mut categorical = 0.0;
    let mut correct = 0usize;

    for example in batch {
        let mu = example.update.as_slice();
        let mc = example.caption.as_slice();
        if mu.len() != dim {
            return Err(LossError::LengthMismatch(mu.len(), dim));
        }
        if mc.len() != dim {
            return Err(LossError::LengthMismatch(mc.len(), dim));
        }
        n += 1;
        let sign = f64::from(example.label.sign());
        let target = example.label.class_index();

        let s_u = dot(ws, mu) + heads.strength.bias;
        let s_c = dot(ws, mc) + heads.strength.bias;
        let margin = (s_u - s_c) * sign;
        contrastive += softplus(-margin);

        let logits = [dot(classifier.row(0), mu) + classifier.bias[0], dot(classifier.row(1), mu) + classifier.bias[1]];
        let (ce, probs) = categorical_term(logits, target, normalization);
        categorical += ce;
        if usize::from(logits[1] > logits[0]) == target {
            correct += 1;
        }

        if let Some(g) = grads.as_deref_mut() {
            // ∂softplus(-d)/∂d = -σ(-d); ∂d/∂w_s = l·(m_u - m_c)
            let dmargin = -sigmoid(-margin) * wp;
            if dmargin != 0.0 {
                let coef = dmargin * sign;
                for ((gw, &u), &c) in g.strength_weight.iter_mut().zip(mu).zip(mc) {
                    *gw += coef * (f64::from(u) - f64::from(c));
                }
            }
            if wc != 0.0 {
                for (class, &p) in probs.iter().enumerate() {
                    let y = if class == target { 1.0 } else { 0.0 };
                    let dz = (p - y) * wc;
                    g.class_bias[class] += dz;
                    let row = &mut g.class_weight[class * dim..(class + 1) * dim];
                    for (gw, &x) in row.iter_mut().zip(mu) {
                        *gw += dz * f64::from(x);
                    }
                }
            }
        }
    }

    if n == 0 {
        return Err(LossError::EmptyBatch);
    }
    let inv = 1.0 / n as f64;
    if let Some(g) = grads {
        g.strength_weight.iter_mut().for_each(|v| *v *= inv);
        g.strength_bias *= inv;
        g.class_weight.iter_mut().for_each(|v| *v *= inv);
        g.class_bias.iter_mut().for_each(|v| *v *= inv);
    }
    let contrastive = contrastive * inv;
    let categorical = categorical * inv;
    Ok(BatchLosses {
        contrastive,
        categorical,
        combined: combined_loss(contrastive, categorical, alpha)?,
        accuracy: correct as f64 / n as f64,
    })
}

/// Value of `objective` for a batch; the scalar the gradients differentiate.
pub fn objective_value(losses: &BatchLosses, objective: Objective) -> f64 {
    let (wp, wc) = objective.weights();
    wp * losses.contrastive + wc * losses.categorical
}
