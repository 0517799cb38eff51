//! Training objectives: pairwise contrastive loss on strength scores,
//! categorical cross-entropy on the classification head, and their convex
//! combination.

use thiserror::Error;

use crate::numeric::{ln, log_sigmoid};

/// Probability floor applied before taking logs.
pub const PROBABILITY_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LossError {
    #[error("batch inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("label sign must be -1 or +1, got {0}")]
    InvalidSign(i8),
    #[error("probability row {row} is not a finite distribution")]
    NonFiniteProbability { row: usize },
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
}

/// Contribution of one (update, caption) score pair: `-ln σ((s_u - s_c)·l)`.
#[inline]
pub fn pairwise_term(update_score: f64, caption_score: f64, sign: i8) -> f64 {
    -log_sigmoid((update_score - caption_score) * f64::from(sign))
}

/// `L_p = -(1/N) Σ ln σ((s_u - s_c)·l)`.
///
/// A strengthener should score above its caption anchor and a weakener
/// below it.
pub fn pairwise_contrastive_loss(
    update_scores: &[f64],
    caption_scores: &[f64],
    signs: &[i8],
) -> Result<f64, LossError> {
    if update_scores.len() != caption_scores.len() {
        return Err(LossError::LengthMismatch(update_scores.len(), caption_scores.len()));
    }
    if update_scores.len() != signs.len() {
        return Err(LossError::LengthMismatch(update_scores.len(), signs.len()));
    }
    if signs.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    if let Some(&bad) = signs.iter().find(|&&l| l != -1 && l != 1) {
        return Err(LossError::InvalidSign(bad));
    }
    let total: f64 =
        update_scores.iter().zip(caption_scores).zip(signs).map(|((&su, &sc), &l)| pairwise_term(su, sc, l)).sum();
    Ok(total / signs.len() as f64)
}

/// `L_c = -(1/N) Σ_i Σ_j y_ij ln ŷ_ij` over two classes, with ŷ clamped to
/// [`PROBABILITY_EPSILON`] before the log.
pub fn categorical_loss(probabilities: &[[f64; 2]], targets: &[[f64; 2]]) -> Result<f64, LossError> {
    if probabilities.len() != targets.len() {
        return Err(LossError::LengthMismatch(probabilities.len(), targets.len()));
    }
    if probabilities.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let mut total = 0.0;
    for (row, (p, y)) in probabilities.iter().zip(targets).enumerate() {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(LossError::NonFiniteProbability { row });
        }
        for j in 0..2 {
            if y[j] != 0.0 {
                total -= y[j] * ln(p[j].max(PROBABILITY_EPSILON));
            }
        }
    }
    Ok(total / probabilities.len() as f64)
}

/// `L = (1 - α)·L_p + α·L_c`.
pub fn combined_loss(contrastive: f64, categorical: f64, alpha: f64) -> Result<f64, LossError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LossError::AlphaOutOfRange(alpha));
    }
    Ok((1.0 - alpha) * contrastive + alpha * categorical)
}
