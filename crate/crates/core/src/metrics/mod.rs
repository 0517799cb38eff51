//! Meta-evaluation arithmetic.

pub mod agreement;
pub mod correlation;
pub mod external;
pub mod text;

use alloc::string::String;

use thiserror::Error;

pub use agreement::{fleiss_kappa, AgreementReport, AnnotationMatrix, HumanScore};
pub use correlation::{kendall_tau, pearson_r, spearman_rho, CorrelationReport};
pub use external::{external_metric_adapter, ExternalMetric, GenerationMetric, MetricRegistry};
pub use text::{bleu4, rouge_l, tokenize};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("input is constant; correlation is undefined")]
    ConstantInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("empty reference set")]
    EmptyReferenceSet,
    #[error("candidate has no tokens")]
    EmptyCandidate,
    #[error("all ratings fall in one category; kappa is undefined")]
    DegenerateChance,
    #[error("invalid annotation matrix: {0}")]
    InvalidMatrix(String),
    #[error("metric `{name}` failed: {message}")]
    ScorerFailure { name: String, message: String },
}

/// Fraction of positions where `predictions` equals `gold`.
pub fn accuracy<T: PartialEq>(predictions: &[T], gold: &[T]) -> Result<f64, MetricError> {
    if predictions.len() != gold.len() {
        return Err(MetricError::LengthMismatch(predictions.len(), gold.len()));
    }
    if predictions.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let hits = predictions.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::UpdateLabel::{Strengthener as S, Weakener as W};

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[S, W, S], &[S, W, S]), Ok(1.0));
        assert_eq!(accuracy(&[S, S], &[W, W]), Ok(0.0));
        assert_eq!(accuracy(&[S, W, S, W], &[S, S, S, S]), Ok(0.5));
        assert_eq!(accuracy::<u8>(&[], &[]), Err(MetricError::EmptyInput));
        assert_eq!(accuracy(&[S], &[S, W]), Err(MetricError::LengthMismatch(1, 2)));
    }
}
