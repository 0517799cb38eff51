//! Uniform interface over generation metrics, including externally supplied
//! scorers such as embedding-similarity metrics.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{bleu4, rouge_l, MetricError};
use crate::types::{Goal, ImagePremise};

/// A metric over a generated update, its references, and optionally the
/// image premise.
pub trait GenerationMetric: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, candidate: &str, references: &[&str], image: Option<&ImagePremise>) -> Result<f64, MetricError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RougeL;

impl GenerationMetric for RougeL {
    fn name(&self) -> &str {
        "rouge-l"
    }
    fn score(&self, candidate: &str, references: &[&str], _: Option<&ImagePremise>) -> Result<f64, MetricError> {
        rouge_l(candidate, references)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Bleu4;

impl GenerationMetric for Bleu4 {
    fn name(&self) -> &str {
        "bleu-4"
    }
    fn score(&self, candidate: &str, references: &[&str], _: Option<&ImagePremise>) -> Result<f64, MetricError> {
        bleu4(candidate, references)
    }
}

/// Wraps a caller-supplied scorer. The adapter does no arithmetic of its
/// own; it names failures and rejects non-finite results.
pub struct ExternalMetric<F> {
    name: String,
    scorer: F,
}

pub fn external_metric_adapter<F>(name: impl Into<String>, scorer: F) -> ExternalMetric<F>
where
    F: Fn(&str, &[&str], Option<&ImagePremise>) -> Result<f64, String> + Send + Sync,
{
    ExternalMetric { name: name.into(), scorer }
}

impl<F> GenerationMetric for ExternalMetric<F>
where
    F: Fn(&str, &[&str], Option<&ImagePremise>) -> Result<f64, String> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, candidate: &str, references: &[&str], image: Option<&ImagePremise>) -> Result<f64, MetricError> {
        let failure = |message: String| MetricError::ScorerFailure { name: self.name.clone(), message };
        let value = (self.scorer)(candidate, references, image).map_err(failure)?;
        if !value.is_finite() {
            return Err(failure("non-finite score".to_string()));
        }
        Ok(value)
    }
}

/// One generated update to be scored.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationCase {
    pub candidate: String,
    pub references: Vec<String>,
    pub image: Option<ImagePremise>,
}

/// One line of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub goal: Goal,
    pub metric: String,
    pub value: f64,
    pub count: usize,
}

/// Named metrics evaluated together. Starts with ROUGE-L and BLEU-4.
pub struct MetricRegistry {
    metrics: Vec<Box<dyn GenerationMetric>>,
}

impl Default for MetricRegistry {
    fn default() -> Self {
        Self { metrics: alloc::vec![Box::new(RougeL), Box::new(Bleu4)] }
    }
}

impl MetricRegistry {
    pub fn empty() -> Self {
        Self { metrics: Vec::new() }
    }

    pub fn register(&mut self, metric: Box<dyn GenerationMetric>) -> &mut Self {
        self.metrics.push(metric);
        self
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.metrics.iter().map(|m| m.name())
    }

    /// Mean of each metric over `cases`, one row per metric.
    pub fn evaluate(&self, model: &str, goal: Goal, cases: &[GenerationCase]) -> Result<Vec<ReportRow>, MetricError> {
        if cases.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        let mut rows = Vec::with_capacity(self.metrics.len());
        for metric in &self.metrics {
            let mut sum = 0.0;
            for case in cases {
                let refs: Vec<&str> = case.references.iter().map(String::as_str).collect();
                sum += metric.score(&case.candidate, &refs, case.image.as_ref())?;
            }
            rows.push(ReportRow {
                model: model.into(),
                goal,
                metric: metric.name().into(),
                value: sum / cases.len() as f64,
                count: cases.len(),
            });
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn case(c: &str, r: &str) -> GenerationCase {
        GenerationCase { candidate: c.into(), references: vec![r.into()], image: None }
    }

    #[test]
    fn constant_scorer_reports_its_value() {
        let mut registry = MetricRegistry::empty();
        registry.register(Box::new(external_metric_adapter("clip-like", |_, _, _| Ok(0.5))));
        let rows = registry.evaluate("m", Goal::Strengthen, &[case("a", "b"), case("c", "d")]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].metric, "clip-like");
        assert_eq!(rows[0].value, 0.5);
    }

    #[test]
    fn failing_scorer_is_named() {
        let metric = external_metric_adapter("bert-like", |_, _, _| Err("model missing".into()));
        let err = metric.score("a", &["b"], None).unwrap_err();
        assert_eq!(err, MetricError::ScorerFailure { name: "bert-like".into(), message: "model missing".into() });
        let nan = external_metric_adapter("nan", |_, _, _| Ok(f64::NAN));
        assert!(matches!(nan.score("a", &["b"], None), Err(MetricError::ScorerFailure { .. })));
    }

    #[test]
    fn registered_adapter_appears_with_builtins() {
        let mut registry = MetricRegistry::default();
        registry.register(Box::new(external_metric_adapter("ext", |_, _, _| Ok(1.0))));
        let names: Vec<&str> = registry.names().collect();
        assert_eq!(names, ["rouge-l", "bleu-4", "ext"]);
        let rows = registry.evaluate("gpt", Goal::Weaken, &[case("the cat sat", "the cat sat")]).unwrap();
        assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), [1.0, 1.0, 1.0]);
    }
}
