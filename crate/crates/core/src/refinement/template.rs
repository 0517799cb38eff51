//! Prompt templates with `{name}` placeholders. `{{` and `}}` are literal
//! braces.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::Goal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown placeholder `{{{0}}}`")]
    UnknownPlaceholder(String),
    #[error("unclosed `{{` at byte {0}")]
    Unclosed(usize),
    #[error("stray `}}` at byte {0}")]
    Stray(usize),
}

/// Substitute `{name}` with the matching value.
pub fn render(template: &str, values: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let bytes = template.as_bytes();
    let mut i = 0;
    let mut literal_start = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push_str(&template[literal_start..i]);
                out.push('{');
                i += 2;
                literal_start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push_str(&template[literal_start..i]);
                out.push('}');
                i += 2;
                literal_start = i;
            }
            b'{' => {
                let close = template[i + 1..].find('}').ok_or(TemplateError::Unclosed(i))?;
                let name = &template[i + 1..i + 1 + close];
                let value = values
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| TemplateError::UnknownPlaceholder(name.into()))?;
                out.push_str(&template[literal_start..i]);
                out.push_str(value);
                i += close + 2;
                literal_start = i;
            }
            b'}' => return Err(TemplateError::Stray(i)),
            _ => i += 1,
        }
    }
    out.push_str(&template[literal_start..]);
    Ok(out)
}

const DEFAULT_INITIAL: &str = "Look at the image. Hypothesis: \"{hypothesis}\". \
Write one short sentence of new information, consistent with the image, that would {goal} the hypothesis. \
Reply with that sentence only.";

const DEFAULT_REFINE: &str = "Look at the image. Hypothesis: \"{hypothesis}\". \
Your previous update was: \"{update}\". It was meant to {goal} the hypothesis, but an entailment-strength \
evaluator scored it {score} (positive strengthens, negative weakens), which is not strong enough. \
Write one improved sentence, consistent with the image, that would more clearly {goal} the hypothesis. \
Reply with that sentence only.";

/// Initial and refinement prompts.
///
/// The initial template may use `{hypothesis}` and `{goal}`; the refine
/// template additionally `{update}` and `{score}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub initial: String,
    pub refine: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self { initial: DEFAULT_INITIAL.into(), refine: DEFAULT_REFINE.into() }
    }
}

impl PromptTemplates {
    pub fn render_initial(&self, hypothesis: &str, goal: Goal) -> Result<String, TemplateError> {
        render(&self.initial, &[("hypothesis", hypothesis), ("goal", goal.as_str())])
    }

    pub fn render_refine(
        &self,
        hypothesis: &str,
        goal: Goal,
        update: &str,
        score: f64,
    ) -> Result<String, TemplateError> {
        let score = format!("{score:.4}");
        render(
            &self.refine,
            &[("hypothesis", hypothesis), ("goal", goal.as_str()), ("update", update), ("score", &score)],
        )
    }

    /// Render both templates with dummy values to surface errors early.
    pub fn validate(&self) -> Result<(), TemplateError> {
        self.render_initial("h", Goal::Strengthen)?;
        self.render_refine("h", Goal::Strengthen, "u", 0.0)?;
        Ok(())
    }
}
