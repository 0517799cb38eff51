//! Reward-driven update refinement.
//!
//! An LVLM proposes an update for a goal, the evaluator scores it, and the
//! score is checked against a threshold η: a strengthener passes when its
//! score is at least η, a weakener when its score is at most −η. Low-quality
//! updates are sent back with their score for up to `max_rounds`
//! refinements.

pub mod mock;
mod template;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{TextPairEncoder, VisualEncoder};
use crate::evaluator::EvaluatorModel;
use crate::types::{Caption, Goal, Hypothesis, ImagePremise, Update};

pub use template::{render, PromptTemplates, TemplateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    LowQuality,
}

/// Threshold check; the boundary passes.
pub fn critique(score: f64, goal: Goal, eta: f64) -> Verdict {
    let pass = match goal {
        Goal::Strengthen => score >= eta,
        Goal::Weaken => score <= -eta,
    };
    if pass {
        Verdict::Pass
    } else {
        Verdict::LowQuality
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LvlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("LVLM rejected the request: {0}")]
    Rejected(String),
}

/// Text generation from an image and a prompt.
pub trait LvlmClient {
    fn generate(&self, premise: &ImagePremise, prompt: &str) -> Result<String, LvlmError>;
}

impl<C: LvlmClient + ?Sized> LvlmClient for &C {
    fn generate(&self, premise: &ImagePremise, prompt: &str) -> Result<String, LvlmError> {
        (**self).generate(premise, prompt)
    }
}

/// The critic's scoring function.
pub trait UpdateScorer {
    fn score(&self, request: &RefineRequest, update_text: &str) -> Result<f64, String>;
}

impl<S: UpdateScorer + ?Sized> UpdateScorer for &S {
    fn score(&self, request: &RefineRequest, update_text: &str) -> Result<f64, String> {
        (**self).score(request, update_text)
    }
}

/// Scores through a trained evaluator. With `caption_relative` the caption
/// triplet's score is subtracted, which requires the request caption.
pub struct ModelScorer<'a, V: ?Sized, T: ?Sized> {
    pub model: &'a EvaluatorModel,
    pub visual: &'a V,
    pub text: &'a T,
    pub caption_relative: bool,
}

impl<V, T> UpdateScorer for ModelScorer<'_, V, T>
where
    V: VisualEncoder + ?Sized,
    T: TextPairEncoder + ?Sized,
{
    fn score(&self, request: &RefineRequest, update_text: &str) -> Result<f64, String> {
        let s = self
            .model
            .score_triplet(self.visual, self.text, &request.premise, &request.hypothesis, update_text)
            .map_err(|e| e.to_string())?;
        if !self.caption_relative {
            return Ok(s);
        }
        let caption = request.caption.as_ref().ok_or("caption-relative scoring needs a caption")?;
        let base = self
            .model
            .score_triplet(self.visual, self.text, &request.premise, &request.hypothesis, caption.as_str())
            .map_err(|e| e.to_string())?;
        Ok(s - base)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineRequest {
    pub id: String,
    pub premise: ImagePremise,
    pub hypothesis: Hypothesis,
    pub goal: Goal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<Caption>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinementConfig {
    pub eta: f64,
    pub max_rounds: usize,
    pub templates: PromptTemplates,
    pub caption_relative: bool,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self { eta: 1.0, max_rounds: 3, templates: PromptTemplates::default(), caption_relative: false }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("eta must be positive and finite, got {0}")]
    InvalidEta(f64),
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Transport(#[from] LvlmError),
    #[error("LVLM returned an empty update")]
    EmptyGeneration,
    #[error("scoring failed: {0}")]
    Scoring(String),
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(RefineError::InvalidEta(self.eta));
        }
        if self.max_rounds == 0 {
            return Err(RefineError::NoRounds);
        }
        self.templates.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// 0 is the initial generation, k ≥ 1 the k-th refinement.
    pub index: usize,
    pub update: String,
    pub score: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStatus {
    Passed,
    Exhausted,
    Aborted,
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceStatus::Passed => "passed",
            TraceStatus::Exhausted => "exhausted",
            TraceStatus::Aborted => "aborted",
        })
    }
}

/// Ordered record of one request's rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub request_id: String,
    pub goal: Goal,
    pub eta: f64,
    pub max_rounds: usize,
    pub rounds: Vec<Round>,
    pub status: TraceStatus,
    pub lvlm_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RefinementTrace {
    pub fn final_update(&self) -> Option<&str> {
        self.rounds.last().map(|r| r.update.as_str())
    }

    /// Index of the round that passed, if any.
    pub fn passed_at(&self) -> Option<usize> {
        match self.status {
            TraceStatus::Passed => self.rounds.last().map(|r| r.index),
            _ => None,
        }
    }
}

fn extract_update(response: String) -> Result<Update, RefineError> {
    let text = response.trim();
    Update::unlabeled(text).map_err(|_| RefineError::EmptyGeneration)
}

/// Ask the LVLM for a first update toward `request.goal`.
pub fn generate_initial<C: LvlmClient + ?Sized>(
    client: &C,
    request: &RefineRequest,
    templates: &PromptTemplates,
) -> Result<Update, RefineError> {
    let prompt = templates.render_initial(request.hypothesis.as_str(), request.goal)?;
    extract_update(client.generate(&request.premise, &prompt)?)
}

/// Ask the LVLM to improve `prior` given the score it received.
pub fn generate_refinement<C: LvlmClient + ?Sized>(
    client: &C,
    request: &RefineRequest,
    templates: &PromptTemplates,
    prior: &str,
    prior_score: f64,
) -> Result<Update, RefineError> {
    let prompt = templates.render_refine(request.hypothesis.as_str(), request.goal, prior, prior_score)?;
    extract_update(client.generate(&request.premise, &prompt)?)
}

/// Generate, critique and refine until an update passes or `max_rounds`
/// refinements have been spent. Errors abort the loop but keep the rounds
/// completed so far.
pub fn refine_loop<C, S>(client: &C, scorer: &S, request: &RefineRequest, config: &RefinementConfig) -> RefinementTrace
where
    C: LvlmClient + ?Sized,
    S: UpdateScorer + ?Sized,
{
    let mut trace = RefinementTrace {
        request_id: request.id.clone(),
        goal: request.goal,
        eta: config.eta,
        max_rounds: config.max_rounds,
        rounds: Vec::new(),
        status: TraceStatus::Exhausted,
        lvlm_calls: 0,
        error: None,
    };
    if let Err(e) = config.validate() {
        trace.status = TraceStatus::Aborted;
        trace.error = Some(e.to_string());
        return trace;
    }

    let step = |trace: &mut RefinementTrace| -> Result<Verdict, RefineError> {
        trace.lvlm_calls += 1;
        let update = match trace.rounds.last() {
            None => generate_initial(client, request, &config.templates)?,
            Some(prev) => generate_refinement(client, request, &config.templates, &prev.update, prev.score)?,
        };
        let score = scorer.score(request, &update.text).map_err(RefineError::Scoring)?;
        let verdict = critique(score, request.goal, config.eta);
        trace.rounds.push(Round { index: trace.rounds.len(), update: update.text, score, verdict });
        Ok(verdict)
    };

    for _ in 0..=config.max_rounds {
        match step(&mut trace) {
            Ok(Verdict::Pass) => {
                trace.status = TraceStatus::Passed;
                return trace;
            }
            Ok(Verdict::LowQuality) => {}
            Err(e) => {
                trace.status = TraceStatus::Aborted;
                trace.error = Some(e.to_string());
                return trace;
            }
        }
    }
    trace.status = TraceStatus::Exhausted;
    trace
}

/// Per-round cumulative pass rates over a batch of traces run at one η.
///
/// `cumulative[k - 1]` is the fraction of requests that passed by the k-th
/// refinement; a pass at the initial generation counts for every k. Aborted
/// requests stay in the denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassRateSummary {
    pub eta: f64,
    pub requests: usize,
    pub initial: f64,
    pub cumulative: Vec<f64>,
    pub exhausted: usize,
    pub aborted: usize,
}

impl PassRateSummary {
    pub fn from_traces(eta: f64, max_rounds: usize, traces: &[RefinementTrace]) -> Self {
        let n = traces.len();
        let rate = |k: usize| {
            if n == 0 {
                return 0.0;
            }
            traces.iter().filter(|t| t.passed_at().is_some_and(|i| i <= k)).count() as f64 / n as f64
        };
        Self {
            eta,
            requests: n,
            initial: rate(0),
            cumulative: if n == 0 { Vec::new() } else { (1..=max_rounds).map(rate).collect() },
            exhausted: traces.iter().filter(|t| t.status == TraceStatus::Exhausted).count(),
            aborted: traces.iter().filter(|t| t.status == TraceStatus::Aborted).count(),
        }
    }
}

/// Fraction of already-scored updates that pass at `eta`.
pub fn pass_rate(scored: &[(f64, Goal)], eta: f64) -> f64 {
    if scored.is_empty() {
        return 0.0;
    }
    let passed = scored.iter().filter(|(s, g)| critique(*s, *g, eta) == Verdict::Pass).count();
    passed as f64 / scored.len() as f64
}
