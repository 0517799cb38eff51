//! Deterministic stand-ins for the LVLM and the critic.
//!
//! [`RoundEchoClient`] tags each response with `[round k]`, where `k` is one
//! more than the highest tag found in the prompt (or 0 for a prompt without
//! one). Since the refine prompt quotes the previous update, the tag counts
//! refinements without the client keeping per-request state.
//! [`ScheduleScorer`] reads the tag back and looks the score up in a
//! schedule.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use super::{LvlmClient, LvlmError, RefineRequest, UpdateScorer};
use crate::types::ImagePremise;

const TAG: &str = "[round ";

/// Highest `[round k]` tag in `text`.
pub fn round_tag(text: &str) -> Option<usize> {
    let mut best = None;
    let mut rest = text;
    while let Some(pos) = rest.find(TAG) {
        let after = &rest[pos + TAG.len()..];
        let digits: String = after.chars().take_while(char::is_ascii_digit).collect();
        if let (Ok(k), Some(']')) = (digits.parse::<usize>(), after[digits.len()..].chars().next()) {
            best = Some(best.map_or(k, |b: usize| b.max(k)));
        }
        rest = after;
    }
    best
}

#[derive(Debug)]
pub struct RoundEchoClient {
    prefix: String,
    calls: AtomicUsize,
}

impl RoundEchoClient {
    pub fn new(prefix: impl Into<String>) -> Self {
        Self { prefix: prefix.into(), calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LvlmClient for RoundEchoClient {
    fn generate(&self, _premise: &ImagePremise, prompt: &str) -> Result<String, LvlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let k = round_tag(prompt).map_or(0, |k| k + 1);
        Ok(format!("{} [round {k}]", self.prefix))
    }
}

type ScheduleFn = Box<dyn Fn(usize) -> f64 + Send + Sync>;

/// Scores an update by its round tag, optionally per request id.
pub struct ScheduleScorer {
    default: ScheduleFn,
    per_request: BTreeMap<String, Vec<f64>>,
}

impl ScheduleScorer {
    pub fn uniform(schedule: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Self { default: Box::new(schedule), per_request: BTreeMap::new() }
    }

    pub fn constant(score: f64) -> Self {
        Self::uniform(move |_| score)
    }

    /// Use `scores[k]` for round `k` of request `id`; past the end the last
    /// score repeats.
    pub fn with_request(mut self, id: impl Into<String>, scores: Vec<f64>) -> Self {
        self.per_request.insert(id.into(), scores);
        self
    }
}

impl UpdateScorer for ScheduleScorer {
    fn score(&self, request: &RefineRequest, update_text: &str) -> Result<f64, String> {
        let k = round_tag(update_text).ok_or_else(|| format!("no round tag in `{update_text}`"))?;
        match self.per_request.get(&request.id) {
            Some(scores) if !scores.is_empty() => Ok(scores[k.min(scores.len() - 1)]),
            _ => Ok((self.default)(k)),
        }
    }
}
