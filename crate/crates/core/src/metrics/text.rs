//! Reference-based text overlap metrics: ROUGE-L F1 and BLEU-4.
//!
//! Both share one tokenizer: lowercase, split on whitespace, and split every
//! punctuation character off as its own token.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::MetricError;
use crate::numeric::{exp, ln};

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut current = String::new();
        for ch in word.chars() {
            if ch.is_ascii_punctuation() || (!ch.is_alphanumeric() && !ch.is_whitespace()) {
                if !current.is_empty() {
                    tokens.push(core::mem::take(&mut current));
                }
                tokens.push(ch.to_lowercase().collect());
            } else {
                current.extend(ch.to_lowercase());
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn check_inputs(candidate: &str, references: &[&str]) -> Result<Vec<String>, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferenceSet);
    }
    let tokens = tokenize(candidate);
    if tokens.is_empty() {
        return Err(MetricError::EmptyCandidate);
    }
    Ok(tokens)
}

/// LCS-based F1, maximised over references.
pub fn rouge_l(candidate: &str, references: &[&str]) -> Result<f64, MetricError> {
    let cand = check_inputs(candidate, references)?;
    let mut best = 0.0f64;
    for reference in references {
        let refr = tokenize(reference);
        let lcs = lcs_len(&cand, &refr);
        if lcs == 0 {
            continue;
        }
        let precision = lcs as f64 / cand.len() as f64;
        let recall = lcs as f64 / refr.len() as f64;
        best = best.max(2.0 * precision * recall / (precision + recall));
    }
    Ok(best)
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU with uniform 1–4-gram weights, clipped counts against the
/// per-n-gram maximum over references, and the brevity penalty against the
/// closest reference length (shorter wins ties).
///
/// When any 2–4-gram order has no match, every order from 2 to 4 gets
/// add-one smoothing. No unigram match gives 0.
pub fn bleu4(candidate: &str, references: &[&str]) -> Result<f64, MetricError> {
    let cand = check_inputs(candidate, references)?;
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).collect();

    let mut matched = [0usize; 4];
    let mut totals = [0usize; 4];
    for n in 1..=4 {
        let cand_counts = ngram_counts(&cand, n);
        let mut max_ref: BTreeMap<&[String], usize> = BTreeMap::new();
        for r in &refs {
            for (gram, c) in ngram_counts(r, n) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        matched[n - 1] = cand_counts.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
        totals[n - 1] = cand.len().saturating_sub(n - 1);
    }
    if matched[0] == 0 {
        return Ok(0.0);
    }
    let smooth = matched[1..].contains(&0);
    let mut log_sum = 0.0;
    for n in 0..4 {
        let (m, t) = if smooth && n > 0 { (matched[n] + 1, totals[n] + 1) } else { (matched[n], totals[n]) };
        log_sum += ln(m as f64 / t as f64);
    }

    let c = cand.len();
    let r = refs.iter().map(Vec::len).min_by_key(|&len| (len.abs_diff(c), len)).unwrap_or(0);
    let brevity = if c >= r { 1.0 } else { exp(1.0 - r as f64 / c as f64) };
    Ok(brevity * exp(log_sum / 4.0))
}
