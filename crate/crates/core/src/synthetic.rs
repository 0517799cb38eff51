//! A small generated corpus whose labels are recoverable from update
//! wording alone. Used for smoke tests and examples where the real sources
//! are unavailable.
//!
//! Every update is four tokens: three cue words drawn from its label's
//! vocabulary and a shared filler. Hypotheses are all five tokens, so
//! with a bag-of-tokens encoder the cue contribution has a fixed weight.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::DveDataset;
use crate::types::{Caption, DveSample, Hypothesis, ImagePremise, Split, Update, UpdateLabel};

const STRONG: [&str; 4] = ["definitely", "clearly", "proudly", "happily"];
const WEAK: [&str; 4] = ["never", "barely", "reluctantly", "hardly"];
const FILLER: [&str; 6] = ["today", "outside", "again", "here", "now", "alone"];
const SUBJECTS: [&str; 5] = ["man", "woman", "child", "dog", "crowd"];
const ACTIONS: [&str; 4] = ["is running fast", "is eating lunch", "is singing loudly", "is waiting patiently"];
const SCENES: [&str; 4] = ["on a busy street", "in a green park", "near the water", "inside a bright room"];

/// `n` samples over `n / 10` images (at least one), split 70/15/15 by
/// position. Labels alternate so every split is balanced.
pub fn separable_corpus(n: usize, seed: u64) -> DveDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (n / 10).max(1);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { UpdateLabel::Strengthener } else { UpdateLabel::Weakener };
        let image = rng.random_range(0..images);
        let subject = SUBJECTS[image % SUBJECTS.len()];
        let scene = SCENES[(image / SUBJECTS.len()) % SCENES.len()];
        let action = ACTIONS.choose(&mut rng).copied().unwrap_or(ACTIONS[0]);
        let cues = match label {
            UpdateLabel::Strengthener => &STRONG,
            UpdateLabel::Weakener => &WEAK,
        };
        let cue: Vec<&str> = cues.choose_multiple(&mut rng, 3).copied().collect();
        let fill = FILLER.choose(&mut rng).copied().unwrap_or(FILLER[0]);
        let update = format!("{} {} {} {fill}", cue[0], cue[1], cue[2]);
        let split = match (i * 20) / n.max(1) {
            0..=13 => Split::Train,
            14..=16 => Split::Validation,
            _ => Split::Test,
        };
        let (Ok(premise), Ok(caption), Ok(hypothesis), Ok(update)) = (
            ImagePremise::new(format!("synthetic-{image:04}"), format!("synthetic-{image:04}.jpg")),
            Caption::new(format!("A {subject} {scene}.")),
            Hypothesis::new(format!("The {subject} {action}")),
            Update::labeled(update, label),
        ) else {
            unreachable!("generated texts are never blank");
        };
        samples.push(DveSample { premise, caption, hypothesis, update, split });
    }
    DveDataset::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let a = separable_corpus(200, 3);
        assert_eq!(a, separable_corpus(200, 3));
        assert_ne!(a, separable_corpus(200, 4));
        for split in Split::ALL {
            let labels: Vec<_> = a.split(split).filter_map(|s| s.update.label).collect();
            assert!(!labels.is_empty());
            let strong = labels.iter().filter(|l| **l == UpdateLabel::Strengthener).count();
            assert_eq!(strong * 2, labels.len());
        }
    }
}
