use dve_core::metrics::{bleu4, rouge_l, tokenize, MetricError};
use proptest::prelude::*;

/// Exponential-time LCS by plain recursion; fine for short inputs.
fn lcs_brute(a: &[String], b: &[String]) -> usize {
    match (a.split_first(), b.split_first()) {
        (Some((x, ra)), Some((y, rb))) => {
            if x == y {
                1 + lcs_brute(ra, rb)
            } else {
                lcs_brute(ra, b).max(lcs_brute(a, rb))
            }
        }
        _ => 0,
    }
}

fn rouge_oracle(candidate: &str, reference: &str) -> f64 {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    let l = lcs_brute(&c, &r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
    2.0 * p * rec / (p + rec)
}

#[test]
fn rouge_l_on_a_shared_prefix() {
    let v = rouge_l("the cat sat", &["the cat ran"]).unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn rouge_l_takes_best_reference() {
    let v = rouge_l("a b c d", &["x y", "a c d"]).unwrap();
    // lcs 3, p 3/4, r 1
    assert!((v - 2.0 * 0.75 / 1.75).abs() < 1e-12);
}

#[test]
fn bleu_of_a_near_match() {
    // candidate shares 4/5 unigrams, 3/4 bigrams, 2/3 trigrams, 1/2 4-grams
    // with the reference; equal lengths so no brevity penalty
    let v = bleu4("the cat sat on mat", &["the cat sat on rug"]).unwrap();
    let expected = (4.0_f64 / 5.0 * 3.0 / 4.0 * 2.0 / 3.0 * 1.0 / 2.0).powf(0.25);
    assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
}

#[test]
fn bleu_brevity_penalty() {
    // exact prefix of a longer reference: all precisions 1, BP = e^(1 - 6/4)
    let v = bleu4("a b c d", &["a b c d e f"]).unwrap();
    assert!((v - (1.0_f64 - 6.0 / 4.0).exp()).abs() < 1e-12);
}

#[test]
fn bleu_smoothing_when_higher_orders_miss() {
    // unigrams 2/3 match, no bigram match: orders 2..4 smoothed to 1/3, 1/2, 1/1
    let v = bleu4("a x b", &["a y b"]).unwrap();
    let expected = (2.0_f64 / 3.0 * (1.0 / 3.0) * (1.0 / 2.0) * 1.0).powf(0.25);
    assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    assert_eq!(bleu4("p q", &["r s"]).unwrap(), 0.0);
}

#[test]
fn clipped_counts() {
    // "the the the" vs "the cat": unigram clipped to 1/3
    let v = bleu4("the the the", &["the cat"]).unwrap();
    let expected = (1.0_f64 / 3.0 * (1.0 / 3.0) * (1.0 / 2.0) * 1.0).powf(0.25);
    assert!((v - expected).abs() < 1e-12);
}

#[test]
fn empty_inputs_are_errors() {
    assert_eq!(rouge_l("", &["x"]), Err(MetricError::EmptyCandidate));
    assert_eq!(bleu4("x", &[]), Err(MetricError::EmptyReferenceSet));
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "dog", "runs", "The", "park", "in", "Red", "."]), 1..8)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn rouge_matches_brute_lcs(c in sentence(), r in sentence()) {
        let v = rouge_l(&c, &[r.as_str()]).unwrap();
        prop_assert!((v - rouge_oracle(&c, &r)).abs() < 1e-12);
    }

    #[test]
    fn scores_are_in_unit_interval(c in sentence(), r in prop::collection::vec(sentence(), 1..4)) {
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        for v in [rouge_l(&c, &refs).unwrap(), bleu4(&c, &refs).unwrap()] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn reference_order_is_irrelevant(c in sentence(), mut r in prop::collection::vec(sentence(), 2..4)) {
        let a: Vec<&str> = r.iter().map(String::as_str).collect();
        let (ra, ba) = (rouge_l(&c, &a).unwrap(), bleu4(&c, &a).unwrap());
        r.reverse();
        let b: Vec<&str> = r.iter().map(String::as_str).collect();
        prop_assert_eq!(ra, rouge_l(&c, &b).unwrap());
        prop_assert_eq!(ba, bleu4(&c, &b).unwrap());
    }

    #[test]
    fn casing_is_ignored(c in sentence(), r in sentence()) {
        let upper = c.to_uppercase();
        prop_assert_eq!(rouge_l(&c, &[r.as_str()]).unwrap(), rouge_l(&upper, &[r.as_str()]).unwrap());
        prop_assert_eq!(bleu4(&c, &[r.as_str()]).unwrap(), bleu4(&upper, &[r.as_str()]).unwrap());
    }

    #[test]
    fn identical_texts_score_one(c in sentence()) {
        prop_assert_eq!(rouge_l(&c, &[c.as_str()]).unwrap(), 1.0);
        prop_assert!((bleu4(&c, &[c.as_str()]).unwrap() - 1.0).abs() < 1e-12);
    }
}
