use dve_core::evaluator::loss::{pairwise_term, LossError};
use dve_core::evaluator::Classification;
use dve_core::evaluator::{categorical_loss, combined_loss, pairwise_contrastive_loss, ClassNormalization};
use dve_core::{label_sign, UpdateLabel};
use proptest::prelude::*;

#[test]
fn zero_margin_costs_ln2() {
    let v = pairwise_contrastive_loss(&[0.3, -1.0], &[0.3, -1.0], &[1, -1]).unwrap();
    assert!((v - std::f64::consts::LN_2).abs() < 1e-9);
}

#[test]
fn margin_two_in_both_directions() {
    // -ln σ(2) and -ln σ(-2) written out by hand
    let agree = pairwise_term(2.0, 0.0, 1);
    let disagree = pairwise_term(-2.0, 0.0, 1);
    assert!((agree - 0.126928).abs() < 1e-6, "{agree}");
    assert!((disagree - 2.126928).abs() < 1e-6, "{disagree}");
    assert!((pairwise_term(0.0, 2.0, -1) - agree).abs() < 1e-15);
}

#[test]
fn combined_loss_weighting() {
    assert_eq!(combined_loss(1.0, 2.0, 0.9).unwrap(), 1.9);
    assert_eq!(combined_loss(1.0, 2.0, 0.0).unwrap(), 1.0);
    assert_eq!(combined_loss(1.0, 2.0, 1.0).unwrap(), 2.0);
    assert_eq!(combined_loss(1.0, 2.0, 1.5), Err(LossError::AlphaOutOfRange(1.5)));
}

#[test]
fn categorical_loss_clamps_zero_probability() {
    let v = categorical_loss(&[[0.0, 1.0]], &[[1.0, 0.0]]).unwrap();
    assert!((v + 1e-7f64.ln()).abs() < 1e-12);
    let v = categorical_loss(&[[0.25, 0.75], [0.5, 0.5]], &[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    assert!((v - (-(0.75f64.ln()) - 0.5f64.ln()) / 2.0).abs() < 1e-12);
}

#[test]
fn malformed_batches() {
    assert_eq!(pairwise_contrastive_loss(&[], &[], &[]), Err(LossError::EmptyBatch));
    assert_eq!(pairwise_contrastive_loss(&[1.0], &[1.0], &[0]), Err(LossError::InvalidSign(0)));
    assert!(matches!(pairwise_contrastive_loss(&[1.0], &[], &[1]), Err(LossError::LengthMismatch(..))));
    assert!(matches!(
        categorical_loss(&[[f64::NAN, 0.5]], &[[1.0, 0.0]]),
        Err(LossError::NonFiniteProbability { row: 0 })
    ));
}

proptest! {
    #[test]
    fn label_sign_is_a_bijection(sign in prop::sample::select(vec![-1i8, 1])) {
        let label = UpdateLabel::from_sign(sign).unwrap();
        prop_assert_eq!(label_sign(label), sign);
        prop_assert_eq!(UpdateLabel::from_class_index(label.class_index()), Some(label));
    }

    #[test]
    fn pairwise_term_is_positive_and_decreasing(d in -30.0f64..30.0, step in 0.01f64..5.0) {
        let here = pairwise_term(d, 0.0, 1);
        prop_assert!(here > 0.0);
        prop_assert!(pairwise_term(d + step, 0.0, 1) < here);
    }

    #[test]
    fn pairwise_term_is_stable_at_extremes(d in 30.0f64..700.0) {
        prop_assert!(pairwise_term(d, 0.0, 1) >= 0.0);
        let big = pairwise_term(-d, 0.0, 1);
        prop_assert!((big - d).abs() < 1e-9 * d.max(1.0));
    }

    #[test]
    fn combined_is_linear_in_alpha(lp in 0.0f64..10.0, lc in 0.0f64..10.0, a in 0.0f64..=1.0) {
        let got = combined_loss(lp, lc, a).unwrap();
        let lerp = lp + a * (lc - lp);
        prop_assert!((got - lerp).abs() < 1e-12);
    }

    #[test]
    fn classification_is_a_distribution(z0 in -50.0f64..50.0, z1 in -50.0f64..50.0) {
        let c = Classification::from_logits([z0, z1], ClassNormalization::Softmax);
        prop_assert!((c.probabilities[0] + c.probabilities[1] - 1.0).abs() < 1e-12);
        prop_assert!(c.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
        let expected = if z1 > z0 { UpdateLabel::Strengthener } else { UpdateLabel::Weakener };
        prop_assert_eq!(c.label, expected);
        let s = Classification::from_logits([z0, z1], ClassNormalization::Sigmoid);
        prop_assert!(s.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert_eq!(s.label, expected);
    }
}
