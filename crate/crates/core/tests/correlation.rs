use dve_core::metrics::correlation::average_ranks;
use dve_core::metrics::{kendall_tau, pearson_r, spearman_rho, CorrelationReport, MetricError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quadratic τ-b: classify every pair directly.
fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut not_tied_x, mut not_tied_y) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx != 0.0 {
                not_tied_x += 1;
            }
            if dy != 0.0 {
                not_tied_y += 1;
            }
            let s = dx * dy;
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    if not_tied_x == 0 || not_tied_y == 0 {
        return None;
    }
    Some((concordant - discordant) as f64 / (not_tied_x as f64 * not_tied_y as f64).sqrt())
}

#[test]
fn kendall_matches_brute_force_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0;
    for case in 0..200 {
        let n = rng.random_range(2..=50);
        // small alphabets on half the cases force plenty of ties
        let levels = if case % 2 == 0 { 4 } else { 1000 };
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        match (kendall_tau(&x, &y), brute_tau_b(&x, &y)) {
            (Ok(fast), Some(slow)) => {
                assert_eq!(fast.to_bits(), slow.to_bits(), "n={n} x={x:?} y={y:?}");
                compared += 1;
            }
            (Err(MetricError::ConstantInput), None) => {}
            (fast, slow) => panic!("disagreement: {fast:?} vs {slow:?}"),
        }
    }
    assert!(compared > 150);
}

#[test]
fn spearman_is_pearson_on_average_ranks() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.random_range(3..=40);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6))).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (Ok(rho), Ok(r)) = (spearman_rho(&x, &y), pearson_r(&average_ranks(&x), &average_ranks(&y))) else {
            continue;
        };
        assert!((rho - r).abs() < 1e-12, "rho={rho} r={r}");
    }
}

#[test]
fn average_ranks_share_ties() {
    assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), [1.5, 3.0, 1.5, 4.0]);
}

#[test]
fn undefined_inputs() {
    assert_eq!(pearson_r(&[1.0], &[2.0]), Err(MetricError::TooShort { needed: 2, got: 1 }));
    assert_eq!(kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(MetricError::ConstantInput));
    assert!(matches!(pearson_r(&[1.0, 2.0], &[1.0]), Err(MetricError::LengthMismatch(..))));
    let report = CorrelationReport::compute(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!(!report.is_defined());
}

fn vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..30)
        .prop_flat_map(|n| (prop::collection::vec(-100.0f64..100.0, n), prop::collection::vec(-100.0f64..100.0, n)))
}

proptest! {
    #[test]
    fn correlations_are_bounded((x, y) in vectors()) {
        let report = CorrelationReport::compute(&x, &y).unwrap();
        for v in [report.pearson_r, report.spearman_rho, report.kendall_tau].into_iter().flatten() {
            prop_assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn rank_correlations_ignore_monotone_transforms((x, y) in vectors()) {
        let tx: Vec<f64> = x.iter().map(|v| (v / 50.0).exp() * 3.0 + 1.0).collect();
        if let (Ok(a), Ok(b)) = (kendall_tau(&x, &y), kendall_tau(&tx, &y)) {
            prop_assert_eq!(a, b);
        }
        if let (Ok(a), Ok(b)) = (spearman_rho(&x, &y), spearman_rho(&tx, &y)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_in_arguments((x, y) in vectors()) {
        if let (Ok(a), Ok(b)) = (kendall_tau(&x, &y), kendall_tau(&y, &x)) {
            prop_assert_eq!(a, b);
        }
        if let (Ok(a), Ok(b)) = (pearson_r(&x, &y), pearson_r(&y, &x)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn negating_one_side_flips_sign((x, y) in vectors()) {
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        if let (Ok(a), Ok(b)) = (kendall_tau(&x, &y), kendall_tau(&x, &neg)) {
            prop_assert_eq!(a, -b);
        }
    }

    #[test]
    fn self_correlation_is_one(x in prop::collection::vec(-10.0f64..10.0, 3..30)) {
        if let Ok(t) = kendall_tau(&x, &x) {
            prop_assert_eq!(t, 1.0);
            prop_assert!((spearman_rho(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
