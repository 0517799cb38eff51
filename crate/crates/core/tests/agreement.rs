use dve_core::metrics::{fleiss_kappa, AgreementReport, AnnotationMatrix, HumanScore, MetricError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// κ from the per-item agreement definition, written independently.
fn kappa_oracle(rows: &[Vec<u32>]) -> f64 {
    let n_items = rows.len() as f64;
    let n: f64 = rows[0].iter().map(|&c| f64::from(c)).sum();
    let k = rows[0].len();
    let p_bar = rows
        .iter()
        .map(|r| {
            let agreeing_pairs: f64 = r.iter().map(|&c| f64::from(c) * (f64::from(c) - 1.0)).sum();
            agreeing_pairs / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_items;
    let pe: f64 = (0..k)
        .map(|j| {
            let pj = rows.iter().map(|r| f64::from(r[j])).sum::<f64>() / (n_items * n);
            pj * pj
        })
        .sum();
    (p_bar - pe) / (1.0 - pe)
}

#[test]
fn four_items_three_raters_two_categories() {
    let m = AnnotationMatrix::new(vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]).unwrap();
    // P̄ = (1 + 1/3 + 1/3 + 1)/4 = 2/3, P̄ₑ = 1/2
    assert!((fleiss_kappa(&m).unwrap() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn unanimity_is_one() {
    let m = AnnotationMatrix::new(vec![vec![3, 0], vec![0, 3], vec![3, 0], vec![0, 3]]).unwrap();
    assert!((fleiss_kappa(&m).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn unanimity_on_a_single_category_is_undefined() {
    let m = AnnotationMatrix::new(vec![vec![3, 0], vec![3, 0]]).unwrap();
    assert_eq!(fleiss_kappa(&m), Err(MetricError::DegenerateChance));
}

#[test]
fn ragged_matrices_are_rejected() {
    assert!(AnnotationMatrix::new(vec![vec![3, 0], vec![2, 0]]).is_err());
}

#[test]
fn independent_random_raters_hover_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ratings: Vec<Vec<usize>> = (0..4000).map(|_| (0..3).map(|_| rng.random_range(0..5)).collect()).collect();
    let kappa = fleiss_kappa(&AnnotationMatrix::from_ratings(&ratings, 5).unwrap()).unwrap();
    assert!(kappa.abs() < 0.02, "kappa {kappa}");
}

#[test]
fn five_way_and_collapsed_views() {
    let s = |v: i8| HumanScore::new(v).unwrap();
    // everyone agrees on direction but not on degree
    let ratings =
        vec![vec![s(2), s(1), s(2)], vec![s(-1), s(-2), s(-2)], vec![s(2), s(2), s(1)], vec![s(-2), s(-1), s(-1)]];
    let report = AgreementReport::compute(&ratings).unwrap();
    assert_eq!(report.items, 4);
    assert_eq!(report.raters, 3);
    assert!((report.collapsed.unwrap() - 1.0).abs() < 1e-12);
    assert!(report.five_way.unwrap() < report.collapsed.unwrap());
}

#[test]
fn scale_points_map_onto_scores() {
    assert_eq!(HumanScore::from_scale_point(1).unwrap().value(), -2);
    assert_eq!(HumanScore::from_scale_point(5).unwrap().value(), 2);
    assert!(HumanScore::from_scale_point(0).is_err());
    assert!(HumanScore::new(3).is_err());
}

fn matrices() -> impl Strategy<Value = Vec<Vec<u32>>> {
    (2usize..12, 2usize..5, 2u32..6).prop_flat_map(|(items, cats, raters)| {
        prop::collection::vec(prop::collection::vec(0..cats, raters as usize), items).prop_map(move |rows| {
            rows.into_iter()
                .map(|r| {
                    let mut counts = vec![0u32; cats];
                    r.into_iter().for_each(|c| counts[c] += 1);
                    counts
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn matches_oracle(rows in matrices()) {
        let m = AnnotationMatrix::new(rows.clone()).unwrap();
        if let Ok(k) = fleiss_kappa(&m) {
            prop_assert!((k - kappa_oracle(&rows)).abs() < 1e-9);
            prop_assert!(k <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn item_and_category_permutations_leave_kappa_unchanged(rows in matrices(), rot in 0usize..5) {
        let base = fleiss_kappa(&AnnotationMatrix::new(rows.clone()).unwrap());
        let mut shuffled = rows.clone();
        shuffled.reverse();
        for r in shuffled.iter_mut() {
            let k = r.len();
            r.rotate_left(rot % k);
        }
        let other = fleiss_kappa(&AnnotationMatrix::new(shuffled).unwrap());
        match (base, other) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}
