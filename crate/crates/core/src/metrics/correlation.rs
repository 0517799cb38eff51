//! Linear and rank correlations between metric scores and human judgements.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::numeric::sqrt;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::TooShort { needed: 2, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

fn clamp_unit(r: f64) -> f64 {
    r.clamp(-1.0, 1.0)
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ConstantInput);
    }
    Ok(clamp_unit(sxy / sqrt(sxx * syy)))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_pair(x, y)?;
    pearson_r(&average_ranks(x), &average_ranks(y))
}

fn tie_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort counting strict inversions.
fn sort_counting_swaps(values: &mut [f64], buffer: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = values.split_at_mut(mid);
        let (lb, rb) = buffer.split_at_mut(mid);
        sort_counting_swaps(left, lb) + sort_counting_swaps(right, rb)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if values[j] < values[i] {
            buffer[k] = values[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buffer[k] = values[i];
            i += 1;
        }
        k += 1;
    }
    buffer[k..k + (mid - i)].copy_from_slice(&values[i..mid]);
    k += mid - i;
    buffer[k..k + (n - j)].copy_from_slice(&values[j..n]);
    values.copy_from_slice(&buffer[..n]);
    swaps
}

/// Kendall τ-b, `(C - D) / √((n₀ - T_x)(n₀ - T_y))`, computed in
/// `O(N log N)` by sorting on `x` and counting inversions in `y`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tied_x = tie_pairs(&xs);
    let tied_xy = tie_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buffer = vec![0.0; ys.len()];
    let swaps = sort_counting_swaps(&mut ys, &mut buffer);
    let tied_y = tie_pairs(&ys);

    let not_tied_x = n0 - tied_x;
    let not_tied_y = n0 - tied_y;
    if not_tied_x == 0 || not_tied_y == 0 {
        return Err(MetricError::ConstantInput);
    }
    // C - D = n0 - tx - ty + txy - 2·swaps
    let numerator = n0 as i64 - tied_x as i64 - tied_y as i64 + tied_xy as i64 - 2 * swaps as i64;
    Ok(clamp_unit(tau_b_from_counts(numerator, not_tied_x, not_tied_y)))
}

#[inline]
pub(crate) fn tau_b_from_counts(concordant_minus_discordant: i64, not_tied_x: u64, not_tied_y: u64) -> f64 {
    concordant_minus_discordant as f64 / sqrt(not_tied_x as f64 * not_tied_y as f64)
}

/// All three correlations; `None` where the input makes one undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub kendall_tau: Option<f64>,
}

impl CorrelationReport {
    pub fn compute(x: &[f64], y: &[f64]) -> Result<Self, MetricError> {
        check_pair(x, y)?;
        let defined = |r: Result<f64, MetricError>| match r {
            Ok(v) => Ok(Some(v)),
            Err(MetricError::ConstantInput) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(Self {
            pearson_r: defined(pearson_r(x, y))?,
            spearman_rho: defined(spearman_rho(x, y))?,
            kendall_tau: defined(kendall_tau(x, y))?,
        })
    }

    pub fn is_defined(&self) -> bool {
        self.pearson_r.is_some() && self.spearman_rho.is_some() && self.kendall_tau.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_identities() {
        let x = [1.0, 2.0, 3.0, 4.0, 10.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson_r(&x, &[2.0; 5]), Err(MetricError::ConstantInput));
        assert!(matches!(pearson_r(&[1.0], &[1.0]), Err(MetricError::TooShort { .. })));
    }

    #[test]
    fn pearson_hand_computed() {
        // means 2.5, 2.5; Σdxdy = 2.25+(-0.25)+(-0.25)+2.25 = 4; Σdx² = Σdy² = 5
        let r = pearson_r(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), [2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn monotone_and_antitone() {
        let x = [-2.0, -0.5, 0.0, 1.0, 3.0];
        let cube: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        let anti: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
        assert_eq!(spearman_rho(&x, &cube), Ok(1.0));
        assert_eq!(kendall_tau(&x, &cube), Ok(1.0));
        assert_eq!(spearman_rho(&x, &anti), Ok(-1.0));
        assert_eq!(kendall_tau(&x, &anti), Ok(-1.0));
    }

    #[test]
    fn kendall_with_one_tie() {
        // pairs (i<j): x = 1,2,2,3  y = 1,3,2,4
        // (0,1)C (0,2)C (0,3)C (1,2) tie in x only (1,3)C (2,3)C -> C=5 D=0 Tx=1 Ty=0
        let t = kendall_tau(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((t - 5.0 / (5.0f64 * 6.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn report_flags_constant_input() {
        let report = CorrelationReport::compute(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!(!report.is_defined());
        assert_eq!(report.kendall_tau, None);
    }
}
