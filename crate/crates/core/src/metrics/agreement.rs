//! Fleiss' κ over a fixed number of raters per item, and the 5-point human
//! rating scale.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// `items × categories` rating counts; every row sums to the rater count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationMatrix {
    counts: Vec<Vec<u32>>,
    raters: u32,
}

impl AnnotationMatrix {
    pub fn new(counts: Vec<Vec<u32>>) -> Result<Self, MetricError> {
        let first = counts.first().ok_or(MetricError::EmptyInput)?;
        let categories = first.len();
        if categories < 2 {
            return Err(MetricError::InvalidMatrix("need at least two categories".into()));
        }
        let raters: u32 = first.iter().sum();
        for (i, row) in counts.iter().enumerate() {
            if row.len() != categories {
                return Err(MetricError::InvalidMatrix(format!(
                    "row {i} has {} categories, expected {categories}",
                    row.len()
                )));
            }
            let sum: u32 = row.iter().sum();
            if sum != raters {
                return Err(MetricError::InvalidMatrix(format!("row {i} sums to {sum}, expected {raters}")));
            }
        }
        Ok(Self { counts, raters })
    }

    /// Build from per-item lists of category indices, one per rater.
    pub fn from_ratings(ratings: &[Vec<usize>], categories: usize) -> Result<Self, MetricError> {
        let mut counts = Vec::with_capacity(ratings.len());
        for (i, item) in ratings.iter().enumerate() {
            let mut row = vec![0u32; categories];
            for &c in item {
                let slot = row
                    .get_mut(c)
                    .ok_or_else(|| MetricError::InvalidMatrix(format!("item {i} uses category {c} of {categories}")))?;
                *slot += 1;
            }
            counts.push(row);
        }
        Self::new(counts)
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.counts
    }
}

/// `κ = (P̄ - P̄ₑ) / (1 - P̄ₑ)`.
pub fn fleiss_kappa(matrix: &AnnotationMatrix) -> Result<f64, MetricError> {
    let items = matrix.items();
    if items < 2 {
        return Err(MetricError::TooShort { needed: 2, got: items });
    }
    let n = f64::from(matrix.raters());
    if matrix.raters() < 2 {
        return Err(MetricError::InvalidMatrix("need at least two raters".into()));
    }
    let mut column = vec![0u64; matrix.categories()];
    let mut p_bar = 0.0;
    for row in matrix.rows() {
        let sq: u64 = row.iter().map(|&c| u64::from(c) * u64::from(c)).sum();
        p_bar += (sq as f64 - n) / (n * (n - 1.0));
        for (slot, &c) in column.iter_mut().zip(row) {
            *slot += u64::from(c);
        }
    }
    p_bar /= items as f64;
    let total = items as f64 * n;
    let p_e: f64 = column.iter().map(|&c| (c as f64 / total) * (c as f64 / total)).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(MetricError::DegenerateChance);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// A rating on the 5-point scale, centred so the sign matches the
/// evaluator's score: −2 weakens a lot, 0 neutral, +2 strengthens a lot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub struct HumanScore(i8);

impl HumanScore {
    pub fn new(value: i8) -> Result<Self, MetricError> {
        if (-2..=2).contains(&value) {
            Ok(Self(value))
        } else {
            Err(MetricError::InvalidMatrix(format!("human score {value} outside -2..=2")))
        }
    }

    /// From the 1..=5 scale point ("weakens a lot" = 1).
    pub fn from_scale_point(point: u8) -> Result<Self, MetricError> {
        if (1..=5).contains(&point) {
            Ok(Self(point as i8 - 3))
        } else {
            Err(MetricError::InvalidMatrix(format!("scale point {point} outside 1..=5")))
        }
    }

    pub fn value(self) -> i8 {
        self.0
    }

    /// Category index on the 5-way scale.
    pub fn five_way(self) -> usize {
        (self.0 + 2) as usize
    }

    /// Category index after collapsing to weakens / neutral / strengthens.
    pub fn collapsed(self) -> usize {
        match self.0 {
            i8::MIN..=-1 => 0,
            0 => 1,
            _ => 2,
        }
    }
}

impl TryFrom<i8> for HumanScore {
    type Error = MetricError;
    fn try_from(value: i8) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<HumanScore> for i8 {
    fn from(s: HumanScore) -> i8 {
        s.0
    }
}

/// κ at both granularities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub items: usize,
    pub raters: u32,
    /// `None` when undefined (all ratings in one category).
    pub five_way: Option<f64>,
    pub collapsed: Option<f64>,
}

impl AgreementReport {
    /// `ratings[item][rater]`.
    pub fn compute(ratings: &[Vec<HumanScore>]) -> Result<Self, MetricError> {
        let five: Vec<Vec<usize>> = ratings.iter().map(|r| r.iter().map(|s| s.five_way()).collect()).collect();
        let three: Vec<Vec<usize>> = ratings.iter().map(|r| r.iter().map(|s| s.collapsed()).collect()).collect();
        let five = AnnotationMatrix::from_ratings(&five, 5)?;
        let three = AnnotationMatrix::from_ratings(&three, 3)?;
        let defined = |r: Result<f64, MetricError>| match r {
            Ok(v) => Ok(Some(v)),
            Err(MetricError::DegenerateChance) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(Self {
            items: five.items(),
            raters: five.raters(),
            five_way: defined(fleiss_kappa(&five))?,
            collapsed: defined(fleiss_kappa(&three))?,
        })
    }
}
