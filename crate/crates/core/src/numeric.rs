//! Scalar helpers shared by the losses and metrics.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `ln(1 + e^x)` without overflow for large `x`.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// `ln σ(x) = -softplus(-x)`.
#[inline]
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Numerically stable two-way softmax.
#[inline]
pub(crate) fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let max = if logits[0] > logits[1] { logits[0] } else { logits[1] };
    let a = libm::exp(logits[0] - max);
    let b = libm::exp(logits[1] - max);
    let z = a + b;
    [a / z, b / z]
}

/// `ln Σ e^{x_j}` over two logits.
#[inline]
pub(crate) fn logsumexp2(logits: [f64; 2]) -> f64 {
    let max = if logits[0] > logits[1] { logits[0] } else { logits[1] };
    max + libm::log(libm::exp(logits[0] - max) + libm::exp(logits[1] - max))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(w, x)| w * f64::from(*x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_matches_naive_in_safe_range() {
        for i in -40..=40 {
            let x = f64::from(i) * 0.25;
            let naive = ln(1.0 / (1.0 + exp(-x)));
            assert!((log_sigmoid(x) - naive).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        assert!(log_sigmoid(-1000.0).is_finite());
        assert_eq!(log_sigmoid(1000.0), 0.0);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-9);
        assert_eq!(sigmoid(-1000.0), 0.0);
        let p = softmax2([1000.0, -1000.0]);
        assert_eq!(p, [1.0, 0.0]);
    }
}
