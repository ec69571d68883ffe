//! Local convergence order from a gradient-norm sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TAIL: usize = 6;
/// Transitions needed for a fit with a meaningful residual.
pub const MIN_TRANSITIONS: usize = 3;
/// Values below `FLOOR_FACTOR · ε · g_0` are treated as roundoff noise.
pub const FLOOR_FACTOR: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    /// Least-squares slope of `log g_{k+1}` against `log g_k`.
    pub q: f64,
    /// Root-mean-square residual of the fit, in decades (`log10` units).
    pub fit_residual: f64,
    /// Transitions used in the fit.
    pub transitions: usize,
}

/// Fits `log g_{k+1} = q·log g_k + c` over the last `tail` clean transitions.
///
/// A transition `(g_k, g_{k+1})` is clean when both values are at least
/// `100·ε·g_0`; a value at the roundoff floor carries no order information
/// on either side of the regression. At least three clean transitions are required (fewer than
/// `tail` is accepted), and `g` must be strictly decreasing over the fitted
/// tail.
pub fn estimate_order(g: &[f64], tail: usize) -> Result<OrderEstimate> {
    if tail < 2 {
        return Err(Error::Config(format!("tail must be at least 2, got {tail}")));
    }
    let Some(&g0) = g.first() else {
        return Err(Error::NotEstimable("empty gradient sequence".into()));
    };
    if !(g0 > 0.0 && g0.is_finite()) {
        return Err(Error::NotEstimable(format!("g_0 = {g0} is not positive and finite")));
    }
    let floor = FLOOR_FACTOR * f64::EPSILON * g0;
    let clean: Vec<(f64, f64)> = g
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|&(a, b)| a >= floor && b >= floor && a.is_finite() && b.is_finite())
        .collect();
    let want = tail.min(clean.len());
    if want < MIN_TRANSITIONS {
        return Err(Error::NotEstimable(format!(
            "{} clean transitions above the noise floor {floor:e}, need {MIN_TRANSITIONS}",
            clean.len()
        )));
    }
    let pts = &clean[clean.len() - want..];
    if let Some(&(a, b)) = pts.iter().find(|&&(a, b)| !(b < a)) {
        return Err(Error::NotEstimable(format!(
            "gradient norm is not decreasing in the tail ({a:e} -> {b:e})"
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let n = want as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::NotEstimable("tail has no spread in log g".into()));
    }
    let q = sxy / sxx;
    let c = my - q * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - q * x - c).powi(2)).sum();
    Ok(OrderEstimate {
        q,
        fit_residual: (sse / n).sqrt(),
        transitions: want,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_toy_sequence() {
        let est = estimate_order(&[1e-1, 1e-2, 1e-4, 1e-8], DEFAULT_TAIL).unwrap();
        assert!((est.q - 2.0).abs() <= 0.05, "{est:?}");
        assert!(est.fit_residual < 1e-9);
        assert_eq!(est.transitions, 3);
    }

    #[test]
    fn geometric_sequence_has_order_one() {
        let est = estimate_order(&[0.5, 0.25, 0.125, 0.0625], DEFAULT_TAIL).unwrap();
        assert!((est.q - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn uses_only_the_tail() {
        let mut g = vec![1.0, 0.9, 0.8, 0.7, 0.6];
        let mut v: f64 = 0.5;
        for _ in 0..6 {
            g.push(v);
            v = v.powf(1.5);
        }
        let est = estimate_order(&g, 5).unwrap();
        assert!((est.q - 1.5).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn floor_noise_is_excluded() {
        let g = [1.0, 1e-1, 1e-2, 1e-4, 1e-8, 1e-16, 3e-17, 2e-17];
        let est = estimate_order(&g, 10).unwrap();
        // only transitions with both ends above 2.2e-14 are kept
        assert_eq!(est.transitions, 4);
    }

    #[test]
    fn not_estimable_cases() {
        assert!(matches!(estimate_order(&[], 6), Err(Error::NotEstimable(_))));
        assert!(matches!(
            estimate_order(&[1.0, 0.5, 0.25], 6),
            Err(Error::NotEstimable(_))
        ));
        assert!(matches!(
            estimate_order(&[1.0, 0.5, 0.7, 0.2, 0.1], 6),
            Err(Error::NotEstimable(_))
        ));
        assert!(matches!(
            estimate_order(&[1.0, 0.5, 0.25, 0.1], 1),
            Err(Error::Config(_))
        ));
    }
}
