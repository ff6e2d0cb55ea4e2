//! Small fitting and extrapolation helpers for convergence studies.

use serde::Serialize;

/// Errors below this are treated as exact zeros and excluded from slope fits.
pub const UNDERFLOW_FLOOR: f64 = 1e-13;

/// Least-squares slope of `log y` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeEstimate {
    /// Fitted over `points` pairs with `y` above the underflow floor.
    Fitted { slope: f64, points: usize },
    /// Fewer than two pairs survived the floor: the quantity is zero to rounding.
    Exact,
}

impl SlopeEstimate {
    pub fn slope(&self) -> Option<f64> {
        match self {
            SlopeEstimate::Fitted { slope, .. } => Some(*slope),
            SlopeEstimate::Exact => None,
        }
    }

    /// An exact zero is consistent with any order bound.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.slope().is_none_or(|s| (lo..=hi).contains(&s))
    }

    pub fn at_least(&self, lo: f64) -> bool {
        self.slope().is_none_or(|s| s >= lo)
    }
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> SlopeEstimate {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > UNDERFLOW_FLOOR && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return SlopeEstimate::Exact;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    SlopeEstimate::Fitted {
        slope: sxy / sxx,
        points: pts.len(),
    }
}

/// Value at `x = 0` of the polynomial interpolating `(xs[i], ys[i])` (Neville's scheme).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xi * p[i + 1] - xj * p[i]) / (xi - xj);
        }
    }
    p[0]
}

/// Least-squares fit of `y ≈ a·ε + b·ε²`; returns `(a, b, max |residual|)`.
pub fn fit_linear_quadratic(eps: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&e, &y) in eps.iter().zip(ys) {
        let (f1, f2) = (e, e * e);
        s11 += f1 * f1;
        s12 += f1 * f2;
        s22 += f2 * f2;
        r1 += f1 * y;
        r2 += f2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (r1 * s22 - r2 * s12) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let resid = eps
        .iter()
        .zip(ys)
        .map(|(&e, &y)| (y - a * e - b * e * e).abs())
        .fold(0.0, f64::max);
    (a, b, resid)
}

/// `|a − b| / |b|`, or `|a − b|` when `|b|` is below `floor`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let d = (a - b).abs();
    if b.abs() < floor {
        d
    } else {
        d / b.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [0.5, 0.25, 0.125, 0.0625];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        let s = loglog_slope(&xs, &ys).slope().unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn underflow_is_exact() {
        assert_eq!(loglog_slope(&[0.5, 0.25], &[1e-16, 0.0]), SlopeEstimate::Exact);
        assert!(SlopeEstimate::Exact.within(1.8, 2.2));
    }

    #[test]
    fn neville_recovers_polynomial_intercept() {
        let xs = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x - x * x + 0.5 * x * x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_quadratic_fit_is_exact_on_quadratics() {
        let eps = [0.5, 0.25, 0.125];
        let ys: Vec<f64> = eps.iter().map(|e| -1.5 * e + 4.0 * e * e).collect();
        let (a, b, r) = fit_linear_quadratic(&eps, &ys);
        assert!((a + 1.5).abs() < 1e-12 && (b - 4.0).abs() < 1e-12 && r < 1e-14);
    }
}
