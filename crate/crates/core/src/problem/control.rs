use serde::{Deserialize, Serialize};

use crate::error::{QsocError, Result};

/// Box-shaped admissible control set `U = Π [lower_i, upper_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ControlSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(QsocError::Domain("control dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(QsocError::LengthMismatch {
                what: "control bounds",
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(QsocError::Domain(format!(
                    "control bound {i}: need lower <= upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The whole of `ℝ^m`.
    pub fn unbounded(m: usize) -> Result<Self> {
        Self::new(vec![f64::NEG_INFINITY; m], vec![f64::INFINITY; m])
    }

    pub fn symmetric(m: usize, radius: f64) -> Result<Self> {
        Self::new(vec![-radius; m], vec![radius; m])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Euclidean projection onto the box (componentwise clamp).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| x.max(*lo).min(*hi))
            .collect()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim()
            && v.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol)
    }
}

/// Piecewise-constant control: `values[k]` acts on `[t_k, t_{k+1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPath {
    values: Vec<Vec<f64>>,
}

impl ControlPath {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = values.first() {
            let m = first.len();
            if m == 0 {
                return Err(QsocError::Domain("control vectors must be nonempty".into()));
            }
            if let Some(bad) = values.iter().find(|v| v.len() != m) {
                return Err(QsocError::LengthMismatch {
                    what: "control vector",
                    expected: m,
                    actual: bad.len(),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn constant(steps: usize, value: &[f64]) -> Self {
        Self {
            values: vec![value.to_vec(); steps],
        }
    }

    pub fn zeros(steps: usize, m: usize) -> Self {
        Self::constant(steps, &vec![0.0; m])
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.iter().map(Vec::as_slice)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.steps(), other.steps());
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(1.0, other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v.iter().map(|x| c * x).collect()).collect(),
        }
    }

    /// `ū + ε·(u - ū)` for `self = ū`.
    pub fn toward(&self, target: &Self, eps: f64) -> Self {
        self.combine(1.0 - eps, target, eps)
    }

    pub fn project(&self, set: &ControlSet) -> Self {
        Self {
            values: self.values.iter().map(|v| set.project(v)).collect(),
        }
    }

    pub fn is_admissible(&self, set: &ControlSet, tol: f64) -> bool {
        self.values.iter().all(|v| set.contains(v, tol))
    }

    /// `(Σ_k dt ‖u_k‖^p)^{1/p}`.
    pub fn norm_lp(&self, dt: f64, p: f64) -> f64 {
        self.values
            .iter()
            .map(|v| dt * v.iter().map(|x| x * x).sum::<f64>().sqrt().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn norm_l2(&self, dt: f64) -> f64 {
        self.norm_lp(dt, 2.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
