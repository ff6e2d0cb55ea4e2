//! Brownian increments, adapted processes and the discrete martingale representation.

use std::sync::Arc;

use num_complex::Complex64;

use super::algebra::CliffordAlgebra;
use super::element::CliffordElement;
use crate::error::{QsocError, Result};

/// `ΔW_k = √dt · e_k` for `k` in `1..=N`.
pub fn brownian_increment(alg: &Arc<CliffordAlgebra>, k: usize) -> Result<CliffordElement> {
    let e = CliffordElement::generator(alg, k)?;
    Ok(e.scale_re(alg.dt().sqrt()))
}

/// Right multiplication by `ΔW_{k+1}` for an element supported in `{1..k}`.
///
/// No generator of the input exceeds `k + 1`, so the sign is always `+1`
/// and the product is a relabelling of blades.
pub(crate) fn times_increment(x: &CliffordElement, k: usize) -> CliffordElement {
    let alg = x.algebra();
    debug_assert!(x.is_supported_in(k));
    let bit = 1usize << k;
    let s = alg.dt().sqrt();
    let mut out = CliffordElement::zero(alg);
    let coeffs = out.coeffs_mut();
    for (mask, c) in x.terms() {
        coeffs[mask | bit] = c * s;
    }
    out
}

/// The unique `Y` supported in `{1..k}` with `f = E_k(f) + Y·ΔW_{k+1}`.
///
/// `f` must be supported in `{1..k+1}` and `k` must lie in `0..N`.
pub fn martingale_coefficient(f: &CliffordElement, k: usize) -> Result<CliffordElement> {
    let alg = f.algebra();
    if k >= alg.n_generators() {
        return Err(QsocError::Domain(format!(
            "martingale level {k} outside 0..{}",
            alg.n_generators()
        )));
    }
    if !f.is_supported_in(k + 1) {
        return Err(QsocError::Domain(format!(
            "element has support level {}, expected at most {}",
            f.support_level(),
            k + 1
        )));
    }
    let bit = 1usize << k;
    let inv = 1.0 / alg.dt().sqrt();
    let mut out = CliffordElement::zero(alg);
    let coeffs = out.coeffs_mut();
    for (mask, c) in f.terms() {
        if mask & bit != 0 {
            coeffs[mask ^ bit] = c * inv;
        }
    }
    Ok(out)
}

/// A time-indexed sequence with `values[k]` in the subalgebra of `e_1..e_k`.
#[derive(Clone, Debug)]
pub struct AdaptedProcess {
    alg: Arc<CliffordAlgebra>,
    values: Vec<CliffordElement>,
}

impl AdaptedProcess {
    /// Validates adaptedness of every entry.
    pub fn new(alg: &Arc<CliffordAlgebra>, values: Vec<CliffordElement>) -> Result<Self> {
        for (k, v) in values.iter().enumerate() {
            if !v.same_algebra(&CliffordElement::zero(alg)) {
                return Err(QsocError::AlgebraMismatch(format!("process entry {k}")));
            }
            if !v.is_supported_in(k) {
                return Err(QsocError::Adaptedness(format!(
                    "entry {k} has support level {}",
                    v.support_level()
                )));
            }
        }
        Ok(Self {
            alg: alg.clone(),
            values,
        })
    }

    pub(crate) fn from_values_unchecked(alg: &Arc<CliffordAlgebra>, values: Vec<CliffordElement>) -> Self {
        debug_assert!(values.iter().enumerate().all(|(k, v)| v.is_supported_in(k)));
        Self {
            alg: alg.clone(),
            values,
        }
    }

    pub fn zeros(alg: &Arc<CliffordAlgebra>, len: usize) -> Self {
        Self {
            alg: alg.clone(),
            values: vec![CliffordElement::zero(alg); len],
        }
    }

    pub fn algebra(&self) -> &Arc<CliffordAlgebra> {
        &self.alg
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[CliffordElement] {
        &self.values
    }

    pub fn get(&self, k: usize) -> &CliffordElement {
        &self.values[k]
    }

    pub fn last(&self) -> &CliffordElement {
        self.values.last().expect("empty process")
    }

    pub fn is_adapted(&self) -> bool {
        self.values.iter().enumerate().all(|(k, v)| v.is_supported_in(k))
    }

    /// `max_k ‖values[k]‖₂`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.len(), other.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| {
                let mut z = x.scale_re(a);
                z.axpy(b, y);
                z
            })
            .collect();
        Self {
            alg: self.alg.clone(),
            values,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn scale_complex(&self, c: Complex64) -> Self {
        Self {
            alg: self.alg.clone(),
            values: self.values.iter().map(|v| v.scale(c)).collect(),
        }
    }
}
