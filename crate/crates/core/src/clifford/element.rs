use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

use super::algebra::{blade_level, blade_sign, parity_sign, reversion_sign, CliffordAlgebra};
use crate::error::{QsocError, Result};

/// Element of the Clifford algebra, stored densely over the `2^N` blades.
///
/// Blades are orthonormal under the trace state, so the coefficient vector is
/// also the coordinate vector of the element in `L²`.
#[derive(Clone)]
pub struct CliffordElement {
    alg: Arc<CliffordAlgebra>,
    coeffs: Vec<Complex64>,
}

impl CliffordElement {
    pub fn zero(alg: &Arc<CliffordAlgebra>) -> Self {
        Self {
            alg: alg.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); alg.dim()],
        }
    }

    pub fn identity(alg: &Arc<CliffordAlgebra>) -> Self {
        Self::scalar(alg, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(alg: &Arc<CliffordAlgebra>, value: Complex64) -> Self {
        let mut out = Self::zero(alg);
        out.coeffs[0] = value;
        out
    }

    /// Generator `e_k`, `k` in `1..=N`.
    pub fn generator(alg: &Arc<CliffordAlgebra>, k: usize) -> Result<Self> {
        if k == 0 || k > alg.n_generators() {
            return Err(QsocError::Domain(format!(
                "generator index {k} outside 1..={}",
                alg.n_generators()
            )));
        }
        Ok(Self::blade(alg, 1 << (k - 1), Complex64::new(1.0, 0.0)))
    }

    /// `value * e_S` for the blade with bit mask `mask`.
    ///
    /// Panics if the mask does not fit the algebra.
    pub fn blade(alg: &Arc<CliffordAlgebra>, mask: usize, value: Complex64) -> Self {
        assert!(mask < alg.dim(), "blade mask {mask:#b} outside algebra");
        let mut out = Self::zero(alg);
        out.coeffs[mask] = value;
        out
    }

    pub fn from_coeffs(alg: &Arc<CliffordAlgebra>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != alg.dim() {
            return Err(QsocError::LengthMismatch {
                what: "blade coefficients",
                expected: alg.dim(),
                actual: coeffs.len(),
            });
        }
        Ok(Self {
            alg: alg.clone(),
            coeffs,
        })
    }

    /// Builds an element from sparse `(mask, coefficient)` terms; repeated masks accumulate.
    pub fn from_terms(alg: &Arc<CliffordAlgebra>, terms: impl IntoIterator<Item = (usize, Complex64)>) -> Result<Self> {
        let mut out = Self::zero(alg);
        for (mask, c) in terms {
            if mask >= alg.dim() {
                return Err(QsocError::Domain(format!(
                    "blade mask {mask} outside algebra with {} generators",
                    alg.n_generators()
                )));
            }
            out.coeffs[mask] += c;
        }
        Ok(out)
    }

    /// Nonzero `(mask, coefficient)` pairs in increasing mask order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(m, c)| (m, *c))
    }

    pub fn algebra(&self) -> &Arc<CliffordAlgebra> {
        &self.alg
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> Complex64 {
        self.coeffs[mask]
    }

    pub fn same_algebra(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg
    }

    fn ensure_same(&self, other: &Self) -> Result<()> {
        if self.same_algebra(other) {
            Ok(())
        } else {
            Err(QsocError::AlgebraMismatch(format!(
                "{} vs {} generators",
                self.alg.n_generators(),
                other.alg.n_generators()
            )))
        }
    }

    /// Clifford product; errors on mismatched algebras.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let lhs: Vec<(usize, Complex64)> = self.terms().collect();
        let rhs: Vec<(usize, Complex64)> = other.terms().collect();
        let mut out = Self::zero(&self.alg);
        for &(a, ca) in &lhs {
            for &(b, cb) in &rhs {
                out.coeffs[a ^ b] += ca * cb * blade_sign(a, b);
            }
        }
        out
    }

    /// The involution `a -> a*`: conjugates coefficients and reverses blades.
    pub fn star(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c.conj() * reversion_sign(m))
            .collect();
        Self {
            alg: self.alg.clone(),
            coeffs,
        }
    }

    /// Trace state: the coefficient of the identity blade.
    pub fn state_m(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `⟨a, b⟩ = m(a* b)`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.ensure_same(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    /// `Re⟨a, b⟩`, the real Hilbert structure used for gradients.
    pub fn real_inner(&self, other: &Self) -> f64 {
        debug_assert!(self.same_algebra(other));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Parity automorphism: `e_S -> (-1)^{|S|} e_S`.
    pub fn parity(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * parity_sign(m))
            .collect();
        Self {
            alg: self.alg.clone(),
            coeffs,
        }
    }

    /// Conditional expectation onto the subalgebra generated by `e_1..e_k`.
    pub fn conditional_expectation(&self, k: usize) -> Result<Self> {
        if k > self.alg.n_generators() {
            return Err(QsocError::Domain(format!(
                "conditioning level {k} outside 0..={}",
                self.alg.n_generators()
            )));
        }
        Ok(self.truncate(k))
    }

    /// Zeroes every blade not contained in `{1..k}`; `k` must be in range.
    pub(crate) fn truncate(&self, k: usize) -> Self {
        let keep = 1usize << k;
        let mut out = self.clone();
        for c in out.coeffs.iter_mut().skip(keep) {
            *c = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// Smallest `k` such that the element lies in the subalgebra of `e_1..e_k`.
    pub fn support_level(&self) -> usize {
        self.terms().map(|(m, _)| blade_level(m)).max().unwrap_or(0)
    }

    pub fn is_supported_in(&self, k: usize) -> bool {
        self.support_level() <= k
    }

    pub fn is_even(&self) -> bool {
        self.terms().all(|(m, _)| m.count_ones() % 2 == 0)
    }

    pub fn is_odd(&self) -> bool {
        self.terms().all(|(m, _)| m.count_ones() % 2 == 1)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            alg: self.alg.clone(),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Self {
            alg: self.alg.clone(),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        debug_assert!(self.same_algebra(other));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * c;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }
}

impl PartialEq for CliffordElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_algebra(other) && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<_> = self.terms().collect();
        f.debug_struct("CliffordElement")
            .field("n", &self.alg.n_generators())
            .field("terms", &terms)
            .finish()
    }
}

// Operator forms panic on algebra mismatch; the checked methods return errors.

impl Mul for &CliffordElement {
    type Output = CliffordElement;
    fn mul(self, rhs: &CliffordElement) -> CliffordElement {
        assert!(self.same_algebra(rhs), "algebra mismatch in product");
        self.mul_unchecked(rhs)
    }
}

impl Mul<f64> for &CliffordElement {
    type Output = CliffordElement;
    fn mul(self, rhs: f64) -> CliffordElement {
        self.scale_re(rhs)
    }
}

impl Mul<Complex64> for &CliffordElement {
    type Output = CliffordElement;
    fn mul(self, rhs: Complex64) -> CliffordElement {
        self.scale(rhs)
    }
}

impl Add for &CliffordElement {
    type Output = CliffordElement;
    fn add(self, rhs: &CliffordElement) -> CliffordElement {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &CliffordElement {
    type Output = CliffordElement;
    fn sub(self, rhs: &CliffordElement) -> CliffordElement {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for CliffordElement {
    type Output = CliffordElement;
    fn add(mut self, rhs: CliffordElement) -> CliffordElement {
        self += &rhs;
        self
    }
}

impl Sub for CliffordElement {
    type Output = CliffordElement;
    fn sub(mut self, rhs: CliffordElement) -> CliffordElement {
        self -= &rhs;
        self
    }
}

impl AddAssign<&CliffordElement> for CliffordElement {
    fn add_assign(&mut self, rhs: &CliffordElement) {
        assert!(self.same_algebra(rhs), "algebra mismatch in sum");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&CliffordElement> for CliffordElement {
    fn sub_assign(&mut self, rhs: &CliffordElement) {
        assert!(self.same_algebra(rhs), "algebra mismatch in difference");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &CliffordElement {
    type Output = CliffordElement;
    fn neg(self) -> CliffordElement {
        self.scale_re(-1.0)
    }
}
