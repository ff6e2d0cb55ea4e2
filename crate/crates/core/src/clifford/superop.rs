use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::algebra::CliffordAlgebra;
use super::element::CliffordElement;

/// Real coordinates `[Re c_0 .. Re c_{d-1}, Im c_0 .. Im c_{d-1}]` of the first
/// `d = 2^level` blade coefficients. `Re⟨a, b⟩` is the dot product of these vectors.
pub fn real_coords(x: &CliffordElement, level: usize) -> DVector<f64> {
    let d = 1usize << level;
    let c = x.coeffs();
    DVector::from_fn(2 * d, |i, _| if i < d { c[i].re } else { c[i - d].im })
}

pub fn from_real_coords(alg: &Arc<CliffordAlgebra>, level: usize, v: &DVector<f64>) -> CliffordElement {
    let d = 1usize << level;
    assert_eq!(v.len(), 2 * d);
    let mut out = CliffordElement::zero(alg);
    let coeffs = out.coeffs_mut();
    for i in 0..d {
        coeffs[i] = Complex64::new(v[i], v[i + d]);
    }
    out
}

/// The `i`-th real basis vector of the level-`level` subspace: `e_S` for
/// `i < 2^level`, otherwise `i·e_S`.
pub fn real_basis(alg: &Arc<CliffordAlgebra>, level: usize, i: usize) -> CliffordElement {
    let d = 1usize << level;
    if i < d {
        CliffordElement::blade(alg, i, Complex64::new(1.0, 0.0))
    } else {
        CliffordElement::blade(alg, i - d, Complex64::new(0.0, 1.0))
    }
}

/// Riesz representative in the level subspace of a real-linear functional:
/// the element `r` with `Re⟨r, h⟩ = f(h)` for all `h` supported in `{1..level}`.
pub fn riesz<F>(alg: &Arc<CliffordAlgebra>, level: usize, mut f: F) -> CliffordElement
where
    F: FnMut(&CliffordElement) -> f64,
{
    let d = 1usize << level;
    let mut out = CliffordElement::zero(alg);
    let values: Vec<f64> = (0..2 * d).map(|i| f(&real_basis(alg, level, i))).collect();
    let coeffs = out.coeffs_mut();
    for i in 0..d {
        coeffs[i] = Complex64::new(values[i], values[i + d]);
    }
    out
}

/// A real-linear map on the subspace of elements supported in `{1..level}`,
/// materialized in real coordinates.
///
/// Complex-linear maps are the special case with a vanishing antilinear part;
/// see [`SuperOperator::linear_part`] and [`SuperOperator::antilinear_part`].
#[derive(Clone, Debug)]
pub struct SuperOperator {
    alg: Arc<CliffordAlgebra>,
    level: usize,
    matrix: DMatrix<f64>,
}

impl SuperOperator {
    pub fn from_matrix(alg: &Arc<CliffordAlgebra>, level: usize, matrix: DMatrix<f64>) -> Self {
        let n = 2usize << level;
        assert_eq!(matrix.shape(), (n, n), "superoperator shape");
        Self {
            alg: alg.clone(),
            level,
            matrix,
        }
    }

    /// Materializes `E_level ∘ f` restricted to the level subspace. Columns are
    /// evaluated in parallel and assembled in index order.
    pub fn from_fn<F>(alg: &Arc<CliffordAlgebra>, level: usize, f: F) -> Self
    where
        F: Fn(&CliffordElement) -> CliffordElement + Sync,
    {
        let n = 2usize << level;
        let columns: Vec<DVector<f64>> = (0..n)
            .into_par_iter()
            .map(|j| real_coords(&f(&real_basis(alg, level, j)), level))
            .collect();
        Self::from_matrix(alg, level, DMatrix::from_columns(&columns))
    }

    /// Fallible variant of [`SuperOperator::from_fn`]; the first error in column order wins.
    pub fn try_from_fn<F, E>(alg: &Arc<CliffordAlgebra>, level: usize, f: F) -> Result<Self, E>
    where
        F: Fn(&CliffordElement) -> Result<CliffordElement, E> + Sync,
        E: Send,
    {
        let n = 2usize << level;
        let columns: Vec<DVector<f64>> = (0..n)
            .into_par_iter()
            .map(|j| f(&real_basis(alg, level, j)).map(|v| real_coords(&v, level)))
            .collect::<Result<_, E>>()?;
        Ok(Self::from_matrix(alg, level, DMatrix::from_columns(&columns)))
    }

    pub fn zero(alg: &Arc<CliffordAlgebra>, level: usize) -> Self {
        let n = 2usize << level;
        Self::from_matrix(alg, level, DMatrix::zeros(n, n))
    }

    pub fn identity(alg: &Arc<CliffordAlgebra>, level: usize) -> Self {
        let n = 2usize << level;
        Self::from_matrix(alg, level, DMatrix::identity(n, n))
    }

    pub fn algebra(&self) -> &Arc<CliffordAlgebra> {
        &self.alg
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Applies the operator; blades of `x` outside the level subspace are ignored.
    pub fn apply(&self, x: &CliffordElement) -> CliffordElement {
        let v = &self.matrix * real_coords(x, self.level);
        from_real_coords(&self.alg, self.level, &v)
    }

    /// The real bilinear form `Re⟨P a, b⟩`.
    pub fn form(&self, a: &CliffordElement, b: &CliffordElement) -> f64 {
        real_coords(b, self.level).dot(&(&self.matrix * real_coords(a, self.level)))
    }

    /// Adjoint with respect to `Re⟨·,·⟩`.
    pub fn adjoint(&self) -> Self {
        Self::from_matrix(&self.alg, self.level, self.matrix.transpose())
    }

    /// Largest entry of `P - P^T`, zero for a self-adjoint operator.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.level, other.level);
        (&self.matrix - &other.matrix).amax()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_matrix(&self.alg, self.level, &self.matrix * c)
    }

    fn blocks(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let d = 1usize << self.level;
        (
            self.matrix.view((0, 0), (d, d)).into_owned(),
            self.matrix.view((0, d), (d, d)).into_owned(),
            self.matrix.view((d, 0), (d, d)).into_owned(),
            self.matrix.view((d, d), (d, d)).into_owned(),
        )
    }

    /// Complex matrix `A` in the decomposition `P h = A h + B h̄`.
    pub fn linear_part(&self) -> DMatrix<Complex64> {
        let (m11, m12, m21, m22) = self.blocks();
        let re = (&m11 + &m22) * 0.5;
        let im = (&m21 - &m12) * 0.5;
        DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
    }

    /// Complex matrix `B` in the decomposition `P h = A h + B h̄`.
    pub fn antilinear_part(&self) -> DMatrix<Complex64> {
        let (m11, m12, m21, m22) = self.blocks();
        let re = (&m11 - &m22) * 0.5;
        let im = (&m21 + &m12) * 0.5;
        DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
    }

    pub fn is_complex_linear(&self, tol: f64) -> bool {
        self.antilinear_part().iter().all(|c| c.norm() <= tol)
    }
}
