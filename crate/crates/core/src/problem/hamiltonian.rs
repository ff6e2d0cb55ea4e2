//! `ℍ(k, x, u, y, Y) = ⟨y, D⟩ + ⟨Y, F + ΥG⟩ − L` and its derivatives.
//!
//! Derivatives are taken with respect to the real structure `Re⟨·,·⟩`: the
//! `x`-gradient is a Riesz representative at level `k` and `u`-derivatives are
//! vectors in `ℝ^m`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Coefficient, ControlProblem};
use crate::clifford::{real_basis, real_coords, CliffordElement, SuperOperator};
use crate::error::Result;

/// `(y, Y, ΥY)`: the weights pairing with `D`, `F` and `G` respectively.
fn weights(y: &CliffordElement, big_y: &CliffordElement) -> [CliffordElement; 3] {
    [y.clone(), big_y.clone(), big_y.parity()]
}

fn unit(m: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = 1.0;
    v
}

pub fn hamiltonian(
    p: &dyn ControlProblem,
    k: usize,
    x: &CliffordElement,
    u: &[f64],
    y: &CliffordElement,
    big_y: &CliffordElement,
) -> Result<Complex64> {
    let d = p.coefficient(Coefficient::Drift, k, x, u)?;
    let f = p.coefficient(Coefficient::Left, k, x, u)?;
    let g = p.coefficient(Coefficient::Right, k, x, u)?;
    let diffusion = &f + &g.parity();
    Ok(y.inner(&d)? + big_y.inner(&diffusion)? - p.running_cost(k, x, u)?)
}

/// `ℍ_x = D_x* y + F_x* Y + G_x*(ΥY) − L_x`, supported in `{1..k}`.
pub fn hamiltonian_x(
    p: &dyn ControlProblem,
    k: usize,
    x: &CliffordElement,
    u: &[f64],
    y: &CliffordElement,
    big_y: &CliffordElement,
) -> Result<CliffordElement> {
    let mut out = -&p.running_cost_x(k, x, u)?.truncate(k);
    for (c, w) in Coefficient::ALL.into_iter().zip(weights(y, big_y)) {
        out += &p.coefficient_x_adjoint(c, k, x, u, &w)?;
    }
    Ok(out)
}

/// `ℍ_u[i] = Re⟨y, D_u eᵢ⟩ + Re⟨Y, (F_u + ΥG_u) eᵢ⟩ − L_u[i]`.
pub fn hamiltonian_u(
    p: &dyn ControlProblem,
    k: usize,
    x: &CliffordElement,
    u: &[f64],
    y: &CliffordElement,
    big_y: &CliffordElement,
) -> Result<Vec<f64>> {
    let m = u.len();
    let mut out: Vec<f64> = p.running_cost_u(k, x, u)?.iter().map(|v| -v).collect();
    let w = weights(y, big_y);
    for (i, slot) in out.iter_mut().enumerate() {
        let e = unit(m, i);
        for (c, wc) in Coefficient::ALL.into_iter().zip(&w) {
            *slot += wc.real_inner(&p.coefficient_u(c, k, x, u, &e)?);
        }
    }
    Ok(out)
}

/// `ℍ_xx h`: the element `r` at level `k` with `Re⟨r, h₂⟩ = ℍ_xx(h, h₂)`.
pub fn hamiltonian_xx_apply(
    p: &dyn ControlProblem,
    k: usize,
    x: &CliffordElement,
    u: &[f64],
    y: &CliffordElement,
    big_y: &CliffordElement,
    h: &CliffordElement,
) -> Result<CliffordElement> {
    let mut out = -&p.running_cost_xx(k, x, u, h)?.truncate(k);
    for (c, w) in Coefficient::ALL.into_iter().zip(weights(y, big_y)) {
        out += &p.coefficient_xx_contract(c, k, x, u, &w, h)?;
    }
    Ok(out)
}

/// The vector `i -> ℍ_xu(h, eᵢ)`.
pub fn hamiltonian_xu_apply(
    p: &dyn ControlProblem,
    k: usize,
    x: &CliffordElement,
    u: &[f64],
    y: &CliffordElement,
    big_y: &CliffordElement,
    h: &CliffordElement,
) -> Result<Vec<f64>> {
    let m = u.len();
    let mut out: Vec<f64> = p.running_cost_xu(k, x, u, h)?.iter().map(|v| -v).collect();
    let w = weights(y, big_y);
    for (i, slot) in out.iter_mut().enumerate() {
        let e = unit(m, i);
        for (c, wc) in Coefficient::ALL.into_iter().zip(&w) {
            *slot += wc.real_inner(&p.coefficient_xu(c, k, x, u, h, &e)?);
        }
    }
    Ok(out)
}

/// `ℍ_uu v` as a vector: `i -> ℍ_uu(v, eᵢ)`.
pub fn hamiltonian_uu_apply(
    p: &dyn ControlProblem,
    k: usize,
    x: &CliffordElement,
    u: &[f64],
    y: &CliffordElement,
    big_y: &CliffordElement,
    v: &[f64],
) -> Result<Vec<f64>> {
    let m = u.len();
    let mut out: Vec<f64> = p.running_cost_uu(k, x, u, v)?.iter().map(|a| -a).collect();
    let w = weights(y, big_y);
    for (i, slot) in out.iter_mut().enumerate() {
        let e = unit(m, i);
        for (c, wc) in Coefficient::ALL.into_iter().zip(&w) {
            *slot += wc.real_inner(&p.coefficient_uu(c, k, x, u, v, &e)?);
        }
    }
    Ok(out)
}

/// All Hamiltonian derivatives at one grid point, materialized.
#[derive(Clone, Debug)]
pub struct HamiltonianDerivatives {
    pub h_x: CliffordElement,
    pub h_u: Vec<f64>,
    /// Self-adjoint real-linear map on the level-`k` subspace.
    pub h_xx: SuperOperator,
    /// `m × 2^{k+1}` matrix acting on real coordinates: `(ℍ_xu h)_i = row_i · coords(h)`.
    pub h_xu: DMatrix<f64>,
    pub h_uu: DMatrix<f64>,
}

impl HamiltonianDerivatives {
    /// `ℍ_xu(h, v)`.
    pub fn xu_form(&self, h: &CliffordElement, v: &[f64]) -> f64 {
        let hv = &self.h_xu * real_coords(h, self.h_xx.level());
        hv.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// `ℍ_uu(v1, v2)`.
    pub fn uu_form(&self, v1: &[f64], v2: &[f64]) -> f64 {
        let a = DVector::from_column_slice(v1);
        let b = DVector::from_column_slice(v2);
        b.dot(&(&self.h_uu * a))
    }
}

pub fn hamiltonian_derivatives(
    p: &dyn ControlProblem,
    k: usize,
    x: &CliffordElement,
    u: &[f64],
    y: &CliffordElement,
    big_y: &CliffordElement,
) -> Result<HamiltonianDerivatives> {
    let alg = p.algebra();
    let m = u.len();
    let h_x = hamiltonian_x(p, k, x, u, y, big_y)?;
    let h_u = hamiltonian_u(p, k, x, u, y, big_y)?;
    let h_xx = SuperOperator::try_from_fn(alg, k, |h| hamiltonian_xx_apply(p, k, x, u, y, big_y, h))?;
    let cols = 2usize << k;
    let mut h_xu = DMatrix::zeros(m, cols);
    for j in 0..cols {
        let v = hamiltonian_xu_apply(p, k, x, u, y, big_y, &real_basis(alg, k, j))?;
        h_xu.set_column(j, &DVector::from_vec(v));
    }
    let mut h_uu = DMatrix::zeros(m, m);
    for j in 0..m {
        let v = hamiltonian_uu_apply(p, k, x, u, y, big_y, &unit(m, j))?;
        h_uu.set_column(j, &DVector::from_vec(v));
    }
    Ok(HamiltonianDerivatives {
        h_x,
        h_u,
        h_xx,
        h_xu,
        h_uu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordAlgebra;
    use crate::problem::{CoefficientTerms, ControlSet, PolynomialProblem};
    use num_complex::Complex64;

    #[test]
    fn free_problem_derivatives() {
        let alg = CliffordAlgebra::new(3, 0.0, 1.0).unwrap();
        let r = 0.7;
        let p = PolynomialProblem::new(
            "free",
            &alg,
            ControlSet::symmetric(2, 1.0).unwrap(),
            CliffordElement::identity(&alg),
        )
        .unwrap()
        .with_running_cost(0.0, r);
        let x = CliffordElement::identity(&alg);
        let zero = CliffordElement::zero(&alg);
        let u = [0.3, -0.5];
        assert_eq!(
            hamiltonian(&p, 2, &x, &[0.0, 0.0], &zero, &zero).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let d = hamiltonian_derivatives(&p, 2, &x, &u, &zero, &zero).unwrap();
        assert_eq!(d.h_u, vec![-2.0 * r * 0.3, 2.0 * r * 0.5]);
        assert_eq!(d.h_uu, DMatrix::identity(2, 2) * (-2.0 * r));
        assert_eq!(d.h_xx.matrix().amax(), 0.0);
    }

    #[test]
    fn unit_drift_against_itself() {
        let alg = CliffordAlgebra::new(2, 0.0, 1.0).unwrap();
        let b =
            CliffordElement::from_terms(&alg, [(0, Complex64::new(0.6, 0.0)), (1, Complex64::new(0.0, 0.8))]).unwrap();
        let p = PolynomialProblem::new(
            "lq",
            &alg,
            ControlSet::symmetric(1, 1.0).unwrap(),
            CliffordElement::identity(&alg),
        )
        .unwrap()
        .with_coefficient(
            Coefficient::Drift,
            CoefficientTerms {
                control: vec![b.clone()],
                ..Default::default()
            },
        )
        .unwrap();
        let x = CliffordElement::zero(&alg);
        let h = hamiltonian(&p, 1, &x, &[1.0], &b, &CliffordElement::zero(&alg)).unwrap();
        assert!((h - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
