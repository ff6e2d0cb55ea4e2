//! Control problems: coefficient maps, costs, their derivatives, the
//! Hamiltonian and the gallery of analytic test problems.

mod audit;
mod control;
mod custom;
mod gallery;
mod hamiltonian;
mod spec;

use std::sync::Arc;

use crate::clifford::{riesz, AdaptedProcess, CliffordAlgebra, CliffordElement};
use crate::error::{QsocError, Result};

pub use audit::{audit_derivatives, probe_bounds, AuditEntry, BoundsReport, DerivativeAudit};
pub use control::{ControlPath, ControlSet};
pub use custom::CustomProblem;
pub use gallery::{CoefficientTerms, PolynomialProblem};
pub use hamiltonian::{
    hamiltonian, hamiltonian_derivatives, hamiltonian_u, hamiltonian_uu_apply, hamiltonian_x, hamiltonian_xu_apply,
    hamiltonian_xx_apply, HamiltonianDerivatives,
};
pub use spec::{demo_spec, make_problem, BladeList, CoefficientSpec, ProblemSpec, GALLERY_NAMES};

/// Which of the three coefficient maps of the state equation
/// `dx = D dt + F dW + dW G` a callback refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coefficient {
    /// `D`, the drift.
    Drift,
    /// `F`, multiplying the increment from the left.
    Left,
    /// `G`, multiplying the increment from the right.
    Right,
}

impl Coefficient {
    pub const ALL: [Coefficient; 3] = [Coefficient::Drift, Coefficient::Left, Coefficient::Right];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::Drift => "D",
            Coefficient::Left => "F",
            Coefficient::Right => "G",
        }
    }
}

/// A discrete controlled problem with coefficient maps `D, F, G`, running
/// cost `L` and terminal cost `g`.
///
/// Time enters as the grid index `k`; `x` is supported in `{1..k}` and every
/// coefficient output must be as well. Gradients and Hessians are taken with
/// respect to the real inner product `Re⟨·,·⟩`, so `*_x` callbacks return the
/// Riesz representative and `*_xx` callbacks return the Hessian applied to a
/// direction. Second derivatives of `D, F, G` are symmetric bilinear maps.
pub trait ControlProblem: Send + Sync {
    fn algebra(&self) -> &Arc<CliffordAlgebra>;

    fn control_set(&self) -> &ControlSet;

    fn initial_state(&self) -> &CliffordElement;

    fn control_dim(&self) -> usize {
        self.control_set().dim()
    }

    /// Fails with [`QsocError::MissingCallback`] naming the first absent callback.
    fn check_callbacks(&self) -> Result<()> {
        Ok(())
    }

    fn coefficient(&self, c: Coefficient, k: usize, x: &CliffordElement, u: &[f64]) -> Result<CliffordElement>;

    /// `Φ_x h`.
    fn coefficient_x(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        h: &CliffordElement,
    ) -> Result<CliffordElement>;

    /// The element `r` supported in `{1..k}` with `Re⟨r, h⟩ = Re⟨w, Φ_x h⟩` for all such `h`.
    fn coefficient_x_adjoint(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        w: &CliffordElement,
    ) -> Result<CliffordElement> {
        let alg = self.algebra().clone();
        let mut err = None;
        let r = riesz(&alg, k, |h| match self.coefficient_x(c, k, x, u, h) {
            Ok(v) => w.real_inner(&v),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        err.map_or(Ok(r), Err)
    }

    /// `Φ_u v`.
    fn coefficient_u(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        v: &[f64],
    ) -> Result<CliffordElement>;

    /// `Φ_xx(h1, h2)`.
    fn coefficient_xx(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        h1: &CliffordElement,
        h2: &CliffordElement,
    ) -> Result<CliffordElement>;

    /// Riesz representative at level `k` of `h2 -> Re⟨w, Φ_xx(h, h2)⟩`.
    fn coefficient_xx_contract(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        w: &CliffordElement,
        h: &CliffordElement,
    ) -> Result<CliffordElement> {
        let alg = self.algebra().clone();
        let mut err = None;
        let r = riesz(&alg, k, |h2| match self.coefficient_xx(c, k, x, u, h, h2) {
            Ok(v) => w.real_inner(&v),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        err.map_or(Ok(r), Err)
    }

    /// `Φ_xu(h, v)`.
    fn coefficient_xu(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        h: &CliffordElement,
        v: &[f64],
    ) -> Result<CliffordElement>;

    /// `Φ_uu(v1, v2)`.
    fn coefficient_uu(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        v1: &[f64],
        v2: &[f64],
    ) -> Result<CliffordElement>;

    fn running_cost(&self, k: usize, x: &CliffordElement, u: &[f64]) -> Result<f64>;

    fn running_cost_x(&self, k: usize, x: &CliffordElement, u: &[f64]) -> Result<CliffordElement>;

    fn running_cost_u(&self, k: usize, x: &CliffordElement, u: &[f64]) -> Result<Vec<f64>>;

    /// `L_xx h`, the Hessian in `x` applied to `h`.
    fn running_cost_xx(&self, k: usize, x: &CliffordElement, u: &[f64], h: &CliffordElement)
        -> Result<CliffordElement>;

    /// The vector `i -> L_xu(h, e_i)`.
    fn running_cost_xu(&self, k: usize, x: &CliffordElement, u: &[f64], h: &CliffordElement) -> Result<Vec<f64>>;

    /// `L_uu v`.
    fn running_cost_uu(&self, k: usize, x: &CliffordElement, u: &[f64], v: &[f64]) -> Result<Vec<f64>>;

    fn terminal_cost(&self, x: &CliffordElement) -> Result<f64>;

    fn terminal_cost_x(&self, x: &CliffordElement) -> Result<CliffordElement>;

    /// `g_xx h`.
    fn terminal_cost_xx(&self, x: &CliffordElement, h: &CliffordElement) -> Result<CliffordElement>;

    /// A constant bounding the Lipschitz moduli of `D, F, G` in `x` and their
    /// size at `x = 0`, for `x` with coefficient `ℓ¹` norm at most `radius`
    /// and `u` in the control set. `None` if the problem declares none.
    fn bound_constant(&self, _radius: f64) -> Option<f64> {
        None
    }
}

/// `Σ_k L(k, x_k, u_k)·dt + g(x_N)`.
pub fn cost(p: &dyn ControlProblem, u: &ControlPath, x: &AdaptedProcess) -> Result<f64> {
    let alg = p.algebra();
    let n = alg.n_generators();
    if u.steps() != n {
        return Err(QsocError::LengthMismatch {
            what: "control path",
            expected: n,
            actual: u.steps(),
        });
    }
    if x.len() != n + 1 {
        return Err(QsocError::LengthMismatch {
            what: "state trajectory",
            expected: n + 1,
            actual: x.len(),
        });
    }
    let mut total = 0.0;
    for k in 0..n {
        total += alg.dt() * p.running_cost(k, x.get(k), u.get(k))?;
    }
    Ok(total + p.terminal_cost(x.last())?)
}
