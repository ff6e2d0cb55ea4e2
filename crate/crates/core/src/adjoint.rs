//! First adjoint `(y, Y)` as the exact transpose of the discrete linearized
//! dynamics, and the second adjoint `P` materialized from its duality formula.
//!
//! For the step map `A_k φ = φ + dt·D_x φ + (F̃_x φ)ΔW_{k+1}` and any `a, b`
//! supported in `{1..k}`, `⟨ỹ + YΔW_{k+1}, a + bΔW_{k+1}⟩ = ⟨ỹ, a⟩ + dt⟨Y, b⟩`.
//! This makes every summation-by-parts identity below exact in discrete time.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::{
    martingale_coefficient, real_basis, real_coords, AdaptedProcess, CliffordElement, SuperOperator,
};
use crate::error::{QsocError, Result};
use crate::forward::{solve_first_variation, solve_second_variation, Linearization, Trajectory};
use crate::problem::{hamiltonian_x, hamiltonian_xx_apply, ControlPath, ControlProblem};
use crate::sampling::random_element;

/// Default largest `N` for which second adjoints are materialized.
pub const DEFAULT_SUPEROP_CAP: usize = 8;

/// Solution of the first adjoint equation.
#[derive(Clone, Debug)]
pub struct AdjointPair {
    /// `y_k`, `k = 0..=N`.
    pub y: AdaptedProcess,
    /// `Y_k`, `k = 0..N`: the martingale coefficient of `y_{k+1}`.
    pub big_y: AdaptedProcess,
    /// `ỹ_k = E_k(y_{k+1})`, `k = 0..N`: the weight of the drift in the Hamiltonian at step `k`.
    pub y_cond: AdaptedProcess,
}

impl AdjointPair {
    /// The `(y, Y)` arguments of the Hamiltonian at step `k`.
    pub fn at(&self, k: usize) -> (&CliffordElement, &CliffordElement) {
        (self.y_cond.get(k), self.big_y.get(k))
    }
}

/// Backward recursion `y_N = −g_x(x̄_N)`,
/// `y_k = ỹ_k + dt·ℍ_x(k, x̄_k, ū_k, ỹ_k, Y_k)`.
pub fn solve_first_adjoint(p: &dyn ControlProblem, xbar: &Trajectory) -> Result<AdjointPair> {
    let alg = p.algebra();
    let n = alg.n_generators();
    let dt = alg.dt();
    let mut y = vec![CliffordElement::zero(alg); n + 1];
    let mut big_y = vec![CliffordElement::zero(alg); n];
    let mut y_cond = vec![CliffordElement::zero(alg); n];
    y[n] = -&p.terminal_cost_x(xbar.terminal())?;
    for k in (0..n).rev() {
        let cond = y[k + 1].conditional_expectation(k)?;
        let mart = martingale_coefficient(&y[k + 1], k)?;
        let hx = hamiltonian_x(p, k, xbar.state(k), xbar.control.get(k), &cond, &mart)?;
        let mut yk = cond.clone();
        yk.axpy(dt, &hx);
        y[k] = yk;
        big_y[k] = mart;
        y_cond[k] = cond;
    }
    Ok(AdjointPair {
        y: AdaptedProcess::new(alg, y)?,
        big_y: AdaptedProcess::new(alg, big_y)?,
        y_cond: AdaptedProcess::new(alg, y_cond)?,
    })
}

/// Both sides of a duality identity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl DualityCheck {
    pub fn abs_residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    /// Residual relative to `max(|lhs|, |rhs|, 1e-300)`.
    pub fn rel_residual(&self) -> f64 {
        self.abs_residual() / self.lhs.abs().max(self.rhs.abs()).max(1e-300)
    }
}

/// `−Re⟨g_x(x̄_N), x₁_N⟩` against
/// `Σ dt·Re{⟨ỹ_k, D_u δu_k⟩ + ⟨L_x, x₁_k⟩ + ⟨Y_k, F̃_u δu_k⟩}`.
pub fn first_duality(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    du: &ControlPath,
) -> Result<DualityCheck> {
    let x1 = solve_first_variation(p, xbar, du)?;
    let lin = Linearization::new(p, xbar);
    let dt = p.algebra().dt();
    let lhs = -p.terminal_cost_x(xbar.terminal())?.real_inner(x1.last());
    let mut rhs = 0.0;
    for k in 0..p.algebra().n_generators() {
        let (yc, yy) = adj.at(k);
        let (x, u) = (xbar.state(k), xbar.control.get(k));
        rhs += dt
            * (yc.real_inner(&lin.drift_u(k, du.get(k))?)
                + p.running_cost_x(k, x, u)?.real_inner(x1.get(k))
                + yy.real_inner(&lin.diffusion_u(k, du.get(k))?));
    }
    Ok(DualityCheck { lhs, rhs })
}

/// `−Re⟨g_x(x̄_N), x₂_N⟩` against the adjoint pairing with the second-variation drivers.
pub fn second_duality(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    du: &ControlPath,
) -> Result<DualityCheck> {
    let x1 = solve_first_variation(p, xbar, du)?;
    let x2 = solve_second_variation(p, xbar, &x1, du)?;
    let lin = Linearization::new(p, xbar);
    let dt = p.algebra().dt();
    let lhs = -p.terminal_cost_x(xbar.terminal())?.real_inner(x2.last());
    let mut rhs = 0.0;
    for k in 0..p.algebra().n_generators() {
        let (yc, yy) = adj.at(k);
        let (x, u) = (xbar.state(k), xbar.control.get(k));
        let h = x1.get(k);
        let v = du.get(k);
        rhs += dt
            * (yc.real_inner(&lin.drift_second(k, h, v)?)
                + p.running_cost_x(k, x, u)?.real_inner(x2.get(k))
                + yy.real_inner(&lin.diffusion_second(k, h, v)?));
    }
    Ok(DualityCheck { lhs, rhs })
}

/// Second adjoint: `P_k` acts on elements supported in `{1..k}`.
#[derive(Clone, Debug)]
pub struct SecondAdjoint {
    ops: Vec<SuperOperator>,
}

impl SecondAdjoint {
    pub fn from_operators(ops: Vec<SuperOperator>) -> Self {
        Self { ops }
    }

    pub fn get(&self, k: usize) -> &SuperOperator {
        &self.ops[k]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn terminal(&self) -> &SuperOperator {
        self.ops.last().expect("nonempty")
    }

    /// `Re⟨P_k a, b⟩`.
    pub fn form(&self, k: usize, a: &CliffordElement, b: &CliffordElement) -> f64 {
        self.ops[k].form(a, b)
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.ops.iter().map(SuperOperator::asymmetry).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.ops
            .iter()
            .zip(&other.ops)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

struct SecondOrderContext<'a> {
    p: &'a dyn ControlProblem,
    xbar: &'a Trajectory,
    adj: &'a AdjointPair,
    lin: Linearization<'a>,
}

impl<'a> SecondOrderContext<'a> {
    fn new(p: &'a dyn ControlProblem, xbar: &'a Trajectory, adj: &'a AdjointPair) -> Self {
        Self {
            p,
            xbar,
            adj,
            lin: Linearization::new(p, xbar),
        }
    }

    /// `ℍ_xx h` at step `j`.
    fn hxx(&self, j: usize, h: &CliffordElement) -> Result<CliffordElement> {
        let (yc, yy) = self.adj.at(j);
        hamiltonian_xx_apply(self.p, j, self.xbar.state(j), self.xbar.control.get(j), yc, yy, h)
    }

    /// `P_N h = −g_xx(x̄_N) h`.
    fn terminal(&self, h: &CliffordElement) -> Result<CliffordElement> {
        Ok(-&self.p.terminal_cost_xx(self.xbar.terminal(), h)?)
    }

    /// `Re⟨P_k ζ₂, ζ₁⟩` from the two homogeneous propagations.
    fn form_by_propagation(&self, k: usize, z2: &CliffordElement, z1: &CliffordElement) -> Result<f64> {
        let n = self.p.algebra().n_generators();
        let dt = self.p.algebra().dt();
        let phi2 = self.lin.propagate_homogeneous(k, z2)?;
        let phi1 = self.lin.propagate_homogeneous(k, z1)?;
        let mut total = self.terminal(phi2.last())?.real_inner(phi1.last());
        for j in k..n {
            total += dt * self.hxx(j, phi2.get(j))?.real_inner(phi1.get(j));
        }
        Ok(total)
    }

    fn level_operator(&self, k: usize) -> Result<SuperOperator> {
        let alg = self.p.algebra();
        let n = alg.n_generators();
        let dt = alg.dt();
        let dim = 2usize << k;
        let phis: Vec<AdaptedProcess> = (0..dim)
            .into_par_iter()
            .map(|i| self.lin.propagate_homogeneous(k, &real_basis(alg, k, i)))
            .collect::<Result<_>>()?;
        let coords = |l: usize,
                      f: &(dyn Fn(&CliffordElement) -> Result<CliffordElement> + Sync)|
         -> Result<(DMatrix<f64>, DMatrix<f64>)> {
            let cols: Vec<_> = phis
                .par_iter()
                .map(|phi| {
                    let v = phi.get(l);
                    Ok((real_coords(v, l), real_coords(&f(v)?, l)))
                })
                .collect::<Result<Vec<_>>>()?;
            let (a, b): (Vec<_>, Vec<_>) = cols.into_iter().unzip();
            Ok((DMatrix::from_columns(&a), DMatrix::from_columns(&b)))
        };
        // M[j, i] = Re⟨P e_i, e_j⟩ = Σ coords(φʲ) · coords(weight(φⁱ))
        let (phi_n, g_n) = coords(n, &|v| self.terminal(v))?;
        let mut m = phi_n.transpose() * g_n;
        for l in k..n {
            let (phi_l, h_l) = coords(l, &|v| self.hxx(l, v))?;
            m += (phi_l.transpose() * h_l) * dt;
        }
        Ok(SuperOperator::from_matrix(alg, k, m))
    }
}

fn check_cap(p: &dyn ControlProblem, cap: usize) -> Result<()> {
    let n = p.algebra().n_generators();
    if n > cap {
        return Err(QsocError::Capacity(format!(
            "second adjoint needs 2^{n}-dimensional superoperators, cap is N = {cap}"
        )));
    }
    Ok(())
}

/// Materializes `P_k` for `k = 0..=N` from
/// `Re⟨P_k ζ₂, ζ₁⟩ = −Re⟨g_xx φ₂_N, φ₁_N⟩ + Σ_{j=k}^{N−1} dt·ℍ_xx(j)(φ₂_j, φ₁_j)`
/// by propagating the real basis of the level-`k` subspace.
pub fn compute_p(p: &dyn ControlProblem, xbar: &Trajectory, adj: &AdjointPair) -> Result<SecondAdjoint> {
    compute_p_with_cap(p, xbar, adj, DEFAULT_SUPEROP_CAP)
}

pub fn compute_p_with_cap(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    cap: usize,
) -> Result<SecondAdjoint> {
    check_cap(p, cap)?;
    let ctx = SecondOrderContext::new(p, xbar, adj);
    let n = p.algebra().n_generators();
    let ops = (0..=n)
        .into_par_iter()
        .map(|k| ctx.level_operator(k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SecondAdjoint { ops })
}

/// The same operators from the backward recursion `P_k = dt·H_k + A_kᵀ P_{k+1} A_k`.
pub fn compute_p_backward(p: &dyn ControlProblem, xbar: &Trajectory, adj: &AdjointPair) -> Result<SecondAdjoint> {
    check_cap(p, DEFAULT_SUPEROP_CAP)?;
    let ctx = SecondOrderContext::new(p, xbar, adj);
    let alg = p.algebra();
    let n = alg.n_generators();
    let dt = alg.dt();
    let mut ops = vec![SuperOperator::try_from_fn(alg, n, |h| ctx.terminal(h))?];
    for k in (0..n).rev() {
        let dim = 2usize << k;
        let cols = (0..dim)
            .map(|i| {
                let e = real_basis(alg, k, i);
                let mut next = e.clone();
                next.axpy(dt, &ctx.lin.drift_x(k, &e)?);
                next += &crate::clifford::times_increment(&ctx.lin.diffusion_x(k, &e)?, k);
                Ok(real_coords(&next, k + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        let a = DMatrix::from_columns(&cols);
        let h = SuperOperator::try_from_fn(alg, k, |v| ctx.hxx(k, v))?;
        let next = ops.last().expect("nonempty").matrix();
        let m = h.matrix() * dt + a.transpose() * next * &a;
        ops.push(SuperOperator::from_matrix(alg, k, m));
    }
    ops.reverse();
    Ok(SecondAdjoint { ops })
}

/// `Re⟨P_k ζ₂, ζ₁⟩` recomputed from two fresh forward solves.
pub fn p_form_by_propagation(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    k: usize,
    z2: &CliffordElement,
    z1: &CliffordElement,
) -> Result<f64> {
    SecondOrderContext::new(p, xbar, adj).form_by_propagation(k, z2, z1)
}

/// The Q-dependent part of the second-order functional, obtained by solving
/// the transposition identity with `ζ = 0`, `μ = D_u δu`, `ν = F̃_u δu` (so both
/// test processes equal `x₁`) for the terms that involve `Q`.
pub fn q_terms(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    pp: &SecondAdjoint,
    x1: &AdaptedProcess,
    du: &ControlPath,
) -> Result<f64> {
    let expected = solve_first_variation(p, xbar, du)?;
    let scale = expected.sup_norm().max(1.0);
    if x1.len() != expected.len() || x1.max_abs_diff(&expected) > 1e-9 * scale {
        return Err(QsocError::Contract(
            "first variation does not match the control direction".into(),
        ));
    }
    let ctx = SecondOrderContext::new(p, xbar, adj);
    let n = p.algebra().n_generators();
    let dt = p.algebra().dt();
    let mut total = ctx.terminal(x1.last())?.real_inner(x1.last());
    for k in 0..n {
        let h = x1.get(k);
        let v = du.get(k);
        let a = ctx.lin.drift_u(k, v)?;
        let b = ctx.lin.diffusion_u(k, v)?;
        let fx = ctx.lin.diffusion_x(k, h)?;
        let p_terms =
            pp.form(k, h, &a) + pp.form(k, &a, h) + pp.form(k, &fx, &b) + pp.form(k, &b, &b) + pp.form(k, &b, &fx);
        total += dt * (ctx.hxx(k, h)?.real_inner(h) - p_terms);
    }
    Ok(total)
}

/// Initial value and forcing of a forward test equation started at `start`.
#[derive(Clone, Debug)]
pub struct TestTuple {
    pub start: usize,
    pub zeta: CliffordElement,
    /// `μ_j` for `j = start..N`.
    pub mu: Vec<CliffordElement>,
    /// `ν_j` for `j = start..N`.
    pub nu: Vec<CliffordElement>,
}

impl TestTuple {
    pub fn new(
        p: &dyn ControlProblem,
        start: usize,
        zeta: CliffordElement,
        mu: Vec<CliffordElement>,
        nu: Vec<CliffordElement>,
    ) -> Result<Self> {
        let n = p.algebra().n_generators();
        if start > n {
            return Err(QsocError::Domain(format!("start index {start} exceeds N = {n}")));
        }
        for (what, v) in [("μ", &mu), ("ν", &nu)] {
            if v.len() != n - start {
                return Err(QsocError::LengthMismatch {
                    what: "test forcing",
                    expected: n - start,
                    actual: v.len(),
                });
            }
            for (i, e) in v.iter().enumerate() {
                if !e.is_supported_in(start + i) {
                    return Err(QsocError::Adaptedness(format!("{what} at step {}", start + i)));
                }
            }
        }
        if !zeta.is_supported_in(start) {
            return Err(QsocError::Adaptedness(format!("ζ at step {start}")));
        }
        Ok(Self { start, zeta, mu, nu })
    }

    /// Random tuple; `ν ≡ 0` unless `with_nu`.
    pub fn random<R: Rng + ?Sized>(p: &dyn ControlProblem, start: usize, with_nu: bool, rng: &mut R) -> Result<Self> {
        let alg = p.algebra();
        let n = alg.n_generators();
        let zeta = random_element(alg, start, false, rng);
        let mu = (start..n).map(|j| random_element(alg, j, false, rng)).collect();
        let nu = (start..n)
            .map(|j| {
                if with_nu {
                    random_element(alg, j, false, rng)
                } else {
                    CliffordElement::zero(alg)
                }
            })
            .collect();
        Self::new(p, start, zeta, mu, nu)
    }

    pub fn has_noise_forcing(&self) -> bool {
        self.nu.iter().any(|v| v.norm_sqr() > 0.0)
    }
}

/// Outcome of one transposition check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TranspositionCheck {
    /// `−Re⟨g_xx φ₂_N, φ₁_N⟩ + Σ dt·ℍ_xx(φ₂, φ₁)`.
    pub lhs: f64,
    /// The same quantity expressed through `P` and the forcing terms.
    pub rhs: f64,
    /// What the `Q`-terms must contribute on top of the `P`-terms in the
    /// continuous-time form of the identity; only meaningful when `ν ≠ 0`.
    pub q_part: f64,
}

impl TranspositionCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Checks the transposition identity for one pair of test tuples sharing a start index.
///
/// With `r_j = dt·μ_j + ν_j ΔW_{j+1}` the discrete identity reads
/// `lhs = ⟨P_k ζ₂, ζ₁⟩ + Σ_j [B_{j+1}(r₂, φ₁_{j+1}) + B_{j+1}(φ₂_{j+1}, r₁) − B_{j+1}(r₂, r₁)]`
/// where `B_j(a, b) = Re⟨P_j a, b⟩`.
pub fn transposition_check(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    pp: &SecondAdjoint,
    t1: &TestTuple,
    t2: &TestTuple,
) -> Result<TranspositionCheck> {
    if t1.start != t2.start {
        return Err(QsocError::Contract("test tuples must share the start index".into()));
    }
    let ctx = SecondOrderContext::new(p, xbar, adj);
    let alg = p.algebra();
    let n = alg.n_generators();
    let dt = alg.dt();
    let k = t1.start;
    let solve = |t: &TestTuple| {
        ctx.lin
            .propagate(k, &t.zeta, |j, _| Ok(Some((t.mu[j - k].clone(), t.nu[j - k].clone()))))
    };
    let phi1 = solve(t1)?;
    let phi2 = solve(t2)?;
    let forcing = |t: &TestTuple, j: usize| {
        let mut r = t.mu[j - k].scale_re(dt);
        r += &crate::clifford::times_increment(&t.nu[j - k], j);
        r
    };

    let mut lhs = ctx.terminal(phi2.last())?.real_inner(phi1.last());
    for j in k..n {
        lhs += dt * ctx.hxx(j, phi2.get(j))?.real_inner(phi1.get(j));
    }

    let mut rhs = pp.form(k, &t2.zeta, &t1.zeta);
    let mut continuous_p_terms = rhs;
    for j in k..n {
        let r1 = forcing(t1, j);
        let r2 = forcing(t2, j);
        rhs += pp.form(j + 1, &r2, phi1.get(j + 1)) + pp.form(j + 1, phi2.get(j + 1), &r1) - pp.form(j + 1, &r2, &r1);

        let (mu1, mu2) = (&t1.mu[j - k], &t2.mu[j - k]);
        let (nu1, nu2) = (&t1.nu[j - k], &t2.nu[j - k]);
        let fx1 = ctx.lin.diffusion_x(j, phi1.get(j))?;
        let fx2 = ctx.lin.diffusion_x(j, phi2.get(j))?;
        continuous_p_terms += dt
            * (pp.form(j, mu2, phi1.get(j))
                + pp.form(j, phi2.get(j), mu1)
                + pp.form(j, &fx2, nu1)
                + pp.form(j, nu2, &(&fx1 + nu1)));
    }
    Ok(TranspositionCheck {
        lhs,
        rhs,
        q_part: lhs - continuous_p_terms,
    })
}

/// Largest residual over the given tuple pairs.
pub fn transposition_residual(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    pp: &SecondAdjoint,
    pairs: &[(TestTuple, TestTuple)],
) -> Result<f64> {
    let checks = pairs
        .par_iter()
        .map(|(a, b)| transposition_check(p, xbar, adj, pp, a, b).map(|c| c.residual()))
        .collect::<Result<Vec<_>>>()?;
    Ok(checks.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordAlgebra;
    use crate::forward::solve_state;
    use crate::problem::{make_problem, ProblemSpec};
    use crate::sampling::{random_control_path, stream_rng};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn lq(alg: &Arc<CliffordAlgebra>) -> crate::problem::PolynomialProblem {
        let mut spec = ProblemSpec::named("lq", 1);
        spec.a = 0.4;
        spec.f0 = 0.3;
        spec.g0 = -0.2;
        spec.b = vec![vec![(0, 1.0, 0.0), (1, 0.5, 0.0)]];
        spec.f = vec![vec![(0, 0.5, 0.0), (2, -0.3, 0.0)]];
        spec.g = vec![vec![(3, 0.2, 0.0)]];
        spec.q = 0.5;
        spec.r = 0.1;
        spec.s = 1.0;
        spec.x_tgt = vec![(0, 0.5, 0.0), (1, 0.25, 0.0)];
        make_problem(alg, &spec).unwrap()
    }

    #[test]
    fn terminal_gradient_only() {
        let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
        let mut spec = ProblemSpec::named("free", 1);
        spec.eta = vec![(0, 1.0, 0.0), (5, 0.0, 2.0)];
        let p = make_problem(&alg, &spec).unwrap();
        let xbar = solve_state(&p, &ControlPath::zeros(4, 1)).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        let eta =
            CliffordElement::from_terms(&alg, [(0, Complex64::new(1.0, 0.0)), (5, Complex64::new(0.0, 2.0))]).unwrap();
        for k in 0..4 {
            assert!(adj.y.get(k).max_abs_diff(&(-&eta.conditional_expectation(k).unwrap())) < 1e-15);
        }
        assert_eq!(adj.y.get(4), &-&eta);
    }

    #[test]
    fn first_duality_is_exact_on_lq() {
        let alg = CliffordAlgebra::new(6, 0.0, 1.0).unwrap();
        let p = lq(&alg);
        let mut rng = stream_rng(7, 0);
        let ubar = random_control_path(p.control_set(), 6, &mut rng);
        let xbar = solve_state(&p, &ubar).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        let du = random_control_path(p.control_set(), 6, &mut rng);
        let check = first_duality(&p, &xbar, &adj, &du).unwrap();
        assert!(check.rel_residual() < 1e-12, "{check:?}");
    }

    #[test]
    fn forward_and_backward_p_agree() {
        let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
        let p = lq(&alg);
        let ubar = ControlPath::constant(4, &[0.3]);
        let xbar = solve_state(&p, &ubar).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        let fwd = compute_p(&p, &xbar, &adj).unwrap();
        let bwd = compute_p_backward(&p, &xbar, &adj).unwrap();
        assert!(fwd.max_abs_diff(&bwd) < 1e-12);
        assert!(fwd.max_asymmetry() < 1e-12);
    }

    #[test]
    fn closed_form_p_for_state_cost() {
        let alg = CliffordAlgebra::new(4, 0.0, 2.0).unwrap();
        let q = 0.75;
        let mut spec = ProblemSpec::named("free", 1);
        spec.q = q;
        let p = make_problem(&alg, &spec).unwrap();
        let xbar = solve_state(&p, &ControlPath::zeros(4, 1)).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        let pp = compute_p(&p, &xbar, &adj).unwrap();
        for k in 0..=4 {
            let expected = SuperOperator::identity(&alg, k).scale(-2.0 * q * (alg.t_end() - alg.time(k)));
            assert!(pp.get(k).max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn capacity_error_above_cap() {
        let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
        let p = lq(&alg);
        let xbar = solve_state(&p, &ControlPath::zeros(4, 1)).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        assert!(matches!(
            compute_p_with_cap(&p, &xbar, &adj, 3),
            Err(QsocError::Capacity(_))
        ));
    }

    #[test]
    fn q_terms_rejects_mismatched_variation() {
        let alg = CliffordAlgebra::new(3, 0.0, 1.0).unwrap();
        let p = lq(&alg);
        let xbar = solve_state(&p, &ControlPath::zeros(3, 1)).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        let pp = compute_p(&p, &xbar, &adj).unwrap();
        let du = ControlPath::constant(3, &[0.5]);
        let x1 = solve_first_variation(&p, &xbar, &du.scale(2.0)).unwrap();
        assert!(matches!(
            q_terms(&p, &xbar, &adj, &pp, &x1, &du),
            Err(QsocError::Contract(_))
        ));
        let x1 = solve_first_variation(&p, &xbar, &ControlPath::zeros(3, 1)).unwrap();
        assert_eq!(
            q_terms(&p, &xbar, &adj, &pp, &x1, &ControlPath::zeros(3, 1)).unwrap(),
            0.0
        );
    }
}
