//! First- and second-order necessary conditions: the integrals `FO` and `S`,
//! their Taylor consistency with the cost, and the optimality verifier.

use rayon::prelude::*;
use serde::Serialize;

use crate::adjoint::{compute_p, q_terms, solve_first_adjoint, AdjointPair, SecondAdjoint};
use crate::clifford::AdaptedProcess;
use crate::error::{QsocError, Result};
use crate::forward::{
    check_control, perturbed_controls, solve_first_variation, solve_state, validate_eps, Linearization, Trajectory,
};
use crate::numerics::{extrapolate_to_zero, fit_linear_quadratic, rel_err};
use crate::problem::{
    cost, hamiltonian_u, hamiltonian_uu_apply, hamiltonian_xu_apply, hamiltonian_xx_apply, ControlPath, ControlProblem,
};

/// `FO = Σ dt·ℍ_u(k)·(u_k − ū_k)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FirstOrder {
    pub value: f64,
    /// Imaginary part of the complex pairing; zero for real problem data.
    pub imag: f64,
}

pub fn first_order_integral(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    u: &ControlPath,
) -> Result<FirstOrder> {
    check_control(p, u)?;
    let lin = Linearization::new(p, xbar);
    let dt = p.algebra().dt();
    let du = u.sub(&xbar.control);
    let (mut value, mut imag) = (0.0, 0.0);
    for k in 0..du.steps() {
        let (yc, yy) = adj.at(k);
        let (x, ub) = (xbar.state(k), xbar.control.get(k));
        let h_u = hamiltonian_u(p, k, x, ub, yc, yy)?;
        value += dt * h_u.iter().zip(du.get(k)).map(|(a, b)| a * b).sum::<f64>();
        let pairing = yc.inner(&lin.drift_u(k, du.get(k))?)? + yy.inner(&lin.diffusion_u(k, du.get(k))?)?;
        imag += dt * pairing.im;
    }
    Ok(FirstOrder { value, imag })
}

/// `S` and its pieces.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SecondOrder {
    pub value: f64,
    /// Imaginary part of the complex Hamiltonian second variation; zero for real problem data.
    pub imag: f64,
    /// `Σ dt·ℍ_uu(δu, δu)`.
    pub hamiltonian_uu: f64,
    /// `Σ dt·⟨P F̃_u δu, F̃_u δu⟩`.
    pub p_quadratic: f64,
    /// `Σ dt·2⟨(ℍ_xu + D_u* P + F̃_u* P F̃_x) x₁, δu⟩`.
    pub cross: f64,
    pub q_terms: f64,
}

pub fn second_order_functional(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    pp: &SecondAdjoint,
    u: &ControlPath,
    x1: &AdaptedProcess,
) -> Result<SecondOrder> {
    check_control(p, u)?;
    let lin = Linearization::new(p, xbar);
    let dt = p.algebra().dt();
    let du = u.sub(&xbar.control);
    let q = q_terms(p, xbar, adj, pp, x1, &du)?;
    let (mut h_uu, mut p_quad, mut cross, mut imag) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..du.steps() {
        let (yc, yy) = adj.at(k);
        let (x, ub) = (xbar.state(k), xbar.control.get(k));
        let v = du.get(k);
        let h = x1.get(k);
        let dot = |a: Vec<f64>| a.iter().zip(v).map(|(s, t)| s * t).sum::<f64>();
        let a = lin.drift_u(k, v)?;
        let b = lin.diffusion_u(k, v)?;
        let fx = lin.diffusion_x(k, h)?;
        h_uu += dt * dot(hamiltonian_uu_apply(p, k, x, ub, yc, yy, v)?);
        p_quad += dt * pp.form(k, &b, &b);
        cross +=
            dt * 2.0 * (dot(hamiltonian_xu_apply(p, k, x, ub, yc, yy, h)?) + pp.form(k, h, &a) + pp.form(k, &fx, &b));
        let pairing = yc.inner(&lin.drift_second(k, h, v)?)? + yy.inner(&lin.diffusion_second(k, h, v)?)?;
        imag += dt * pairing.im;
    }
    Ok(SecondOrder {
        value: h_uu + p_quad + cross + q,
        imag,
        hamiltonian_uu: h_uu,
        p_quadratic: p_quad,
        cross,
        q_terms: q,
    })
}

/// Reference trajectory, first adjoint and (optionally) second adjoint at `ū`.
pub struct Expansion {
    pub xbar: Trajectory,
    pub adjoint: AdjointPair,
    pub second: Option<SecondAdjoint>,
}

impl Expansion {
    pub fn first_order(p: &dyn ControlProblem, ubar: &ControlPath) -> Result<Self> {
        let xbar = solve_state(p, ubar)?;
        let adjoint = solve_first_adjoint(p, &xbar)?;
        Ok(Self {
            xbar,
            adjoint,
            second: None,
        })
    }

    pub fn second_order(p: &dyn ControlProblem, ubar: &ControlPath) -> Result<Self> {
        let mut e = Self::first_order(p, ubar)?;
        e.second = Some(compute_p(p, &e.xbar, &e.adjoint)?);
        Ok(e)
    }

    pub fn fo(&self, p: &dyn ControlProblem, u: &ControlPath) -> Result<FirstOrder> {
        first_order_integral(p, &self.xbar, &self.adjoint, u)
    }

    pub fn s(&self, p: &dyn ControlProblem, u: &ControlPath) -> Result<SecondOrder> {
        let pp = self
            .second
            .as_ref()
            .ok_or_else(|| QsocError::Contract("second adjoint was not computed".into()))?;
        let x1 = solve_first_variation(p, &self.xbar, &u.sub(&self.xbar.control))?;
        second_order_functional(p, &self.xbar, &self.adjoint, pp, u, &x1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaylorRow {
    pub eps: f64,
    /// `J(u^ε) − J(ū)`.
    pub delta_j: f64,
    /// `−2(J(u^ε) − J(ū) + ε·FO)/ε²`.
    pub s_estimate: f64,
}

/// Agreement of `J(ū + ε(u − ū)) − J(ū) ≈ −ε·FO − ε²/2·S`.
#[derive(Clone, Debug, Serialize)]
pub struct TaylorReport {
    pub rows: Vec<TaylorRow>,
    pub fo: f64,
    pub s: f64,
    /// Least-squares `(a, b)` in `ΔJ ≈ aε + bε²`, with the largest residual.
    pub fit_linear: f64,
    pub fit_quadratic: f64,
    pub fit_residual: f64,
    /// `ΔJ/ε` extrapolated to `ε = 0`.
    pub linear_extrapolated: f64,
    /// `s_estimate` extrapolated to `ε = 0`.
    pub s_extrapolated: f64,
    /// `|linear_extrapolated + FO| / |FO|`.
    pub fo_rel_err: f64,
    /// `|s_extrapolated − S| / |S|`.
    pub s_rel_err: f64,
}

impl TaylorReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.fo_rel_err <= tol && self.s_rel_err <= tol
    }
}

/// Relative errors are taken as absolute below this magnitude.
const TAYLOR_FLOOR: f64 = 1e-10;

pub fn taylor_consistency(
    p: &dyn ControlProblem,
    ubar: &ControlPath,
    u: &ControlPath,
    eps_list: &[f64],
) -> Result<TaylorReport> {
    validate_eps(eps_list, 3)?;
    check_control(p, u)?;
    let exp = Expansion::second_order(p, ubar)?;
    let fo = exp.fo(p, u)?.value;
    let s = exp.s(p, u)?.value;
    let j0 = cost(p, ubar, &exp.xbar.process)?;
    let controls = perturbed_controls(p, ubar, &u.sub(ubar), eps_list)?;
    let deltas = controls
        .par_iter()
        .map(|ue| {
            let xe = solve_state(p, ue)?;
            Ok(cost(p, ue, &xe.process)? - j0)
        })
        .collect::<Result<Vec<f64>>>()?;

    let rows: Vec<TaylorRow> = eps_list
        .iter()
        .zip(&deltas)
        .map(|(&eps, &delta_j)| TaylorRow {
            eps,
            delta_j,
            s_estimate: -2.0 * (delta_j + eps * fo) / (eps * eps),
        })
        .collect();
    let (fit_linear, fit_quadratic, fit_residual) = fit_linear_quadratic(eps_list, &deltas);
    let slopes: Vec<f64> = rows.iter().map(|r| r.delta_j / r.eps).collect();
    let linear_extrapolated = extrapolate_to_zero(eps_list, &slopes);
    let s_est: Vec<f64> = rows.iter().map(|r| r.s_estimate).collect();
    let s_extrapolated = extrapolate_to_zero(eps_list, &s_est);
    Ok(TaylorReport {
        rows,
        fo,
        s,
        fit_linear,
        fit_quadratic,
        fit_residual,
        linear_extrapolated,
        s_extrapolated,
        fo_rel_err: rel_err(linear_extrapolated, -fo, TAYLOR_FLOOR),
        s_rel_err: rel_err(s_extrapolated, s, TAYLOR_FLOOR),
    })
}

/// Tolerances of the optimality verifier.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TheoremTolerances {
    /// Candidates with `|FO| ≤ fo_tol` are tested for `S ≤ s_tol`.
    pub fo_tol: f64,
    pub s_tol: f64,
}

impl Default for TheoremTolerances {
    fn default() -> Self {
        Self {
            fo_tol: 1e-8,
            s_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateResult {
    pub index: usize,
    pub fo: f64,
    pub s: f64,
    /// `FO` vanishes, so the second-order condition applies.
    pub gated: bool,
    /// `FO ≤ fo_tol`.
    pub first_order_ok: bool,
    /// Not gated, or `S ≤ s_tol`.
    pub second_order_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub tolerances: TheoremTolerances,
    pub candidates: Vec<CandidateResult>,
    pub gated: usize,
    /// Indices with `FO > fo_tol`.
    pub first_order_violations: Vec<usize>,
    /// Gated indices with `S > s_tol`.
    pub second_order_violations: Vec<usize>,
}

impl TheoremReport {
    /// Both necessary conditions hold at every candidate.
    pub fn passed(&self) -> bool {
        self.first_order_violations.is_empty() && self.second_order_violations.is_empty()
    }

    /// Every candidate on which `FO` vanishes has `S ≤ s_tol`.
    pub fn second_order_passed(&self) -> bool {
        self.second_order_violations.is_empty()
    }
}

/// Evaluates `FO` and `S` at every candidate: a minimizer `ū` must have
/// `FO(u) ≤ 0` for all `u`, and `S(u) ≤ 0` whenever `FO(u) = 0`.
pub fn verify_theorem(
    p: &dyn ControlProblem,
    ubar: &ControlPath,
    candidates: &[ControlPath],
    tol: TheoremTolerances,
) -> Result<TheoremReport> {
    let exp = Expansion::second_order(p, ubar)?;
    let rows = candidates
        .par_iter()
        .enumerate()
        .map(|(index, u)| {
            let fo = exp.fo(p, u)?.value;
            let s = exp.s(p, u)?.value;
            let gated = fo.abs() <= tol.fo_tol;
            Ok(CandidateResult {
                index,
                fo,
                s,
                gated,
                first_order_ok: fo <= tol.fo_tol,
                second_order_ok: !gated || s <= tol.s_tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoremReport {
        tolerances: tol,
        gated: rows.iter().filter(|r| r.gated).count(),
        first_order_violations: rows.iter().filter(|r| !r.first_order_ok).map(|r| r.index).collect(),
        second_order_violations: rows.iter().filter(|r| !r.second_order_ok).map(|r| r.index).collect(),
        candidates: rows,
    })
}

/// `ℍ_xx` evaluated on a pair of processes, `Σ dt·ℍ_xx(k)(a_k, b_k)`.
pub fn hamiltonian_xx_integral(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    adj: &AdjointPair,
    a: &AdaptedProcess,
    b: &AdaptedProcess,
) -> Result<f64> {
    let dt = p.algebra().dt();
    let mut total = 0.0;
    for k in 0..p.algebra().n_generators() {
        let (yc, yy) = adj.at(k);
        total +=
            dt * hamiltonian_xx_apply(p, k, xbar.state(k), xbar.control.get(k), yc, yy, a.get(k))?.real_inner(b.get(k));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordAlgebra;
    use crate::problem::{make_problem, ProblemSpec};
    use crate::sampling::{random_control_path, stream_rng};

    #[test]
    fn free_problem_has_exact_quadratic_s() {
        let alg = CliffordAlgebra::new(5, 0.0, 1.0).unwrap();
        let r = 0.7;
        let mut spec = ProblemSpec::named("free", 2);
        spec.r = r;
        let p = make_problem(&alg, &spec).unwrap();
        let ubar = ControlPath::zeros(5, 2);
        let mut rng = stream_rng(3, 0);
        let u = random_control_path(p.control_set(), 5, &mut rng);
        let exp = Expansion::second_order(&p, &ubar).unwrap();
        assert_eq!(exp.fo(&p, &u).unwrap().value, 0.0);
        let s = exp.s(&p, &u).unwrap().value;
        let expected = -2.0 * r * u.norm_l2(alg.dt()).powi(2);
        assert!((s - expected).abs() < 1e-14 * expected.abs());
    }

    #[test]
    fn fo_is_linear_in_direction() {
        let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
        let mut spec = ProblemSpec::named("lq", 1);
        spec.a = 0.5;
        spec.b = vec![vec![(0, 1.0, 0.0)]];
        spec.f = vec![vec![(1, 0.5, 0.0)]];
        spec.q = 1.0;
        spec.r = 0.2;
        spec.s = 1.0;
        let p = make_problem(&alg, &spec).unwrap();
        let ubar = ControlPath::constant(4, &[0.2]);
        let exp = Expansion::first_order(&p, &ubar).unwrap();
        let u1 = ControlPath::constant(4, &[0.6]);
        let u2 = ControlPath::constant(4, &[-0.2]);
        let a = exp.fo(&p, &u1).unwrap().value;
        let b = exp.fo(&p, &u2).unwrap().value;
        assert!((a + b).abs() < 1e-14);
        assert_eq!(exp.fo(&p, &ubar).unwrap().value, 0.0);
    }

    #[test]
    fn verify_requires_second_order_only_when_gated() {
        let alg = CliffordAlgebra::new(3, 0.0, 1.0).unwrap();
        let mut spec = ProblemSpec::named("free", 1);
        spec.r = -1.0;
        let p = make_problem(&alg, &spec).unwrap();
        let ubar = ControlPath::zeros(3, 1);
        let report = verify_theorem(
            &p,
            &ubar,
            &[ControlPath::constant(3, &[0.5])],
            TheoremTolerances::default(),
        )
        .unwrap();
        // concave cost: u = 0 is a maximizer, FO vanishes and S > 0
        assert_eq!(report.gated, 1);
        assert_eq!(report.second_order_violations, vec![0]);
        assert!(report.first_order_violations.is_empty());
    }
}
