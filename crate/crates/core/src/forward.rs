//! Explicit left-point scheme for the state equation and its first and second
//! variations.
//!
//! Right multiplication by the increment is folded into the left one through
//! `ΔW g = Υ(g) ΔW` for `g` supported before the increment, so every step reads
//! `x_{k+1} = x_k + dt·D + (F + ΥG)·ΔW_{k+1}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::{times_increment, AdaptedProcess, CliffordElement};
use crate::error::{QsocError, Result};
use crate::numerics::{loglog_slope, SlopeEstimate};
use crate::problem::{Coefficient, ControlPath, ControlProblem};

/// Admissibility slack for controls.
pub const ADMISSIBLE_TOL: f64 = 1e-12;

/// A state trajectory together with the control that produced it.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub process: AdaptedProcess,
    pub control: ControlPath,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> &CliffordElement {
        self.process.get(k)
    }

    pub fn terminal(&self) -> &CliffordElement {
        self.process.last()
    }
}

pub(crate) fn check_control(p: &dyn ControlProblem, u: &ControlPath) -> Result<()> {
    let n = p.algebra().n_generators();
    if u.steps() != n {
        return Err(QsocError::LengthMismatch {
            what: "control path steps",
            expected: n,
            actual: u.steps(),
        });
    }
    if u.dim() != p.control_dim() {
        return Err(QsocError::LengthMismatch {
            what: "control dimension",
            expected: p.control_dim(),
            actual: u.dim(),
        });
    }
    Ok(())
}

fn check_adapted(x: &CliffordElement, k: usize, what: &str) -> Result<()> {
    if x.is_supported_in(k) {
        Ok(())
    } else {
        Err(QsocError::Adaptedness(format!(
            "{what} at step {k} has support level {}",
            x.support_level()
        )))
    }
}

pub fn solve_state(p: &dyn ControlProblem, u: &ControlPath) -> Result<Trajectory> {
    check_control(p, u)?;
    if !u.is_admissible(p.control_set(), ADMISSIBLE_TOL) {
        return Err(QsocError::Inadmissible("control leaves the admissible box".into()));
    }
    let alg = p.algebra();
    let n = alg.n_generators();
    let dt = alg.dt();
    let x0 = p.initial_state().clone();
    check_adapted(&x0, 0, "initial state")?;
    let mut values = Vec::with_capacity(n + 1);
    values.push(x0);
    for k in 0..n {
        let x = &values[k];
        let uk = u.get(k);
        let d = p.coefficient(Coefficient::Drift, k, x, uk)?;
        let f = p.coefficient(Coefficient::Left, k, x, uk)?;
        let g = p.coefficient(Coefficient::Right, k, x, uk)?;
        check_adapted(&d, k, "D")?;
        check_adapted(&f, k, "F")?;
        check_adapted(&g, k, "G")?;
        let mut next = x.clone();
        next.axpy(dt, &d);
        next += &times_increment(&(&f + &g.parity()), k);
        values.push(next);
    }
    Ok(Trajectory {
        process: AdaptedProcess::from_values_unchecked(alg, values),
        control: u.clone(),
    })
}

/// Residual of `‖x_{k+1} − x_k − dt·D‖² = dt·‖F + ΥG‖²`, maximized over `k`
/// and relative to `max(1, dt‖F + ΥG‖²)`.
pub fn diffusion_isometry_residual(p: &dyn ControlProblem, traj: &Trajectory) -> Result<f64> {
    let alg = p.algebra();
    let dt = alg.dt();
    let mut worst = 0.0f64;
    for k in 0..alg.n_generators() {
        let x = traj.state(k);
        let uk = traj.control.get(k);
        let d = p.coefficient(Coefficient::Drift, k, x, uk)?;
        let f = p.coefficient(Coefficient::Left, k, x, uk)?;
        let g = p.coefficient(Coefficient::Right, k, x, uk)?;
        let mut inc = traj.state(k + 1) - x;
        inc.axpy(-dt, &d);
        let expected = dt * (&f + &g.parity()).norm_sqr();
        worst = worst.max((inc.norm_sqr() - expected).abs() / expected.max(1.0));
    }
    Ok(worst)
}

/// Linear maps of the discrete dynamics along a reference trajectory.
pub struct Linearization<'a> {
    pub problem: &'a dyn ControlProblem,
    pub reference: &'a Trajectory,
}

impl<'a> Linearization<'a> {
    pub fn new(problem: &'a dyn ControlProblem, reference: &'a Trajectory) -> Self {
        Self { problem, reference }
    }

    fn at(&self, k: usize) -> (&CliffordElement, &[f64]) {
        (self.reference.state(k), self.reference.control.get(k))
    }

    pub fn drift_x(&self, k: usize, h: &CliffordElement) -> Result<CliffordElement> {
        let (x, u) = self.at(k);
        self.problem.coefficient_x(Coefficient::Drift, k, x, u, h)
    }

    /// `F̃_x h = F_x h + Υ(G_x h)`.
    pub fn diffusion_x(&self, k: usize, h: &CliffordElement) -> Result<CliffordElement> {
        let (x, u) = self.at(k);
        let f = self.problem.coefficient_x(Coefficient::Left, k, x, u, h)?;
        let g = self.problem.coefficient_x(Coefficient::Right, k, x, u, h)?;
        Ok(&f + &g.parity())
    }

    pub fn drift_u(&self, k: usize, v: &[f64]) -> Result<CliffordElement> {
        let (x, u) = self.at(k);
        self.problem.coefficient_u(Coefficient::Drift, k, x, u, v)
    }

    /// `F̃_u v = F_u v + Υ(G_u v)`.
    pub fn diffusion_u(&self, k: usize, v: &[f64]) -> Result<CliffordElement> {
        let (x, u) = self.at(k);
        let f = self.problem.coefficient_u(Coefficient::Left, k, x, u, v)?;
        let g = self.problem.coefficient_u(Coefficient::Right, k, x, u, v)?;
        Ok(&f + &g.parity())
    }

    /// `Φ_xx(h,h) + 2Φ_xu(h,v) + Φ_uu(v,v)` for one coefficient map.
    fn second_order(&self, c: Coefficient, k: usize, h: &CliffordElement, v: &[f64]) -> Result<CliffordElement> {
        let (x, u) = self.at(k);
        let p = self.problem;
        let mut out = p.coefficient_xx(c, k, x, u, h, h)?;
        out.axpy(2.0, &p.coefficient_xu(c, k, x, u, h, v)?);
        out += &p.coefficient_uu(c, k, x, u, v, v)?;
        Ok(out)
    }

    pub fn drift_second(&self, k: usize, h: &CliffordElement, v: &[f64]) -> Result<CliffordElement> {
        self.second_order(Coefficient::Drift, k, h, v)
    }

    pub fn diffusion_second(&self, k: usize, h: &CliffordElement, v: &[f64]) -> Result<CliffordElement> {
        let f = self.second_order(Coefficient::Left, k, h, v)?;
        let g = self.second_order(Coefficient::Right, k, h, v)?;
        Ok(&f + &g.parity())
    }

    /// Solves `φ_{j+1} = φ_j + dt(D_x φ_j + μ_j) + (F̃_x φ_j + ν_j)ΔW_{j+1}` from
    /// `φ_start = zeta`. The closure returns `(μ_j, ν_j)` given `j` and `φ_j`;
    /// `None` means no forcing. Entries before `start` are zero.
    pub fn propagate<Forcing>(
        &self,
        start: usize,
        zeta: &CliffordElement,
        mut forcing: Forcing,
    ) -> Result<AdaptedProcess>
    where
        Forcing: FnMut(usize, &CliffordElement) -> Result<Option<(CliffordElement, CliffordElement)>>,
    {
        let alg = self.problem.algebra();
        let n = alg.n_generators();
        let dt = alg.dt();
        check_adapted(zeta, start, "initial value")?;
        let mut values = vec![CliffordElement::zero(alg); start];
        values.push(zeta.clone());
        for j in start..n {
            let phi = &values[j];
            let mut drift = self.drift_x(j, phi)?;
            let mut diffusion = self.diffusion_x(j, phi)?;
            if let Some((mu, nu)) = forcing(j, phi)? {
                check_adapted(&mu, j, "drift forcing")?;
                check_adapted(&nu, j, "diffusion forcing")?;
                drift += &mu;
                diffusion += &nu;
            }
            check_adapted(&drift, j, "linearized drift")?;
            check_adapted(&diffusion, j, "linearized diffusion")?;
            let mut next = phi.clone();
            next.axpy(dt, &drift);
            next += &times_increment(&diffusion, j);
            values.push(next);
        }
        Ok(AdaptedProcess::from_values_unchecked(alg, values))
    }

    pub fn propagate_homogeneous(&self, start: usize, zeta: &CliffordElement) -> Result<AdaptedProcess> {
        self.propagate(start, zeta, |_, _| Ok(None))
    }
}

fn check_variation(p: &dyn ControlProblem, du: &ControlPath) -> Result<()> {
    check_control(p, du)
}

/// First variation `x₁` along `δu`, starting from zero.
pub fn solve_first_variation(p: &dyn ControlProblem, xbar: &Trajectory, du: &ControlPath) -> Result<AdaptedProcess> {
    check_variation(p, du)?;
    let lin = Linearization::new(p, xbar);
    let zero = CliffordElement::zero(p.algebra());
    lin.propagate(0, &zero, |j, _| {
        let v = du.get(j);
        Ok(Some((lin.drift_u(j, v)?, lin.diffusion_u(j, v)?)))
    })
}

/// Second variation `x₂` along `δu`, given the first variation `x1`.
pub fn solve_second_variation(
    p: &dyn ControlProblem,
    xbar: &Trajectory,
    x1: &AdaptedProcess,
    du: &ControlPath,
) -> Result<AdaptedProcess> {
    check_variation(p, du)?;
    let n = p.algebra().n_generators();
    if x1.len() != n + 1 {
        return Err(QsocError::LengthMismatch {
            what: "first variation",
            expected: n + 1,
            actual: x1.len(),
        });
    }
    let lin = Linearization::new(p, xbar);
    let zero = CliffordElement::zero(p.algebra());
    lin.propagate(0, &zero, |j, _| {
        let h = x1.get(j);
        let v = du.get(j);
        Ok(Some((lin.drift_second(j, h, v)?, lin.diffusion_second(j, h, v)?)))
    })
}

/// One row of an ε-sweep.
#[derive(Clone, Debug, Serialize)]
pub struct OrderSample {
    pub eps: f64,
    /// `sup_k ‖δx^ε_k‖`.
    pub first: f64,
    /// `sup_k ‖δx^ε_k − ε x₁_k‖`.
    pub second: f64,
    /// `sup_k ‖δx^ε_k − ε x₁_k − ε²/2 x₂_k‖`.
    pub third: f64,
}

impl OrderSample {
    /// `first/ε, second/ε², third/ε²`.
    pub fn ratios(&self) -> [f64; 3] {
        let e2 = self.eps * self.eps;
        [self.first / self.eps, self.second / e2, self.third / e2]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub samples: Vec<OrderSample>,
    pub slope_first: SlopeEstimate,
    pub slope_second: SlopeEstimate,
    pub slope_third: SlopeEstimate,
}

pub(crate) fn validate_eps(eps_list: &[f64], min_len: usize) -> Result<()> {
    if eps_list.len() < min_len {
        return Err(QsocError::Domain(format!("need at least {min_len} values of ε")));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(QsocError::Domain("ε values must lie in (0, 1]".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(QsocError::Domain("ε values must be strictly decreasing".into()));
    }
    Ok(())
}

/// `ū + ε(u − ū)` for each ε, failing if any leaves the control set.
pub(crate) fn perturbed_controls(
    p: &dyn ControlProblem,
    ubar: &ControlPath,
    du: &ControlPath,
    eps_list: &[f64],
) -> Result<Vec<ControlPath>> {
    eps_list
        .iter()
        .map(|&e| {
            let ue = ubar.combine(1.0, du, e);
            if ue.is_admissible(p.control_set(), ADMISSIBLE_TOL) {
                Ok(ue)
            } else {
                Err(QsocError::Inadmissible(format!("perturbed control at ε = {e}")))
            }
        })
        .collect()
}

/// Sweeps `u^ε = ū + ε(u − ū)` and fits log-log slopes of the three remainders.
pub fn order_estimate_slopes(
    p: &dyn ControlProblem,
    ubar: &ControlPath,
    u: &ControlPath,
    eps_list: &[f64],
) -> Result<OrderReport> {
    validate_eps(eps_list, 4)?;
    check_control(p, u)?;
    let xbar = solve_state(p, ubar)?;
    let du = u.sub(ubar);
    let x1 = solve_first_variation(p, &xbar, &du)?;
    let x2 = solve_second_variation(p, &xbar, &x1, &du)?;
    let controls = perturbed_controls(p, ubar, &du, eps_list)?;

    let samples = eps_list
        .par_iter()
        .zip(controls.par_iter())
        .map(|(&eps, ue)| {
            let xe = solve_state(p, ue)?;
            let (mut first, mut second, mut third) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..xe.process.len() {
                let mut d = xe.state(k) - xbar.state(k);
                first = first.max(d.norm());
                d.axpy(-eps, x1.get(k));
                second = second.max(d.norm());
                d.axpy(-0.5 * eps * eps, x2.get(k));
                third = third.max(d.norm());
            }
            Ok(OrderSample {
                eps,
                first,
                second,
                third,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let col = |f: fn(&OrderSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    Ok(OrderReport {
        slope_first: loglog_slope(eps_list, &col(|s| s.first)),
        slope_second: loglog_slope(eps_list, &col(|s| s.second)),
        slope_third: loglog_slope(eps_list, &col(|s| s.third)),
        samples,
    })
}
