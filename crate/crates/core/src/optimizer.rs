//! Projected-gradient descent on the discrete cost and exhaustive grid search
//! on small instances.

use rayon::prelude::*;
use serde::Serialize;

use crate::adjoint::solve_first_adjoint;
use crate::error::{QsocError, Result};
use crate::forward::{check_control, solve_state};
use crate::problem::{cost, hamiltonian_u, ControlPath, ControlProblem};

/// Step halvings tried before a step is abandoned.
pub const MAX_HALVINGS: usize = 20;

/// Largest number of cost evaluations in a grid search.
pub const BRUTE_FORCE_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeSettings {
    pub step: f64,
    pub max_iter: usize,
    /// Stop when the `L²(dt)` norm of the projected gradient step falls below this.
    pub grad_tol: f64,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iter: 200,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeResult {
    pub control: ControlPath,
    pub cost: f64,
    /// Cost before the first iteration and after each accepted step.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Total number of halvings.
    pub halvings: usize,
    pub final_step: f64,
}

/// `ℍ_u` along the trajectory of `u`, with the cost at `u`.
/// Since `dJ(u; δu) = −Σ dt·ℍ_u·δu`, `ℍ_u` is the descent direction.
pub fn descent_direction(p: &dyn ControlProblem, u: &ControlPath) -> Result<(ControlPath, f64)> {
    let traj = solve_state(p, u)?;
    let j = cost(p, u, &traj.process)?;
    let adj = solve_first_adjoint(p, &traj)?;
    let rows = (0..u.steps())
        .map(|k| {
            let (yc, yy) = adj.at(k);
            hamiltonian_u(p, k, traj.state(k), u.get(k), yc, yy)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ControlPath::new(rows)?, j))
}

fn evaluate(p: &dyn ControlProblem, u: &ControlPath) -> Result<f64> {
    let traj = solve_state(p, u)?;
    cost(p, u, &traj.process)
}

/// Iterates `u ← Π(u + τ·ℍ_u)`, halving `τ` while the cost does not decrease.
pub fn projected_gradient(
    p: &dyn ControlProblem,
    u0: &ControlPath,
    settings: &OptimizeSettings,
) -> Result<OptimizeResult> {
    check_control(p, u0)?;
    if !(settings.step > 0.0 && settings.step.is_finite()) {
        return Err(QsocError::StepSize(format!(
            "initial step {} must be positive",
            settings.step
        )));
    }
    let set = p.control_set();
    let dt = p.algebra().dt();
    let mut u = u0.project(set);
    let mut step = settings.step;
    let mut halvings = 0;
    let (mut dir, mut j) = descent_direction(p, &u)?;
    if !j.is_finite() {
        return Err(QsocError::StepSize("cost is not finite at the initial control".into()));
    }
    let mut trace = vec![j];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iter {
        let stationarity = u.combine(1.0, &dir, 1.0).project(set).sub(&u).norm_l2(dt);
        if stationarity <= settings.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut last_finite = false;
        for attempt in 0..=MAX_HALVINGS {
            if attempt > 0 {
                step *= 0.5;
                halvings += 1;
            }
            let cand = u.combine(1.0, &dir, step).project(set);
            let jc = evaluate(p, &cand)?;
            last_finite = jc.is_finite();
            if last_finite && jc < j {
                accepted = Some((cand, jc));
                break;
            }
        }
        match accepted {
            Some((cand, jc)) => {
                u = cand;
                j = jc;
                trace.push(j);
                iterations += 1;
                let (d, _) = descent_direction(p, &u)?;
                dir = d;
            }
            None if !last_finite => {
                return Err(QsocError::StepSize(format!(
                    "cost stayed non-finite after {MAX_HALVINGS} halvings"
                )))
            }
            // no decrease at any step size: stationary to working precision
            None => {
                converged = true;
                break;
            }
        }
    }
    Ok(OptimizeResult {
        control: u,
        cost: j,
        cost_trace: trace,
        iterations,
        converged,
        halvings,
        final_step: step,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSearchResult {
    pub control: ControlPath,
    pub cost: f64,
    pub evaluations: u64,
}

/// Points `lower + i·(upper − lower)/(n − 1)`; the midpoint when `n = 1`.
pub fn grid_axis(lower: f64, upper: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lower + upper)];
    }
    (0..n)
        .map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Enumerates piecewise-constant controls with values on a uniform grid of
/// `points` values per component, in lexicographic order.
pub struct ControlGrid {
    axes: Vec<Vec<f64>>,
    m: usize,
    slots: usize,
    points: u64,
    total: u64,
}

impl ControlGrid {
    pub fn new(p: &dyn ControlProblem, points: usize) -> Result<Self> {
        let set = p.control_set();
        if !set.is_bounded() {
            return Err(QsocError::Domain("grid search needs a bounded control set".into()));
        }
        if points == 0 {
            return Err(QsocError::Domain("grid needs at least one point".into()));
        }
        let m = set.dim();
        let slots = p.algebra().n_generators() * m;
        let total = (points as u64)
            .checked_pow(slots as u32)
            .filter(|t| *t <= BRUTE_FORCE_BUDGET)
            .ok_or_else(|| {
                QsocError::Capacity(format!(
                    "{points}^{slots} grid controls exceed the budget of {BRUTE_FORCE_BUDGET}"
                ))
            })?;
        Ok(Self {
            axes: (0..m)
                .map(|i| grid_axis(set.lower()[i], set.upper()[i], points))
                .collect(),
            m,
            slots,
            points: points as u64,
            total,
        })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Digit 0 (most significant) is step 0, component 0.
    pub fn control(&self, mut idx: u64) -> Result<ControlPath> {
        let mut flat = vec![0.0; self.slots];
        for s in (0..self.slots).rev() {
            flat[s] = self.axes[s % self.m][(idx % self.points) as usize];
            idx /= self.points;
        }
        ControlPath::new(flat.chunks(self.m).map(<[f64]>::to_vec).collect())
    }

    pub fn controls(&self) -> Result<Vec<ControlPath>> {
        (0..self.total).map(|i| self.control(i)).collect()
    }
}

/// Minimizes the cost over the control grid. Ties go to the lexicographically
/// smallest control.
pub fn brute_force_search(p: &dyn ControlProblem, points: usize) -> Result<GridSearchResult> {
    let grid = ControlGrid::new(p, points)?;
    let (best_cost, best_idx) = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let j = evaluate(p, &grid.control(idx)?)?;
            Ok::<_, QsocError>((if j.is_finite() { j } else { f64::INFINITY }, idx))
        })
        .try_reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;
    if best_idx == u64::MAX {
        return Err(QsocError::Domain("no grid control has a finite cost".into()));
    }
    Ok(GridSearchResult {
        control: grid.control(best_idx)?,
        cost: best_cost,
        evaluations: grid.len(),
    })
}
