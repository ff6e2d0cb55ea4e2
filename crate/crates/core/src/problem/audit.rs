//! Finite-difference audits of derivative callbacks and sampled checks of the
//! Lipschitz and growth bounds.

use rand::Rng;

use super::{Coefficient, ControlProblem};
use crate::clifford::CliffordElement;
use crate::error::Result;
use crate::sampling::{random_control_vector, random_element};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct AuditEntry {
    pub name: String,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeAudit {
    pub entries: Vec<AuditEntry>,
    pub tol: f64,
}

impl DerivativeAudit {
    pub fn max_error(&self) -> f64 {
        self.entries.iter().map(|e| e.max_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_error <= self.tol)
    }

    pub fn error(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.max_error)
    }
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute difference when both are below `1e-14`.
fn relative(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-14 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

fn flat(x: &CliffordElement) -> Vec<f64> {
    x.coeffs().iter().flat_map(|c| [c.re, c.im]).collect()
}

fn rel_el(a: &CliffordElement, b: &CliffordElement) -> f64 {
    relative(&flat(a), &flat(b))
}

fn central(plus: &CliffordElement, minus: &CliffordElement, t: f64) -> CliffordElement {
    (plus - minus).scale_re(0.5 / t)
}

fn central_vec(plus: &[f64], minus: &[f64], t: f64) -> Vec<f64> {
    plus.iter().zip(minus).map(|(a, b)| (a - b) * 0.5 / t).collect()
}

fn shifted(u: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a + t * b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Tally(Vec<AuditEntry>);

impl Tally {
    fn record(&mut self, name: String, err: f64) {
        match self.0.iter_mut().find(|e| e.name == name) {
            Some(e) => e.max_error = e.max_error.max(err),
            None => self.0.push(AuditEntry { name, max_error: err }),
        }
    }
}

/// Compares every derivative callback with central differences of its parent
/// at `trials` random points `(k, x, u)` and random directions.
pub fn audit_derivatives<R: Rng + ?Sized>(
    p: &dyn ControlProblem,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<DerivativeAudit> {
    let alg = p.algebra().clone();
    let n = alg.n_generators();
    let set = p.control_set();
    let t = FD_STEP;
    let mut tally = Tally(Vec::new());

    for _ in 0..trials.max(1) {
        let k = rng.random_range(0..n);
        let x = random_element(&alg, k, false, rng).scale_re(0.5);
        let u = random_control_vector(set, rng);
        let v = random_control_vector(set, rng);
        let v2 = random_control_vector(set, rng);
        let h = random_element(&alg, k, false, rng);
        let h2 = random_element(&alg, k, false, rng);
        let w = random_element(&alg, k, false, rng);
        let xp = |d: &CliffordElement, s: f64| {
            let mut y = x.clone();
            y.axpy(s, d);
            y
        };
        let up = shifted(&u, &v, t);
        let um = shifted(&u, &v, -t);

        for c in Coefficient::ALL {
            let name = c.name();
            let phi_x = p.coefficient_x(c, k, &x, &u, &h)?;
            let fd = central(
                &p.coefficient(c, k, &xp(&h, t), &u)?,
                &p.coefficient(c, k, &xp(&h, -t), &u)?,
                t,
            );
            tally.record(format!("{name}_x"), rel_el(&phi_x, &fd));

            let adj = p.coefficient_x_adjoint(c, k, &x, &u, &w)?;
            tally.record(
                format!("{name}_x_adjoint"),
                relative(&[w.real_inner(&phi_x)], &[adj.real_inner(&h)]),
            );

            let phi_u = p.coefficient_u(c, k, &x, &u, &v)?;
            let fd = central(&p.coefficient(c, k, &x, &up)?, &p.coefficient(c, k, &x, &um)?, t);
            tally.record(format!("{name}_u"), rel_el(&phi_u, &fd));

            let phi_xx = p.coefficient_xx(c, k, &x, &u, &h, &h2)?;
            let fd = central(
                &p.coefficient_x(c, k, &xp(&h2, t), &u, &h)?,
                &p.coefficient_x(c, k, &xp(&h2, -t), &u, &h)?,
                t,
            );
            tally.record(format!("{name}_xx"), rel_el(&phi_xx, &fd));

            let contract = p.coefficient_xx_contract(c, k, &x, &u, &w, &h)?;
            tally.record(
                format!("{name}_xx_contract"),
                relative(&[w.real_inner(&phi_xx)], &[contract.real_inner(&h2)]),
            );

            let phi_xu = p.coefficient_xu(c, k, &x, &u, &h, &v)?;
            let fd = central(
                &p.coefficient_x(c, k, &x, &up, &h)?,
                &p.coefficient_x(c, k, &x, &um, &h)?,
                t,
            );
            tally.record(format!("{name}_xu"), rel_el(&phi_xu, &fd));

            let phi_uu = p.coefficient_uu(c, k, &x, &u, &v2, &v)?;
            let fd = central(
                &p.coefficient_u(c, k, &x, &up, &v2)?,
                &p.coefficient_u(c, k, &x, &um, &v2)?,
                t,
            );
            tally.record(format!("{name}_uu"), rel_el(&phi_uu, &fd));
        }

        let l_x = p.running_cost_x(k, &x, &u)?;
        let fd = (p.running_cost(k, &xp(&h, t), &u)? - p.running_cost(k, &xp(&h, -t), &u)?) * 0.5 / t;
        tally.record("L_x".into(), relative(&[l_x.real_inner(&h)], &[fd]));

        let l_u = p.running_cost_u(k, &x, &u)?;
        let fd = (p.running_cost(k, &x, &up)? - p.running_cost(k, &x, &um)?) * 0.5 / t;
        tally.record("L_u".into(), relative(&[dot(&l_u, &v)], &[fd]));

        let l_xx = p.running_cost_xx(k, &x, &u, &h)?;
        let fd = central(
            &p.running_cost_x(k, &xp(&h, t), &u)?,
            &p.running_cost_x(k, &xp(&h, -t), &u)?,
            t,
        );
        tally.record("L_xx".into(), rel_el(&l_xx, &fd));

        let l_xu = p.running_cost_xu(k, &x, &u, &h)?;
        let fd = central_vec(
            &[p.running_cost_x(k, &x, &up)?.real_inner(&h)],
            &[p.running_cost_x(k, &x, &um)?.real_inner(&h)],
            t,
        );
        tally.record("L_xu".into(), relative(&[dot(&l_xu, &v)], &fd));

        let l_uu = p.running_cost_uu(k, &x, &u, &v)?;
        let fd = central_vec(&p.running_cost_u(k, &x, &up)?, &p.running_cost_u(k, &x, &um)?, t);
        tally.record("L_uu".into(), relative(&l_uu, &fd));

        let xn = random_element(&alg, n, false, rng).scale_re(0.5);
        let hn = random_element(&alg, n, false, rng);
        let shift = |s: f64| {
            let mut y = xn.clone();
            y.axpy(s, &hn);
            y
        };
        let g_x = p.terminal_cost_x(&xn)?;
        let fd = (p.terminal_cost(&shift(t))? - p.terminal_cost(&shift(-t))?) * 0.5 / t;
        tally.record("g_x".into(), relative(&[g_x.real_inner(&hn)], &[fd]));
        let g_xx = p.terminal_cost_xx(&xn, &hn)?;
        let fd = central(&p.terminal_cost_x(&shift(t))?, &p.terminal_cost_x(&shift(-t))?, t);
        tally.record("g_xx".into(), rel_el(&g_xx, &fd));
    }

    Ok(DerivativeAudit { entries: tally.0, tol })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    pub radius: f64,
    pub declared: Option<f64>,
    /// Largest observed `‖Φ(k,x,u) − Φ(k,x',u)‖ / ‖x − x'‖` over `D, F, G`.
    pub lipschitz: f64,
    /// Largest observed `‖Φ(k,0,u)‖` and `|L(k,0,u)|`.
    pub growth: f64,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.declared
            .is_some_and(|c| self.lipschitz <= c * (1.0 + 1e-12) && self.growth <= c * (1.0 + 1e-12))
    }
}

/// Samples the Lipschitz and growth bounds on the ball of coefficient `ℓ¹`
/// radius `radius` and compares them with the problem's declared constant.
pub fn probe_bounds<R: Rng + ?Sized>(
    p: &dyn ControlProblem,
    radius: f64,
    trials: usize,
    rng: &mut R,
) -> Result<BoundsReport> {
    let alg = p.algebra().clone();
    let n = alg.n_generators();
    let zero = CliffordElement::zero(&alg);
    let in_ball = |k: usize, rng: &mut R| {
        let e = random_element(&alg, k, false, rng);
        let l1: f64 = e.coeffs().iter().map(|c| c.norm()).sum();
        let target = radius * rng.random::<f64>();
        if l1 > 0.0 {
            e.scale_re(target / l1)
        } else {
            e
        }
    };
    let mut lipschitz = 0.0f64;
    let mut growth = 0.0f64;
    for _ in 0..trials {
        let k = rng.random_range(0..n);
        let x = in_ball(k, rng);
        let x2 = in_ball(k, rng);
        let u = random_control_vector(p.control_set(), rng);
        let dist = (&x - &x2).norm();
        for c in Coefficient::ALL {
            if dist > 0.0 {
                let diff = (&p.coefficient(c, k, &x, &u)? - &p.coefficient(c, k, &x2, &u)?).norm();
                lipschitz = lipschitz.max(diff / dist);
            }
            growth = growth.max(p.coefficient(c, k, &zero, &u)?.norm());
        }
        growth = growth.max(p.running_cost(k, &zero, &u)?.abs());
    }
    Ok(BoundsReport {
        radius,
        declared: p.bound_constant(radius),
        lipschitz,
        growth,
    })
}
