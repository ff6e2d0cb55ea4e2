#![allow(dead_code)]

use std::sync::Arc;

use qsoc::problem::{demo_spec, make_problem, CustomProblem, PolynomialProblem};
use qsoc::{CliffordAlgebra, Coefficient, ControlProblem};

pub fn gallery(alg: &Arc<CliffordAlgebra>, name: &str) -> PolynomialProblem {
    make_problem(alg, &demo_spec(name).unwrap()).unwrap()
}

/// Forwards every callback to `inner`, scaling `D_x` by `1 + drift_error`.
/// The Riesz-type callbacks are left out so the basis fallbacks are exercised.
pub fn wrap(inner: PolynomialProblem, drift_error: f64) -> CustomProblem {
    let alg = inner.algebra().clone();
    let inner = Arc::new(inner);
    let mut c = CustomProblem::new(&alg, inner.control_set().clone(), inner.initial_state().clone()).unwrap();
    let p = inner.clone();
    c.coefficient = Some(Arc::new(move |co, k, x, u| p.coefficient(co, k, x, u).unwrap()));
    let p = inner.clone();
    c.coefficient_x = Some(Arc::new(move |co, k, x, u, h| {
        let d = p.coefficient_x(co, k, x, u, h).unwrap();
        if co == Coefficient::Drift {
            d.scale_re(1.0 + drift_error)
        } else {
            d
        }
    }));
    let p = inner.clone();
    c.coefficient_u = Some(Arc::new(move |co, k, x, u, v| p.coefficient_u(co, k, x, u, v).unwrap()));
    let p = inner.clone();
    c.coefficient_xx = Some(Arc::new(move |co, k, x, u, a, b| {
        p.coefficient_xx(co, k, x, u, a, b).unwrap()
    }));
    let p = inner.clone();
    c.coefficient_xu = Some(Arc::new(move |co, k, x, u, h, v| {
        p.coefficient_xu(co, k, x, u, h, v).unwrap()
    }));
    let p = inner.clone();
    c.coefficient_uu = Some(Arc::new(move |co, k, x, u, a, b| {
        p.coefficient_uu(co, k, x, u, a, b).unwrap()
    }));
    let p = inner.clone();
    c.running_cost = Some(Arc::new(move |k, x, u| p.running_cost(k, x, u).unwrap()));
    let p = inner.clone();
    c.running_cost_x = Some(Arc::new(move |k, x, u| p.running_cost_x(k, x, u).unwrap()));
    let p = inner.clone();
    c.running_cost_u = Some(Arc::new(move |k, x, u| p.running_cost_u(k, x, u).unwrap()));
    let p = inner.clone();
    c.running_cost_xx = Some(Arc::new(move |k, x, u, h| p.running_cost_xx(k, x, u, h).unwrap()));
    let p = inner.clone();
    c.running_cost_xu = Some(Arc::new(move |k, x, u, h| p.running_cost_xu(k, x, u, h).unwrap()));
    let p = inner.clone();
    c.running_cost_uu = Some(Arc::new(move |k, x, u, v| p.running_cost_uu(k, x, u, v).unwrap()));
    let p = inner.clone();
    c.terminal_cost = Some(Arc::new(move |x| p.terminal_cost(x).unwrap()));
    let p = inner.clone();
    c.terminal_cost_x = Some(Arc::new(move |x| p.terminal_cost_x(x).unwrap()));
    let p = inner;
    c.terminal_cost_xx = Some(Arc::new(move |x, h| p.terminal_cost_xx(x, h).unwrap()));
    c
}
