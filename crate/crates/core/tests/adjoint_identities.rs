mod common;

use std::sync::Arc;

use common::{gallery, wrap};
use qsoc::adjoint::{
    compute_p, compute_p_backward, first_duality, p_form_by_propagation, second_duality, solve_first_adjoint,
    transposition_check, TestTuple,
};
use qsoc::conditions::Expansion;
use qsoc::forward::solve_state;
use qsoc::problem::{cost, GALLERY_NAMES};
use qsoc::sampling::{random_control_path, random_element, stream_rng};
use qsoc::{CliffordAlgebra, ControlPath, ControlProblem};
use rand::Rng;

fn interior<R: Rng>(p: &dyn ControlProblem, rng: &mut R) -> ControlPath {
    let set = p.control_set();
    let center: Vec<f64> = set
        .lower()
        .iter()
        .zip(set.upper())
        .map(|(l, u)| 0.5 * (l + u))
        .collect();
    let steps = p.algebra().n_generators();
    ControlPath::constant(steps, &center).toward(&random_control_path(set, steps, rng), 0.5)
}

fn total_cost(p: &dyn ControlProblem, u: &ControlPath) -> f64 {
    let x = solve_state(p, u).unwrap();
    cost(p, u, &x.process).unwrap()
}

#[test]
fn first_and_second_duality_hold_on_gallery() {
    let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
    for (i, name) in GALLERY_NAMES.iter().enumerate() {
        let p = gallery(&alg, name);
        let mut rng = stream_rng(20, i as u64);
        let ubar = interior(&p, &mut rng);
        let xbar = solve_state(&p, &ubar).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        for _ in 0..3 {
            let du = interior(&p, &mut rng).sub(&ubar);
            let d1 = first_duality(&p, &xbar, &adj, &du).unwrap();
            let d2 = second_duality(&p, &xbar, &adj, &du).unwrap();
            assert!(d1.rel_residual() < 1e-10, "{name}: {d1:?}");
            assert!(d2.rel_residual() < 1e-10, "{name}: {d2:?}");
        }
    }
}

#[test]
fn second_adjoint_constructions_agree() {
    let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
    let p = gallery(&alg, "polynomial");
    let mut rng = stream_rng(21, 0);
    let ubar = interior(&p, &mut rng);
    let xbar = solve_state(&p, &ubar).unwrap();
    let adj = solve_first_adjoint(&p, &xbar).unwrap();
    let pp = compute_p(&p, &xbar, &adj).unwrap();
    let back = compute_p_backward(&p, &xbar, &adj).unwrap();
    assert_eq!(pp.len(), 5);
    assert!(pp.max_abs_diff(&back) < 1e-11);
    assert!(pp.max_asymmetry() < 1e-12);
    for k in 0..=4 {
        let a = random_element(&alg, k, false, &mut rng);
        let b = random_element(&alg, k, false, &mut rng);
        let direct = p_form_by_propagation(&p, &xbar, &adj, k, &a, &b).unwrap();
        assert!((pp.form(k, &a, &b) - direct).abs() < 1e-11 * direct.abs().max(1.0));
    }
}

#[test]
fn transposition_identity_with_noise_forcing() {
    let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
    for (i, name) in GALLERY_NAMES.iter().enumerate() {
        let p = gallery(&alg, name);
        let mut rng = stream_rng(22, i as u64);
        let ubar = interior(&p, &mut rng);
        let xbar = solve_state(&p, &ubar).unwrap();
        let adj = solve_first_adjoint(&p, &xbar).unwrap();
        let pp = compute_p(&p, &xbar, &adj).unwrap();
        for start in 0..4 {
            let t1 = TestTuple::random(&p, start, true, &mut rng).unwrap();
            let t2 = TestTuple::random(&p, start, true, &mut rng).unwrap();
            assert!(t1.has_noise_forcing());
            let c = transposition_check(&p, &xbar, &adj, &pp, &t1, &t2).unwrap();
            assert!(
                c.residual() < 1e-10 * c.lhs.abs().max(1.0),
                "{name} start {start}: {c:?}"
            );
        }
    }
}

#[test]
fn s_matches_second_difference_of_cost() {
    let alg = CliffordAlgebra::new(4, 0.0, 1.0).unwrap();
    for (i, name) in GALLERY_NAMES.iter().enumerate() {
        let p = gallery(&alg, name);
        let mut rng = stream_rng(23, i as u64);
        let ubar = interior(&p, &mut rng);
        let u = interior(&p, &mut rng);
        let du = u.sub(&ubar);
        let exp = Expansion::second_order(&p, &ubar).unwrap();
        let s = exp.s(&p, &u).unwrap();
        let h = 1e-3;
        let jp = total_cost(&p, &ubar.combine(1.0, &du, h));
        let jm = total_cost(&p, &ubar.combine(1.0, &du, -h));
        let j0 = total_cost(&p, &ubar);
        let second = (jp - 2.0 * j0 + jm) / (h * h);
        assert!(
            (s.value + second).abs() < 1e-5 * second.abs().max(1.0),
            "{name}: S {} vs {second}",
            s.value
        );
        let parts = s.hamiltonian_uu + s.p_quadratic + s.cross + s.q_terms;
        assert!((parts - s.value).abs() < 1e-14 * s.value.abs().max(1.0));
    }
}

#[test]
fn custom_wrapper_reproduces_gallery_results() {
    let alg = CliffordAlgebra::new(3, 0.0, 1.0).unwrap();
    let poly = gallery(&alg, "polynomial");
    let custom = wrap(gallery(&alg, "polynomial"), 0.0);
    let problems: [Arc<dyn ControlProblem>; 2] = [Arc::new(poly), Arc::new(custom)];
    let mut rng = stream_rng(24, 0);
    let ubar = interior(problems[0].as_ref(), &mut rng);
    let u = interior(problems[0].as_ref(), &mut rng);
    let out: Vec<(f64, f64, f64)> = problems
        .iter()
        .map(|p| {
            let exp = Expansion::second_order(p.as_ref(), &ubar).unwrap();
            (
                total_cost(p.as_ref(), &ubar),
                exp.fo(p.as_ref(), &u).unwrap().value,
                exp.s(p.as_ref(), &u).unwrap().value,
            )
        })
        .collect();
    assert_eq!(out[0].0, out[1].0);
    assert!((out[0].1 - out[1].1).abs() < 1e-12);
    assert!((out[0].2 - out[1].2).abs() < 1e-10 * out[0].2.abs().max(1.0));
}
