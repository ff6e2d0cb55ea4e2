//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use qsoc::adjoint::{compute_p, first_duality, solve_first_adjoint, transposition_check, TestTuple};
use qsoc::clifford::laws::{probe_isometry, probe_laws, probe_matrix_oracle};
use qsoc::conditions::{taylor_consistency, verify_theorem, Expansion, TheoremTolerances};
use qsoc::config::{eps_range, RunConfig, Suite};
use qsoc::forward::{order_estimate_slopes, solve_state};
use qsoc::numerics::rel_err;
use qsoc::optimizer::{brute_force_search, ControlGrid};
use qsoc::problem::{cost, demo_spec, make_problem, PolynomialProblem, ProblemSpec, GALLERY_NAMES};
use qsoc::sampling::{random_control_path, stream_rng};
use qsoc::suites::run_config_with_threads;
use qsoc::{CliffordAlgebra, ControlPath, ControlProblem, Result, SuperOperator};

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn gallery(alg: &Arc<CliffordAlgebra>, name: &str) -> PolynomialProblem {
    make_problem(alg, &demo_spec(name).expect("gallery name")).expect("demo spec builds")
}

fn within(elapsed: Duration, limit: u64) -> bool {
    elapsed.as_secs_f64() < limit as f64
}

fn algebra_laws() -> Result<Outcome> {
    let start = Instant::now();
    let alg = CliffordAlgebra::new(8, 0.0, 1.0)?;
    let laws = probe_laws(&alg, 10_000, 1)?;
    let mut oracle = 0.0f64;
    for n in 1..=6 {
        oracle = oracle.max(probe_matrix_oracle(&CliffordAlgebra::new(n, 0.0, 1.0)?, 200, n as u64)?);
    }
    let elapsed = start.elapsed();
    Ok(Outcome {
        pass: laws.max() <= 1e-10 && oracle <= 1e-12 && within(elapsed, 30),
        detail: format!(
            "{} probes at N=8, max law residual {:.2e}; oracle residual {:.2e} for N<=6; {:.1}s",
            laws.probes,
            laws.max(),
            oracle,
            elapsed.as_secs_f64()
        ),
    })
}

fn isometry() -> Result<Outcome> {
    let alg = CliffordAlgebra::new(10, 0.0, 1.0)?;
    let r = probe_isometry(&alg, 1000, 2)?;
    Ok(Outcome {
        pass: r.max() <= 1e-10,
        detail: format!(
            "{} integrands at N=10: left {:.2e}, right {:.2e}, two-sided {:.2e}, parity reduction {:.2e}",
            r.probes, r.left, r.right, r.two_sided, r.parity_reduction
        ),
    })
}

fn variation_orders() -> Result<Outcome> {
    let start = Instant::now();
    let alg = CliffordAlgebra::new(6, 0.0, 1.0)?;
    let eps = eps_range((3, 9));
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["lq", "quadratic_state"] {
        let p = gallery(&alg, name);
        let mut rng = stream_rng(3, 0);
        let ubar = random_control_path(p.control_set(), 6, &mut rng);
        let u = random_control_path(p.control_set(), 6, &mut rng);
        let r = order_estimate_slopes(&p, &ubar, &u, &eps)?;
        pass &= r.slope_first.within(0.9, 1.1) && r.slope_second.within(1.8, 2.2) && r.slope_third.at_least(2.5);
        let show = |s: &qsoc::numerics::SlopeEstimate| s.slope().map_or("exact".to_owned(), |v| format!("{v:.3}"));
        parts.push(format!(
            "{name}: {}/{}/{}",
            show(&r.slope_first),
            show(&r.slope_second),
            show(&r.slope_third)
        ));
    }
    let elapsed = start.elapsed();
    Ok(Outcome {
        pass: pass && within(elapsed, 60),
        detail: format!("slopes {}; {:.1}s", parts.join(", "), elapsed.as_secs_f64()),
    })
}

fn first_order_duality() -> Result<Outcome> {
    let alg = CliffordAlgebra::new(6, 0.0, 1.0)?;
    let (mut duality, mut gradient) = (0.0f64, 0.0f64);
    for (i, name) in GALLERY_NAMES.iter().enumerate() {
        let p = gallery(&alg, name);
        let mut rng = stream_rng(4, i as u64);
        let center = ControlPath::zeros(6, 1);
        let ubar = center.toward(&random_control_path(p.control_set(), 6, &mut rng), 0.5);
        let xbar = solve_state(&p, &ubar)?;
        let adj = solve_first_adjoint(&p, &xbar)?;
        let exp = Expansion::first_order(&p, &ubar)?;
        for _ in 0..5 {
            let du = random_control_path(p.control_set(), 6, &mut rng);
            duality = duality.max(first_duality(&p, &xbar, &adj, &du)?.rel_residual());
            let h = 1e-4;
            let j = |u: &ControlPath| -> Result<f64> { cost(&p, u, &solve_state(&p, u)?.process) };
            let fd = (j(&ubar.combine(1.0, &du, h))? - j(&ubar.combine(1.0, &du, -h))?) / (2.0 * h);
            let adjoint = -exp.fo(&p, &ubar.combine(1.0, &du, 1.0))?.value;
            gradient = gradient.max(rel_err(fd, adjoint, 1e-12));
        }
    }
    Ok(Outcome {
        pass: duality <= 1e-10 && gradient <= 1e-6,
        detail: format!("duality residual {duality:.2e}, adjoint vs finite difference {gradient:.2e}"),
    })
}

fn transposition() -> Result<Outcome> {
    let alg = CliffordAlgebra::new(5, 0.0, 1.0)?;
    let mut residual = 0.0f64;
    let mut terminal = 0.0f64;
    for (i, name) in GALLERY_NAMES.iter().enumerate() {
        let p = gallery(&alg, name);
        let mut rng = stream_rng(5, i as u64);
        let ubar = random_control_path(p.control_set(), 5, &mut rng);
        let xbar = solve_state(&p, &ubar)?;
        let adj = solve_first_adjoint(&p, &xbar)?;
        let pp = compute_p(&p, &xbar, &adj)?;
        let neg_gxx = SuperOperator::try_from_fn(&alg, 5, |h| {
            Ok::<_, qsoc::QsocError>(-&p.terminal_cost_xx(xbar.terminal(), h)?)
        })?;
        terminal = terminal.max(pp.terminal().max_abs_diff(&neg_gxx));
        for pair in 0..100 {
            let k = pair % 6;
            let a = TestTuple::random(&p, k, false, &mut rng)?;
            let b = TestTuple::random(&p, k, false, &mut rng)?;
            residual = residual.max(transposition_check(&p, &xbar, &adj, &pp, &a, &b)?.residual());
        }
    }

    let q = 0.75;
    let mut spec = ProblemSpec::named("free", 1);
    spec.q = q;
    let p = make_problem(&alg, &spec)?;
    let xbar = solve_state(&p, &ControlPath::zeros(5, 1))?;
    let pp = compute_p(&p, &xbar, &solve_first_adjoint(&p, &xbar)?)?;
    let closed = (0..=5)
        .map(|k| {
            let expected = SuperOperator::identity(&alg, k).scale(-2.0 * q * (alg.t_end() - alg.time(k)));
            pp.get(k).max_abs_diff(&expected)
        })
        .fold(0.0, f64::max);
    Ok(Outcome {
        pass: residual <= 1e-9 && terminal == 0.0 && closed <= 1e-10,
        detail: format!(
            "transposition residual {residual:.2e} over 500 pairs; terminal P vs -g_xx {terminal:.1e}; closed form {closed:.2e}"
        ),
    })
}

fn taylor_chain() -> Result<Outcome> {
    let alg = CliffordAlgebra::new(6, 0.0, 1.0)?;
    let eps = eps_range((4, 8));
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, name) in ["lq", "quadratic_control"].iter().enumerate() {
        let p = gallery(&alg, name);
        let mut rng = stream_rng(6, i as u64);
        let ubar = random_control_path(p.control_set(), 6, &mut rng);
        let u = random_control_path(p.control_set(), 6, &mut rng);
        let r = taylor_consistency(&p, &ubar, &u, &eps)?;
        pass &= r.s_rel_err <= 1e-3;
        parts.push(format!("{name}: S = {:.6e}, relative error {:.2e}", r.s, r.s_rel_err));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn theorem() -> Result<Outcome> {
    let start = Instant::now();
    let alg = CliffordAlgebra::new(3, 0.0, 1.0)?;
    let mut spec = demo_spec("lq")?;
    spec.q = 0.0;
    spec.x_tgt = Vec::new();
    let unforced = make_problem(&alg, &spec)?;
    let target = solve_state(&unforced, &ControlPath::zeros(3, 1))?;
    spec.x_tgt = target.terminal().terms().map(|(mask, c)| (mask, c.re, c.im)).collect();
    let p = make_problem(&alg, &spec)?;
    let best = brute_force_search(&p, 5)?;
    let candidates = ControlGrid::new(&p, 5)?.controls()?;
    let report = verify_theorem(
        &p,
        &best.control,
        &candidates,
        TheoremTolerances {
            fo_tol: 1e-8,
            s_tol: 1e-6,
        },
    )?;
    let gated_ok = report.candidates.iter().filter(|c| c.gated).all(|c| c.s <= 1e-6);

    let r = 0.7;
    let mut spec = ProblemSpec::named("free", 1);
    spec.r = r;
    let free = make_problem(&alg, &spec)?;
    let ubar = ControlPath::zeros(3, 1);
    let exp = Expansion::second_order(&free, &ubar)?;
    let mut analytic = 0.0f64;
    let mut nonpositive = true;
    for u in &candidates {
        let s = exp.s(&free, u)?.value;
        let expected = -2.0 * r * u.sub(&ubar).norm_l2(alg.dt()).powi(2);
        analytic = analytic.max((s - expected).abs());
        nonpositive &= s <= 0.0;
    }
    let elapsed = start.elapsed();
    Ok(Outcome {
        pass: best.control == ubar && gated_ok && report.gated > 0 && analytic <= 1e-10 && nonpositive && within(elapsed, 120),
        detail: format!(
            "grid optimum cost {:.2e}, {} of {} candidates gated, max gated S {:.3e}; analytic S error {analytic:.2e}; {:.1}s",
            best.cost,
            report.gated,
            report.candidates.len(),
            report.candidates.iter().filter(|c| c.gated).map(|c| c.s).fold(f64::NEG_INFINITY, f64::max),
            elapsed.as_secs_f64()
        ),
    })
}

fn determinism() -> Result<Outcome> {
    let mut cfg: RunConfig = RunConfig::from_json(
        r#"{"problem": {"name": "lq", "m": 1}, "grid": {"T": 1.0, "N": 3}, "suites": ["algebra"]}"#,
    )?;
    cfg.problem = demo_spec("quadratic_control")?;
    cfg.suites = Suite::ALL.to_vec();
    cfg.settings.algebra_probes = 200;
    cfg.settings.isometry_probes = 200;
    cfg.settings.transposition_pairs = 20;
    cfg.seed = 8;
    let (a, _) = run_config_with_threads(&cfg, Some(1))?;
    let (b, _) = run_config_with_threads(&cfg, Some(8))?;
    let (c, _) = run_config_with_threads(&cfg, Some(8))?;
    let (ja, jb, jc) = (a.to_json()?, b.to_json()?, c.to_json()?);
    Ok(Outcome {
        pass: ja == jb && jb == jc,
        detail: format!(
            "{} suites, {} bytes, threads 1 vs 8 identical: {}, repeat identical: {}",
            a.suites.len(),
            ja.len(),
            ja == jb,
            jb == jc
        ),
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("algebra laws and matrix oracle", algebra_laws),
        ("Brownian isometries and parity reduction", isometry),
        ("variation remainder exponents", variation_orders),
        ("first-order duality and adjoint gradient", first_order_duality),
        ("transposition identity and second adjoint", transposition),
        ("second-order Taylor chain", taylor_chain),
        ("second-order necessary condition", theorem),
        ("determinism across thread counts", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (status, detail) = match run() {
            Ok(o) => (if o.pass { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {}: {status} [{name}] {detail}", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
