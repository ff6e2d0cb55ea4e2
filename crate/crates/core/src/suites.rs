//! Verification suites and the run orchestration behind `qsoc run`.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use crate::adjoint::{
    compute_p, compute_p_backward, first_duality, second_duality, solve_first_adjoint, transposition_check, TestTuple,
};
use crate::clifford::laws::{probe_isometry, probe_laws, probe_matrix_oracle};
use crate::clifford::matrix_rep::MAX_ORACLE_GENERATORS;
use crate::clifford::{CliffordAlgebra, SuperOperator};
use crate::conditions::{taylor_consistency, verify_theorem, Expansion, TheoremTolerances};
use crate::config::{eps_range, RunConfig, Suite};
use crate::error::{QsocError, Result};
use crate::forward::{diffusion_isometry_residual, order_estimate_slopes, solve_state};
use crate::numerics::{rel_err, SlopeEstimate};
use crate::optimizer::{brute_force_search, projected_gradient, ControlGrid, OptimizeSettings};
use crate::problem::{cost, ControlPath, ControlProblem, PolynomialProblem};
use crate::report::{Report, Status, SuiteRecord, Table, Timings};
use crate::sampling::{random_control_path, stream_rng};

/// Everything a suite needs.
pub struct SuiteContext<'a> {
    pub cfg: &'a RunConfig,
    pub alg: Arc<CliffordAlgebra>,
    pub problem: PolynomialProblem,
}

impl SuiteContext<'_> {
    fn seed(&self, suite: Suite) -> u64 {
        self.cfg
            .seed
            .wrapping_add((suite as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn rng(&self, suite: Suite) -> rand_chacha::ChaCha8Rng {
        stream_rng(self.seed(suite), u64::MAX)
    }

    fn p(&self) -> &dyn ControlProblem {
        &self.problem
    }

    fn steps(&self) -> usize {
        self.alg.n_generators()
    }

    fn random_control<R: Rng>(&self, rng: &mut R) -> ControlPath {
        random_control_path(self.problem.control_set(), self.steps(), rng)
    }

    /// Random control inside the half-size box around the center.
    fn interior_control<R: Rng>(&self, rng: &mut R) -> ControlPath {
        let set = self.problem.control_set();
        let center: Vec<f64> = if set.is_bounded() {
            set.lower()
                .iter()
                .zip(set.upper())
                .map(|(l, u)| 0.5 * (l + u))
                .collect()
        } else {
            vec![0.0; set.dim()]
        };
        ControlPath::constant(self.steps(), &center).toward(&self.random_control(rng), 0.5)
    }
}

fn slope_metrics(rec: &mut SuiteRecord, name: &str, s: &SlopeEstimate) {
    match s {
        SlopeEstimate::Fitted { slope, .. } => {
            rec.metric(&format!("slope_{name}"), *slope)
                .flag(&format!("exact_{name}"), false);
        }
        SlopeEstimate::Exact => {
            rec.flag(&format!("exact_{name}"), true);
        }
    }
}

fn algebra_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let tol = &ctx.cfg.tolerances;
    let set = &ctx.cfg.settings;
    let mut rec = SuiteRecord::new("algebra");
    let laws = probe_laws(&ctx.alg, set.algebra_probes, ctx.seed(Suite::Algebra))?;
    rec.metric("probes", laws.probes as f64)
        .metric("associativity", laws.associativity)
        .metric("anticommutation", laws.anticommutation)
        .metric("star_involution", laws.star_involution)
        .metric("star_antimultiplicative", laws.star_antimultiplicative)
        .metric("parity_automorphism", laws.parity_automorphism)
        .metric("trace_property", laws.trace_property)
        .metric("positivity", laws.positivity)
        .metric("orthonormality", laws.orthonormality)
        .metric("max_residual", laws.max());
    let mut ok = laws.max() <= tol.algebra;
    if ctx.steps() <= MAX_ORACLE_GENERATORS {
        let oracle = probe_matrix_oracle(&ctx.alg, set.oracle_probes, ctx.seed(Suite::Algebra) ^ 1)?;
        rec.metric("oracle_residual", oracle);
        ok &= oracle <= tol.oracle;
    }
    rec.status = Status::from_bool(ok);
    Ok(rec)
}

fn isometry_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let mut rec = SuiteRecord::new("isometry");
    let r = probe_isometry(&ctx.alg, ctx.cfg.settings.isometry_probes, ctx.seed(Suite::Isometry))?;
    let mut rng = ctx.rng(Suite::Isometry);
    let traj = solve_state(ctx.p(), &ctx.random_control(&mut rng))?;
    let forward = diffusion_isometry_residual(ctx.p(), &traj)?;
    rec.metric("probes", r.probes as f64)
        .metric("left", r.left)
        .metric("right", r.right)
        .metric("two_sided", r.two_sided)
        .metric("parity_reduction", r.parity_reduction)
        .metric("forward_step", forward);
    rec.status = Status::from_bool(r.max().max(forward) <= ctx.cfg.tolerances.isometry);
    Ok(rec)
}

fn orders_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let mut rec = SuiteRecord::new("orders");
    let mut rng = ctx.rng(Suite::Orders);
    let ubar = ctx.random_control(&mut rng);
    let u = ctx.random_control(&mut rng);
    let eps = eps_range(ctx.cfg.settings.orders_exponents);
    let r = order_estimate_slopes(ctx.p(), &ubar, &u, &eps)?;
    slope_metrics(&mut rec, "first", &r.slope_first);
    slope_metrics(&mut rec, "second", &r.slope_second);
    slope_metrics(&mut rec, "third", &r.slope_third);
    let mut t = Table::new("errors", &["eps", "first", "second", "third"]);
    for s in &r.samples {
        t.push(&[s.eps, s.first, s.second, s.third]);
    }
    rec.tables.push(t);
    rec.status = Status::from_bool(
        r.slope_first.within(0.9, 1.1) && r.slope_second.within(1.8, 2.2) && r.slope_third.at_least(2.5),
    );
    Ok(rec)
}

fn gradient_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let mut rec = SuiteRecord::new("gradient");
    let mut rng = ctx.rng(Suite::Gradient);
    let p = ctx.p();
    let ubar = ctx.interior_control(&mut rng);
    let exp = Expansion::first_order(p, &ubar)?;
    let h = ctx.cfg.settings.fd_step;
    let j = |u: &ControlPath| -> Result<f64> { cost(p, u, &solve_state(p, u)?.process) };
    let mut t = Table::new("directions", &["index", "adjoint", "finite_difference", "rel_err"]);
    let mut worst = 0.0f64;
    for i in 0..ctx.cfg.settings.adjoint_directions.max(1) {
        let du = ctx.random_control(&mut rng);
        let dj = -exp.fo(p, &ubar.combine(1.0, &du, 1.0))?.value;
        let fd = (j(&ubar.combine(1.0, &du, h))? - j(&ubar.combine(1.0, &du, -h))?) / (2.0 * h);
        let e = rel_err(fd, dj, 1e-12);
        worst = worst.max(e);
        t.push(&[i as f64, dj, fd, e]);
    }
    rec.metric("max_rel_err", worst);
    rec.tables.push(t);
    rec.status = Status::from_bool(worst <= ctx.cfg.tolerances.gradient);
    Ok(rec)
}

fn adjoint_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let tol = &ctx.cfg.tolerances;
    let mut rec = SuiteRecord::new("adjoint");
    let mut rng = ctx.rng(Suite::Adjoint);
    let p = ctx.p();
    let ubar = ctx.random_control(&mut rng);
    let xbar = solve_state(p, &ubar)?;
    let adj = solve_first_adjoint(p, &xbar)?;

    let (mut first, mut second) = (0.0f64, 0.0f64);
    for _ in 0..ctx.cfg.settings.adjoint_directions.max(1) {
        let du = ctx.random_control(&mut rng);
        first = first.max(first_duality(p, &xbar, &adj, &du)?.rel_residual());
        second = second.max(second_duality(p, &xbar, &adj, &du)?.rel_residual());
    }

    let pp = compute_p(p, &xbar, &adj)?;
    let backward = compute_p_backward(p, &xbar, &adj)?;
    let n = ctx.steps();
    let neg_gxx = SuperOperator::try_from_fn(&ctx.alg, n, |h| {
        Ok::<_, QsocError>(-&p.terminal_cost_xx(xbar.terminal(), h)?)
    })?;
    let terminal = pp.terminal().max_abs_diff(&neg_gxx);
    let scale = (0..=n).map(|k| pp.get(k).matrix().amax()).fold(1.0, f64::max);
    let recursion = pp.max_abs_diff(&backward) / scale;

    let (mut trans, mut trans_noise, mut q_part) = (0.0f64, 0.0f64, 0.0f64);
    let mut t = Table::new("transposition", &["pair", "start", "lhs", "rhs", "residual"]);
    for i in 0..ctx.cfg.settings.transposition_pairs {
        let k = rng.random_range(0..=n);
        let a = TestTuple::random(p, k, false, &mut rng)?;
        let b = TestTuple::random(p, k, false, &mut rng)?;
        let c = transposition_check(p, &xbar, &adj, &pp, &a, &b)?;
        trans = trans.max(c.residual());
        t.push(&[i as f64, k as f64, c.lhs, c.rhs, c.residual()]);
        let a = TestTuple::random(p, k, true, &mut rng)?;
        let b = TestTuple::random(p, k, true, &mut rng)?;
        let c = transposition_check(p, &xbar, &adj, &pp, &a, &b)?;
        trans_noise = trans_noise.max(c.residual());
        q_part = q_part.max(c.q_part.abs());
    }
    rec.tables.push(t);

    let mut ok = first <= tol.duality && second <= tol.duality;
    ok &= terminal == 0.0 && recursion <= tol.transposition;
    ok &= trans <= tol.transposition && trans_noise <= tol.transposition;
    rec.metric("first_duality", first)
        .metric("second_duality", second)
        .metric("terminal_p_residual", terminal)
        .metric("recursion_residual", recursion)
        .metric("p_asymmetry", pp.max_asymmetry())
        .metric("transposition_residual", trans)
        .metric("transposition_residual_with_noise", trans_noise)
        .metric("max_q_part", q_part);

    if ctx.problem.has_zero_dynamics() && ctx.cfg.problem.s == 0.0 {
        let q = ctx.cfg.problem.q;
        let closed = (0..=n)
            .map(|k| {
                let expected =
                    SuperOperator::identity(&ctx.alg, k).scale(-2.0 * q * (ctx.alg.t_end() - ctx.alg.time(k)));
                pp.get(k).max_abs_diff(&expected)
            })
            .fold(0.0, f64::max);
        rec.metric("closed_form_residual", closed);
        ok &= closed <= tol.closed_form;
    }
    rec.status = Status::from_bool(ok);
    Ok(rec)
}

fn second_order_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let mut rec = SuiteRecord::new("second_order");
    let mut rng = ctx.rng(Suite::SecondOrder);
    let ubar = ctx.random_control(&mut rng);
    let u = ctx.random_control(&mut rng);
    let r = taylor_consistency(ctx.p(), &ubar, &u, &eps_range(ctx.cfg.settings.taylor_exponents))?;
    let exp = Expansion::second_order(ctx.p(), &ubar)?;
    let fo = exp.fo(ctx.p(), &u)?;
    let s = exp.s(ctx.p(), &u)?;
    rec.metric("fo", r.fo)
        .metric("fo_imag", fo.imag)
        .metric("s", r.s)
        .metric("s_imag", s.imag)
        .metric("s_hamiltonian_uu", s.hamiltonian_uu)
        .metric("s_p_quadratic", s.p_quadratic)
        .metric("s_cross", s.cross)
        .metric("s_q_terms", s.q_terms)
        .metric("fit_linear", r.fit_linear)
        .metric("fit_quadratic", r.fit_quadratic)
        .metric("fit_residual", r.fit_residual)
        .metric("linear_extrapolated", r.linear_extrapolated)
        .metric("s_extrapolated", r.s_extrapolated)
        .metric("fo_rel_err", r.fo_rel_err)
        .metric("s_rel_err", r.s_rel_err);
    let mut t = Table::new("taylor", &["eps", "delta_j", "s_estimate"]);
    for row in &r.rows {
        t.push(&[row.eps, row.delta_j, row.s_estimate]);
    }
    rec.tables.push(t);
    rec.status = Status::from_bool(r.passed(ctx.cfg.tolerances.taylor));
    Ok(rec)
}

fn theorem_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let tol = &ctx.cfg.tolerances;
    let mut rec = SuiteRecord::new("theorem");
    let points = ctx.cfg.settings.grid_points;
    let best = brute_force_search(ctx.p(), points)?;
    let candidates = ControlGrid::new(ctx.p(), points)?.controls()?;
    let report = verify_theorem(
        ctx.p(),
        &best.control,
        &candidates,
        TheoremTolerances {
            fo_tol: tol.theorem_fo,
            s_tol: tol.theorem_s,
        },
    )?;
    let mut t = Table::new("candidates", &["index", "fo", "s", "gated"]);
    for c in &report.candidates {
        t.push(&[c.index as f64, c.fo, c.s, if c.gated { 1.0 } else { 0.0 }]);
    }
    let max_gated_s = report
        .candidates
        .iter()
        .filter(|c| c.gated)
        .map(|c| c.s)
        .fold(f64::NEG_INFINITY, f64::max);
    rec.metric("optimal_cost", best.cost)
        .metric("evaluations", best.evaluations as f64)
        .metric("candidates", report.candidates.len() as f64)
        .metric("gated", report.gated as f64)
        .metric("first_order_violations", report.first_order_violations.len() as f64)
        .metric("second_order_violations", report.second_order_violations.len() as f64)
        .metric("max_gated_s", max_gated_s);
    let mut u = Table::new("optimal_control", &["step", "component", "value"]);
    for (k, v) in best.control.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            u.push(&[k as f64, i as f64, *x]);
        }
    }
    rec.tables.push(t);
    rec.tables.push(u);
    // grid optima need not be stationary, so the sign of FO is reported but not gated on
    rec.status = Status::from_bool(report.second_order_passed());
    Ok(rec)
}

fn optimize_suite(ctx: &SuiteContext) -> Result<SuiteRecord> {
    let mut rec = SuiteRecord::new("optimize");
    let set = &ctx.cfg.settings;
    let u0 = ControlPath::zeros(ctx.steps(), ctx.problem.control_set().dim());
    let res = projected_gradient(
        ctx.p(),
        &u0,
        &OptimizeSettings {
            step: set.optimize_step,
            max_iter: set.optimize_max_iter,
            grad_tol: ctx.cfg.tolerances.optimize,
        },
    )?;
    let monotone = res.cost_trace.windows(2).all(|w| w[1] <= w[0]);
    rec.metric("initial_cost", res.cost_trace[0])
        .metric("final_cost", res.cost)
        .metric("iterations", res.iterations as f64)
        .metric("halvings", res.halvings as f64)
        .metric("final_step", res.final_step)
        .flag("converged", res.converged)
        .flag("monotone", monotone);
    let mut t = Table::new("trace", &["iteration", "cost"]);
    for (i, j) in res.cost_trace.iter().enumerate() {
        t.push(&[i as f64, *j]);
    }
    rec.tables.push(t);
    rec.status = Status::from_bool(res.converged && monotone);
    Ok(rec)
}

pub fn run_suite(ctx: &SuiteContext, suite: Suite) -> Result<SuiteRecord> {
    match suite {
        Suite::Algebra => algebra_suite(ctx),
        Suite::Isometry => isometry_suite(ctx),
        Suite::Orders => orders_suite(ctx),
        Suite::Gradient => gradient_suite(ctx),
        Suite::Adjoint => adjoint_suite(ctx),
        Suite::SecondOrder => second_order_suite(ctx),
        Suite::Theorem => theorem_suite(ctx),
        Suite::Optimize => optimize_suite(ctx),
    }
}

/// Runs the requested suites in their fixed order. Nothing is written here.
pub fn run_config(cfg: &RunConfig) -> Result<(Report, Timings)> {
    cfg.validate()?;
    let alg = cfg.algebra()?;
    let problem = cfg.problem(&alg)?;
    let ctx = SuiteContext { cfg, alg, problem };
    let start = Instant::now();
    let mut timings = Timings {
        threads: rayon::current_num_threads(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for suite in cfg.ordered_suites() {
        let t = Instant::now();
        records.push(run_suite(&ctx, suite)?);
        timings
            .suites
            .insert(suite.name().to_owned(), t.elapsed().as_secs_f64());
    }
    timings.total = start.elapsed().as_secs_f64();
    Ok((Report::new(cfg.clone(), records), timings))
}

/// [`run_config`] inside a dedicated pool; `None` uses the global pool.
pub fn run_config_with_threads(cfg: &RunConfig, threads: Option<usize>) -> Result<(Report, Timings)> {
    match threads {
        None => run_config(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| QsocError::Domain(format!("thread pool: {e}")))?
            .install(|| run_config(cfg)),
    }
}
