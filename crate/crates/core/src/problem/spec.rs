use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Coefficient, CoefficientTerms, ControlSet, PolynomialProblem};
use crate::clifford::{CliffordAlgebra, CliffordElement};
use crate::error::{QsocError, Result};

/// Sparse element written as `[[mask, re, im], ...]`.
pub type BladeList = Vec<(usize, f64, f64)>;

pub const GALLERY_NAMES: [&str; 5] = ["free", "lq", "quadratic_control", "quadratic_state", "polynomial"];

/// One value per coefficient map.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSpec<T> {
    pub drift: T,
    pub left: T,
    pub right: T,
}

impl<T> CoefficientSpec<T> {
    fn get(&self, c: Coefficient) -> &T {
        match c {
            Coefficient::Drift => &self.drift,
            Coefficient::Left => &self.left,
            Coefficient::Right => &self.right,
        }
    }
}

/// Gallery problem description.
///
/// `D = a·x + Σ uᵢ bᵢ (+ Σ uᵢ² cᵢ + κ x x + Σ uᵢ eᵢ x)`, and likewise `F` with
/// `f0, f` and `G` with `g0, g`. Which optional families are allowed depends
/// on `name`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub m: usize,
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub f0: f64,
    #[serde(default)]
    pub g0: f64,
    #[serde(default)]
    pub b: Vec<BladeList>,
    #[serde(default)]
    pub f: Vec<BladeList>,
    #[serde(default)]
    pub g: Vec<BladeList>,
    /// Squared-control elements.
    #[serde(default)]
    pub c: CoefficientSpec<Vec<BladeList>>,
    /// State-quadratic elements.
    #[serde(default)]
    pub kappa: CoefficientSpec<Option<BladeList>>,
    /// Control-state bilinear elements.
    #[serde(default)]
    pub e: CoefficientSpec<Vec<BladeList>>,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub x_tgt: BladeList,
    #[serde(default)]
    pub eta: BladeList,
    /// Defaults to the identity.
    #[serde(default)]
    pub x0: Option<BladeList>,
}

impl ProblemSpec {
    /// A spec with the given name and control dimension, bounds `[-1, 1]` and everything else zero.
    pub fn named(name: &str, m: usize) -> Self {
        Self {
            name: name.to_owned(),
            m,
            lower: None,
            upper: None,
            a: 0.0,
            f0: 0.0,
            g0: 0.0,
            b: Vec::new(),
            f: Vec::new(),
            g: Vec::new(),
            c: Default::default(),
            kappa: Default::default(),
            e: Default::default(),
            q: 0.0,
            r: 0.0,
            s: 0.0,
            x_tgt: Vec::new(),
            eta: Vec::new(),
            x0: None,
        }
    }

    fn uses_linear(&self) -> bool {
        self.a != 0.0
            || self.f0 != 0.0
            || self.g0 != 0.0
            || !self.b.is_empty()
            || !self.f.is_empty()
            || !self.g.is_empty()
    }

    fn uses_control_sq(&self) -> bool {
        Coefficient::ALL.iter().any(|&c| !self.c.get(c).is_empty())
    }

    fn uses_state_sq(&self) -> bool {
        Coefficient::ALL.iter().any(|&c| self.kappa.get(c).is_some())
    }

    fn uses_bilinear(&self) -> bool {
        Coefficient::ALL.iter().any(|&c| !self.e.get(c).is_empty())
    }
}

/// A moderately sized, real-valued instance of each gallery family with one control.
pub fn demo_spec(name: &str) -> Result<ProblemSpec> {
    let mut spec = ProblemSpec::named(name, 1);
    spec.q = 0.5;
    spec.r = 0.1;
    spec.s = 1.0;
    spec.x_tgt = vec![(0, 0.5, 0.0), (1, 0.25, 0.0)];
    if name == "free" {
        return Ok(spec);
    }
    spec.a = 0.4;
    spec.f0 = 0.3;
    spec.g0 = -0.2;
    spec.b = vec![vec![(0, 1.0, 0.0), (1, 0.5, 0.0)]];
    spec.f = vec![vec![(0, 0.5, 0.0), (2, -0.3, 0.0)]];
    spec.g = vec![vec![(3, 0.2, 0.0)]];
    let control_sq = || CoefficientSpec {
        drift: vec![vec![(0, 0.5, 0.0)]],
        left: vec![vec![(1, 0.3, 0.0)]],
        right: Vec::new(),
    };
    let state_sq = || CoefficientSpec {
        drift: Some(vec![(0, 0.3, 0.0)]),
        left: Some(vec![(0, 0.2, 0.0), (1, 0.1, 0.0)]),
        right: None,
    };
    match name {
        "lq" => {}
        "quadratic_control" => spec.c = control_sq(),
        "quadratic_state" => spec.kappa = state_sq(),
        "polynomial" => {
            spec.c = control_sq();
            spec.kappa = state_sq();
            spec.e = CoefficientSpec {
                drift: vec![vec![(0, 0.2, 0.0)]],
                left: Vec::new(),
                right: vec![vec![(1, 0.1, 0.0)]],
            };
        }
        other => return Err(QsocError::UnknownProblem(other.to_owned())),
    }
    Ok(spec)
}

fn element(alg: &Arc<CliffordAlgebra>, list: &BladeList) -> Result<CliffordElement> {
    for &(_, re, im) in list {
        if !(re.is_finite() && im.is_finite()) {
            return Err(QsocError::Domain("blade coefficients must be finite".into()));
        }
    }
    CliffordElement::from_terms(alg, list.iter().map(|&(mask, re, im)| (mask, Complex64::new(re, im))))
}

fn elements(alg: &Arc<CliffordAlgebra>, lists: &[BladeList]) -> Result<Vec<CliffordElement>> {
    lists.iter().map(|l| element(alg, l)).collect()
}

/// Builds a gallery problem on `alg`.
pub fn make_problem(alg: &Arc<CliffordAlgebra>, spec: &ProblemSpec) -> Result<PolynomialProblem> {
    let (linear, control_sq, state_sq, bilinear) = match spec.name.as_str() {
        "free" => (false, false, false, false),
        "lq" => (true, false, false, false),
        "quadratic_control" => (true, true, false, false),
        "quadratic_state" => (true, false, true, false),
        "polynomial" => (true, true, true, true),
        "custom" => {
            return Err(QsocError::Contract(
                "custom problems carry closures and must be constructed in code".into(),
            ))
        }
        other => return Err(QsocError::UnknownProblem(other.to_owned())),
    };
    for (used, allowed, family) in [
        (spec.uses_linear(), linear, "linear dynamics (a, f0, g0, b, f, g)"),
        (spec.uses_control_sq(), control_sq, "squared-control terms (c)"),
        (spec.uses_state_sq(), state_sq, "state-quadratic terms (kappa)"),
        (spec.uses_bilinear(), bilinear, "bilinear terms (e)"),
    ] {
        if used && !allowed {
            return Err(QsocError::Contract(format!(
                "problem `{}` does not admit {family}",
                spec.name
            )));
        }
    }
    for v in [spec.a, spec.f0, spec.g0, spec.q, spec.r, spec.s] {
        if !v.is_finite() {
            return Err(QsocError::Domain("problem rates must be finite".into()));
        }
    }

    let lower = spec.lower.clone().unwrap_or_else(|| vec![-1.0; spec.m]);
    let upper = spec.upper.clone().unwrap_or_else(|| vec![1.0; spec.m]);
    if lower.len() != spec.m {
        return Err(QsocError::LengthMismatch {
            what: "lower bounds",
            expected: spec.m,
            actual: lower.len(),
        });
    }
    let set = ControlSet::new(lower, upper)?;
    let x0 = match &spec.x0 {
        Some(list) => element(alg, list)?,
        None => CliffordElement::identity(alg),
    };

    let rates = [spec.a, spec.f0, spec.g0];
    let controls = [&spec.b, &spec.f, &spec.g];
    let mut problem = PolynomialProblem::new(&spec.name, alg, set, x0)?
        .with_running_cost(spec.q, spec.r)
        .with_terminal_cost(spec.s, element(alg, &spec.x_tgt)?, element(alg, &spec.eta)?)?;
    for (i, c) in Coefficient::ALL.into_iter().enumerate() {
        let terms = CoefficientTerms {
            rate: rates[i],
            control: elements(alg, controls[i])?,
            control_sq: elements(alg, spec.c.get(c))?,
            state_sq: spec.kappa.get(c).as_ref().map(|l| element(alg, l)).transpose()?,
            bilinear: elements(alg, spec.e.get(c))?,
        };
        problem = problem.with_coefficient(c, terms)?;
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ControlProblem;

    fn alg() -> Arc<CliffordAlgebra> {
        CliffordAlgebra::new(3, 0.0, 1.0).unwrap()
    }

    #[test]
    fn free_problem_cost_gradient() {
        let a = alg();
        let mut spec = ProblemSpec::named("free", 2);
        spec.r = 1.0;
        let p = make_problem(&a, &spec).unwrap();
        let x = CliffordElement::identity(&a);
        assert_eq!(p.running_cost_u(1, &x, &[0.5, -2.0]).unwrap(), vec![1.0, -4.0]);
        for c in Coefficient::ALL {
            assert_eq!(
                p.coefficient(c, 1, &x, &[0.5, -2.0]).unwrap(),
                CliffordElement::zero(&a)
            );
        }
    }

    #[test]
    fn lq_with_zero_rates_is_free() {
        let a = alg();
        let p = make_problem(&a, &ProblemSpec::named("lq", 1)).unwrap();
        assert!(p.has_zero_dynamics());
    }

    #[test]
    fn families_are_gated_by_name() {
        let a = alg();
        let mut spec = ProblemSpec::named("free", 1);
        spec.a = 1.0;
        assert!(matches!(make_problem(&a, &spec), Err(QsocError::Contract(_))));
        let mut spec = ProblemSpec::named("lq", 1);
        spec.kappa.drift = Some(vec![(0, 1.0, 0.0)]);
        assert!(matches!(make_problem(&a, &spec), Err(QsocError::Contract(_))));
        spec.name = "quadratic_state".into();
        assert!(make_problem(&a, &spec).is_ok());
    }

    #[test]
    fn unknown_and_custom_names() {
        let a = alg();
        assert!(matches!(
            make_problem(&a, &ProblemSpec::named("bogus", 1)),
            Err(QsocError::UnknownProblem(_))
        ));
        assert!(make_problem(&a, &ProblemSpec::named("custom", 1)).is_err());
    }

    #[test]
    fn out_of_range_blade_is_rejected() {
        let a = alg();
        let mut spec = ProblemSpec::named("lq", 1);
        spec.b = vec![vec![(8, 1.0, 0.0)]];
        assert!(make_problem(&a, &spec).is_err());
        let mut spec = ProblemSpec::named("lq", 1);
        spec.x0 = Some(vec![(1, 1.0, 0.0)]);
        assert!(matches!(make_problem(&a, &spec), Err(QsocError::Adaptedness(_))));
    }

    #[test]
    fn demo_specs_build() {
        let a = alg();
        for name in GALLERY_NAMES {
            let spec = demo_spec(name).unwrap();
            let p = make_problem(&a, &spec).unwrap();
            assert_eq!(p.has_zero_dynamics(), name == "free");
        }
        assert!(demo_spec("custom").is_err());
    }

    #[test]
    fn parses_blade_lists() {
        let json = r#"{"name": "lq", "m": 1, "a": 0.5, "b": [[[0, 1.0, 0.0], [3, 0.0, -0.5]]], "q": 1}"#;
        let spec: ProblemSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.b[0][1], (3, 0.0, -0.5));
        assert!(serde_json::from_str::<ProblemSpec>(r#"{"name": "lq", "m": 1, "zeta": 1}"#).is_err());
    }
}
