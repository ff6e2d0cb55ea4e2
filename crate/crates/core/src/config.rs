//! Run configuration: a single JSON document naming the problem, the grid,
//! the suites to run and where to write the reports.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::CliffordAlgebra;
use crate::error::{QsocError, Result};
use crate::problem::{make_problem, PolynomialProblem, ProblemSpec};

/// Verification suites, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Isometry,
    Orders,
    Gradient,
    Adjoint,
    SecondOrder,
    Theorem,
    Optimize,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Algebra,
        Suite::Isometry,
        Suite::Orders,
        Suite::Gradient,
        Suite::Adjoint,
        Suite::SecondOrder,
        Suite::Theorem,
        Suite::Optimize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Isometry => "isometry",
            Suite::Orders => "orders",
            Suite::Gradient => "gradient",
            Suite::Adjoint => "adjoint",
            Suite::SecondOrder => "second_order",
            Suite::Theorem => "theorem",
            Suite::Optimize => "optimize",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Json,
    Csv,
    Plotdata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

/// Per-suite tolerance overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub algebra: f64,
    pub oracle: f64,
    pub isometry: f64,
    pub duality: f64,
    pub gradient: f64,
    pub transposition: f64,
    pub closed_form: f64,
    pub taylor: f64,
    pub theorem_fo: f64,
    pub theorem_s: f64,
    pub optimize: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: 1e-10,
            oracle: 1e-12,
            isometry: 1e-10,
            duality: 1e-10,
            gradient: 1e-6,
            transposition: 1e-9,
            closed_form: 1e-10,
            taylor: 1e-3,
            theorem_fo: 1e-8,
            theorem_s: 1e-6,
            optimize: 1e-8,
        }
    }
}

/// Probe counts and sweep parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub algebra_probes: usize,
    pub oracle_probes: usize,
    pub isometry_probes: usize,
    pub adjoint_directions: usize,
    pub transposition_pairs: usize,
    /// `ε = 2^-k` for `k` in this inclusive range.
    pub orders_exponents: (i32, i32),
    pub taylor_exponents: (i32, i32),
    pub fd_step: f64,
    pub grid_points: usize,
    pub optimize_step: f64,
    pub optimize_max_iter: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            algebra_probes: 1000,
            oracle_probes: 100,
            isometry_probes: 1000,
            adjoint_directions: 5,
            transposition_pairs: 100,
            orders_exponents: (3, 9),
            taylor_exponents: (4, 8),
            fd_step: 1e-4,
            grid_points: 5,
            optimize_step: 1.0,
            optimize_max_iter: 200,
        }
    }
}

pub fn eps_range((lo, hi): (i32, i32)) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

fn default_output() -> PathBuf {
    PathBuf::from("qsoc-out")
}

fn default_emit() -> Vec<Emit> {
    vec![Emit::Json]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub grid: Grid,
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_emit")]
    pub emit: Vec<Emit>,
}

fn config_error(path: &str, message: impl Into<String>) -> QsocError {
    QsocError::Config {
        path: path.to_owned(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Parses and validates; schema errors carry the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(config_error("suites", "at least one suite is required"));
        }
        if self.emit.is_empty() {
            return Err(config_error("emit", "at least one output format is required"));
        }
        let s = &self.settings;
        for (name, (lo, hi)) in [
            ("settings.orders_exponents", s.orders_exponents),
            ("settings.taylor_exponents", s.taylor_exponents),
        ] {
            if lo < 0 || hi <= lo {
                return Err(config_error(name, "need 0 <= first < second"));
            }
        }
        if !(s.fd_step > 0.0 && s.fd_step.is_finite()) {
            return Err(config_error("settings.fd_step", "must be positive"));
        }
        if s.grid_points == 0 {
            return Err(config_error("settings.grid_points", "must be positive"));
        }
        let alg = self.algebra()?;
        self.problem(&alg)?;
        Ok(())
    }

    pub fn algebra(&self) -> Result<Arc<CliffordAlgebra>> {
        CliffordAlgebra::new(self.grid.n, self.grid.t0, self.grid.t_end)
    }

    pub fn problem(&self, alg: &Arc<CliffordAlgebra>) -> Result<PolynomialProblem> {
        make_problem(alg, &self.problem)
    }

    /// Requested suites, deduplicated, in execution order.
    pub fn ordered_suites(&self) -> Vec<Suite> {
        let mut s = self.suites.clone();
        s.sort();
        s.dedup();
        s
    }

    pub fn wants(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": {"name": "lq", "m": 1, "a": 0.5, "b": [[[0, 1.0, 0.0]]]},
        "grid": {"T": 1.0, "N": 4},
        "suites": ["theorem", "algebra", "algebra"]
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.ordered_suites(), vec![Suite::Algebra, Suite::Theorem]);
        assert_eq!(cfg.emit, vec![Emit::Json]);
        assert_eq!(cfg.tolerances, Tolerances::default());
    }

    #[test]
    fn schema_errors_carry_paths() {
        let bad = MINIMAL.replace("\"a\": 0.5", "\"a\": \"x\"");
        match RunConfig::from_json(&bad) {
            Err(QsocError::Config { path, .. }) => assert_eq!(path, "problem.a"),
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("\"algebra\", \"algebra\"", "\"bogus\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(QsocError::Config { .. })));
    }

    #[test]
    fn capacity_and_empty_suites() {
        let big = MINIMAL.replace("\"N\": 4", "\"N\": 20");
        assert!(matches!(RunConfig::from_json(&big), Err(QsocError::Capacity(_))));
        let empty = r#"{"problem": {"name": "free", "m": 1}, "grid": {"T": 1.0, "N": 2}, "suites": []}"#;
        assert!(matches!(RunConfig::from_json(empty), Err(QsocError::Config { .. })));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
    }
}
