//! Discrete quantum stochastic optimal control on a finite Clifford algebra.
//!
//! One generator per time step carries the fermionic Brownian increment. On
//! top of the algebra sit the state and variational solvers, the first and
//! second adjoints, the first- and second-order optimality functionals, a
//! small optimizer and the verification suites driven by the `qsoc` CLI.

pub mod adjoint;
pub mod clifford;
pub mod conditions;
pub mod config;
pub mod error;
pub mod forward;
pub mod numerics;
pub mod optimizer;
pub mod problem;
pub mod report;
pub mod sampling;
pub mod suites;

pub use clifford::{AdaptedProcess, CliffordAlgebra, CliffordElement, SuperOperator};
pub use error::{QsocError, Result};
pub use problem::{Coefficient, ControlPath, ControlProblem, ControlSet};
