//! Finite Clifford probability space: blade arithmetic, the trace state,
//! parity, conditional expectations and Brownian increments.

mod algebra;
mod element;
pub mod laws;
pub mod matrix_rep;
mod stochastic;
mod superop;

pub use algebra::{blade_level, blade_sign, parity_sign, reversion_sign, CliffordAlgebra, DEFAULT_MAX_GENERATORS};
pub use element::CliffordElement;
pub(crate) use stochastic::times_increment;
pub use stochastic::{brownian_increment, martingale_coefficient, AdaptedProcess};
pub use superop::{from_real_coords, real_basis, real_coords, riesz, SuperOperator};
