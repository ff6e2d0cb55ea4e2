//! Seeded random probes: adapted elements, controls and test tuples.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::clifford::{CliffordAlgebra, CliffordElement};
use crate::problem::{ControlPath, ControlSet};

/// Deterministic generator for stream `stream` of a run seeded with `seed`.
///
/// Distinct streams are independent, so suites drawing from their own stream
/// produce the same probes regardless of scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian element supported in `{1..level}`; real coefficients when `real_only`.
pub fn random_element<R: Rng + ?Sized>(
    alg: &Arc<CliffordAlgebra>,
    level: usize,
    real_only: bool,
    rng: &mut R,
) -> CliffordElement {
    let mut out = CliffordElement::zero(alg);
    let d = 1usize << level;
    for c in out.coeffs_mut().iter_mut().take(d) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if real_only { 0.0 } else { rng.sample(StandardNormal) };
        *c = Complex64::new(re, im);
    }
    out
}

/// Element supported in `{1..level}` with at most `terms` random blades.
pub fn random_sparse_element<R: Rng + ?Sized>(
    alg: &Arc<CliffordAlgebra>,
    level: usize,
    terms: usize,
    rng: &mut R,
) -> CliffordElement {
    let d = 1usize << level;
    let mut out = CliffordElement::zero(alg);
    for _ in 0..terms {
        let mask = rng.random_range(0..d);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.coeffs_mut()[mask] += Complex64::new(re, im);
    }
    out
}

/// Uniform control vector in the box (bounded sets only; infinite sides use `[-1, 1]`).
pub fn random_control_vector<R: Rng + ?Sized>(set: &ControlSet, rng: &mut R) -> Vec<f64> {
    set.lower()
        .iter()
        .zip(set.upper())
        .map(|(&lo, &hi)| {
            let lo = if lo.is_finite() { lo } else { -1.0 };
            let hi = if hi.is_finite() { hi } else { lo.max(-1.0) + 2.0 };
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect()
}

pub fn random_control_path<R: Rng + ?Sized>(set: &ControlSet, steps: usize, rng: &mut R) -> ControlPath {
    ControlPath::new((0..steps).map(|_| random_control_vector(set, rng)).collect()).expect("nonempty control vectors")
}
