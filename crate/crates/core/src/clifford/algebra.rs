use std::sync::Arc;

use crate::error::{QsocError, Result};

/// Default upper bound on the number of generators (time steps).
pub const DEFAULT_MAX_GENERATORS: usize = 12;

/// Finite Clifford probability space attached to a uniform time grid.
///
/// Generator `e_k` (1-based) carries the normalized Brownian increment over
/// `[t_{k-1}, t_k]`. Blades are encoded as bit masks with bit `k - 1` set when
/// `e_k` is a factor, so the subalgebra generated by `e_1..e_k` is exactly the
/// set of masks below `2^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordAlgebra {
    n: usize,
    t0: f64,
    t_end: f64,
    dt: f64,
}

impl CliffordAlgebra {
    pub fn new(n: usize, t0: f64, t_end: f64) -> Result<Arc<Self>> {
        Self::with_cap(n, t0, t_end, DEFAULT_MAX_GENERATORS)
    }

    pub fn with_cap(n: usize, t0: f64, t_end: f64, cap: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(QsocError::Domain("number of generators must be positive".into()));
        }
        if n > cap {
            return Err(QsocError::Capacity(format!(
                "{n} generators requested, cap is {cap} (2^{n} coefficients)"
            )));
        }
        if !(t0.is_finite() && t_end.is_finite()) || t_end <= t0 {
            return Err(QsocError::Domain(format!(
                "time horizon must satisfy T > t0 (got t0 = {t0}, T = {t_end})"
            )));
        }
        let dt = (t_end - t0) / n as f64;
        Ok(Arc::new(Self { n, t0, t_end, dt }))
    }

    /// Number of generators, equal to the number of time steps.
    pub fn n_generators(&self) -> usize {
        self.n
    }

    /// Number of blades, `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of blades supported in `{1..k}`.
    pub fn level_dim(&self, k: usize) -> usize {
        1 << k
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Grid time `t_k`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt
        }
    }
}

/// Sign of the blade product `e_a e_b = sign * e_{a xor b}`.
///
/// Counts the pairs `(i, j)` with `i` in `a`, `j` in `b` and `i > j`; each such
/// pair needs one transposition of anticommuting generators.
#[inline]
pub fn blade_sign(a: usize, b: usize) -> f64 {
    let mut shifted = a >> 1;
    let mut swaps = 0u32;
    while shifted != 0 {
        swaps += (shifted & b).count_ones();
        shifted >>= 1;
    }
    if swaps & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign picked up by a blade under the involution: `(-1)^{|S|(|S|-1)/2}`.
#[inline]
pub fn reversion_sign(mask: usize) -> f64 {
    match mask.count_ones() % 4 {
        0 | 1 => 1.0,
        _ => -1.0,
    }
}

/// Sign picked up by a blade under the parity automorphism: `(-1)^{|S|}`.
#[inline]
pub fn parity_sign(mask: usize) -> f64 {
    if mask.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Smallest `k` such that `mask` is a subset of `{1..k}`.
#[inline]
pub fn blade_level(mask: usize) -> usize {
    (usize::BITS - mask.leading_zeros()) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_instance() {
        let alg = CliffordAlgebra::new(1, 0.0, 1.0).unwrap();
        assert_eq!(alg.dt(), 1.0);
        assert_eq!(alg.dim(), 2);
    }

    #[test]
    fn four_steps_on_two_units() {
        let alg = CliffordAlgebra::new(4, 0.0, 2.0).unwrap();
        assert_eq!(alg.dt(), 0.5);
        assert_eq!(alg.dim(), 16);
        assert_eq!(alg.time(4), 2.0);
    }

    #[test]
    fn cap_and_horizon_errors() {
        assert!(matches!(
            CliffordAlgebra::new(13, 0.0, 1.0),
            Err(QsocError::Capacity(_))
        ));
        assert!(matches!(CliffordAlgebra::new(3, 1.0, 1.0), Err(QsocError::Domain(_))));
        assert!(CliffordAlgebra::with_cap(13, 0.0, 1.0, 14).is_ok());
    }

    #[test]
    fn grid_closes_to_one_ulp() {
        for n in 1..=12 {
            let alg = CliffordAlgebra::new(n, 0.3, 1.7).unwrap();
            let span = alg.dt() * n as f64;
            assert!((span - 1.4).abs() <= f64::EPSILON * 2.0);
        }
    }

    #[test]
    fn sign_rule() {
        // e1 e2 = e12, e2 e1 = -e12
        assert_eq!(blade_sign(0b01, 0b10), 1.0);
        assert_eq!(blade_sign(0b10, 0b01), -1.0);
        // e12 e12 = -1
        assert_eq!(blade_sign(0b11, 0b11), -1.0);
        assert_eq!(blade_level(0), 0);
        assert_eq!(blade_level(0b101), 3);
    }
}
