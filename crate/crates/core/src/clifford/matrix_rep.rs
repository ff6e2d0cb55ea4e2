//! Explicit matrix realization of the generators, used as an independent check
//! of the blade arithmetic.
//!
//! Generator `e_k` is represented by the Jordan-Wigner string
//! `Z ⊗ .. ⊗ Z ⊗ X ⊗ I ⊗ .. ⊗ I` (with `X` in slot `k`), which is Hermitian,
//! squares to the identity and anticommutes with the other generators. The
//! trace state is the normalized matrix trace and `*` is the conjugate transpose.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::algebra::CliffordAlgebra;
use super::element::CliffordElement;

/// Largest generator count the dense oracle accepts.
pub const MAX_ORACLE_GENERATORS: usize = 6;

pub struct MatrixRepresentation {
    n: usize,
    blades: Vec<DMatrix<Complex64>>,
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

impl MatrixRepresentation {
    pub fn new(n: usize) -> Self {
        assert!(
            (1..=MAX_ORACLE_GENERATORS).contains(&n),
            "matrix oracle supports 1..={MAX_ORACLE_GENERATORS} generators"
        );
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let id2 = DMatrix::from_row_slice(2, 2, &[one, zero, zero, one]);
        let x = DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let z = DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]);

        let generators: Vec<DMatrix<Complex64>> = (0..n)
            .map(|k| {
                let mut m = DMatrix::from_element(1, 1, one);
                for slot in 0..n {
                    let factor = match slot.cmp(&k) {
                        std::cmp::Ordering::Less => &z,
                        std::cmp::Ordering::Equal => &x,
                        std::cmp::Ordering::Greater => &id2,
                    };
                    m = kron(&m, factor);
                }
                m
            })
            .collect();

        let dim = 1usize << n;
        let mut blades = Vec::with_capacity(dim);
        blades.push(DMatrix::identity(dim, dim));
        for mask in 1..dim {
            // product in increasing generator order: blade without its top generator, times that generator
            let top = (usize::BITS - 1 - mask.leading_zeros()) as usize;
            let rest = mask & !(1 << top);
            let m = &blades[rest] * &generators[top];
            blades.push(m);
        }
        Self { n, blades }
    }

    pub fn n_generators(&self) -> usize {
        self.n
    }

    pub fn to_matrix(&self, x: &CliffordElement) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (mask, c) in x.terms() {
            out += &self.blades[mask] * c;
        }
        out
    }

    /// Recovers blade coefficients through `α_S = tr(M_S^† M) / 2^N`.
    pub fn from_matrix(&self, alg: &Arc<CliffordAlgebra>, m: &DMatrix<Complex64>) -> CliffordElement {
        let dim = 1usize << self.n;
        let coeffs = self
            .blades
            .iter()
            .map(|b| (b.adjoint() * m).trace() / dim as f64)
            .collect();
        CliffordElement::from_coeffs(alg, coeffs).expect("dimension matches")
    }

    /// Normalized trace.
    pub fn state(&self, m: &DMatrix<Complex64>) -> Complex64 {
        m.trace() / (1usize << self.n) as f64
    }

    pub fn inner(&self, a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
        self.state(&(a.adjoint() * b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_norm(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn generators_satisfy_relations() {
        let rep = MatrixRepresentation::new(3);
        let alg = CliffordAlgebra::new(3, 0.0, 1.0).unwrap();
        let e: Vec<_> = (1..=3)
            .map(|k| rep.to_matrix(&CliffordElement::generator(&alg, k).unwrap()))
            .collect();
        let id = DMatrix::<Complex64>::identity(8, 8);
        for i in 0..3 {
            assert!(max_norm(&(&e[i] * &e[i] - &id)) < 1e-15);
            assert!(max_norm(&(e[i].adjoint() - &e[i])) < 1e-15);
            for j in 0..3 {
                if i != j {
                    assert!(max_norm(&(&e[i] * &e[j] + &e[j] * &e[i])) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn blade_product_matches_matrices() {
        let rep = MatrixRepresentation::new(3);
        let alg = CliffordAlgebra::new(3, 0.0, 1.0).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let e12 = CliffordElement::blade(&alg, 0b011, one);
        let e23 = CliffordElement::blade(&alg, 0b110, one);
        let prod = rep.to_matrix(&e12) * rep.to_matrix(&e23);
        assert_eq!(rep.from_matrix(&alg, &prod), CliffordElement::blade(&alg, 0b101, one));
    }
}
