//! Randomized checks of the algebra laws, the Brownian isometries and the
//! agreement with the matrix representation.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::matrix_rep::{MatrixRepresentation, MAX_ORACLE_GENERATORS};
use super::{brownian_increment, CliffordAlgebra, CliffordElement};
use crate::error::{QsocError, Result};
use crate::sampling::{random_element, random_sparse_element, stream_rng};

/// Every `DENSE_EVERY`-th probe uses dense elements, the rest sparse ones.
const DENSE_EVERY: usize = 100;
const SPARSE_TERMS: usize = 16;

/// Largest residual of each law over a batch of probes.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct LawResiduals {
    pub probes: usize,
    pub associativity: f64,
    pub anticommutation: f64,
    pub star_involution: f64,
    pub star_antimultiplicative: f64,
    pub parity_automorphism: f64,
    pub trace_property: f64,
    pub positivity: f64,
    pub orthonormality: f64,
}

impl LawResiduals {
    pub fn max(&self) -> f64 {
        [
            self.associativity,
            self.anticommutation,
            self.star_involution,
            self.star_antimultiplicative,
            self.parity_automorphism,
            self.trace_property,
            self.positivity,
            self.orthonormality,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(self, o: Self) -> Self {
        Self {
            probes: self.probes + o.probes,
            associativity: self.associativity.max(o.associativity),
            anticommutation: self.anticommutation.max(o.anticommutation),
            star_involution: self.star_involution.max(o.star_involution),
            star_antimultiplicative: self.star_antimultiplicative.max(o.star_antimultiplicative),
            parity_automorphism: self.parity_automorphism.max(o.parity_automorphism),
            trace_property: self.trace_property.max(o.trace_property),
            positivity: self.positivity.max(o.positivity),
            orthonormality: self.orthonormality.max(o.orthonormality),
        }
    }
}

fn unit<R: Rng + ?Sized>(alg: &Arc<CliffordAlgebra>, dense: bool, rng: &mut R) -> CliffordElement {
    let n = alg.n_generators();
    let x = if dense {
        random_element(alg, n, false, rng)
    } else {
        random_sparse_element(alg, n, SPARSE_TERMS, rng)
    };
    let norm = x.norm();
    if norm > 0.0 {
        x.scale_re(1.0 / norm)
    } else {
        CliffordElement::identity(alg)
    }
}

fn one_probe(alg: &Arc<CliffordAlgebra>, seed: u64, index: usize) -> Result<LawResiduals> {
    let mut rng = stream_rng(seed, index as u64);
    let n = alg.n_generators();
    let dense = index.is_multiple_of(DENSE_EVERY);
    let a = unit(alg, dense, &mut rng);
    let b = unit(alg, dense, &mut rng);
    let c = unit(alg, dense, &mut rng);
    let ab = a.checked_mul(&b)?;
    let ba = b.checked_mul(&a)?;

    let associativity = ab.checked_mul(&c)?.max_abs_diff(&a.checked_mul(&b.checked_mul(&c)?)?);

    let mut anticommutation = 0.0;
    if n > 0 {
        let i = rng.random_range(1..=n);
        let j = rng.random_range(1..=n);
        let ei = CliffordElement::generator(alg, i)?;
        let ej = CliffordElement::generator(alg, j)?;
        let anti = &ei.checked_mul(&ej)? + &ej.checked_mul(&ei)?;
        let expected = CliffordElement::scalar(alg, Complex64::new(if i == j { 2.0 } else { 0.0 }, 0.0));
        anticommutation = anti.max_abs_diff(&expected);
    }

    let star_involution = a.star().star().max_abs_diff(&a);
    let star_antimultiplicative = ab.star().max_abs_diff(&b.star().checked_mul(&a.star())?);
    let parity_automorphism = ab.parity().max_abs_diff(&a.parity().checked_mul(&b.parity())?);
    let trace_property = (ab.state_m() - ba.state_m()).norm();
    let aa = a.star().checked_mul(&a)?.state_m();
    let positivity = aa.im.abs().max((aa.re - a.norm_sqr()).abs()).max((-aa.re).max(0.0));

    let d = alg.dim();
    let s = rng.random_range(0..d);
    let t = if rng.random::<bool>() {
        s
    } else {
        rng.random_range(0..d)
    };
    let one = Complex64::new(1.0, 0.0);
    let es = CliffordElement::blade(alg, s, one);
    let et = CliffordElement::blade(alg, t, one);
    let expected = if s == t { one } else { Complex64::new(0.0, 0.0) };
    let orthonormality = (es.inner(&et)? - expected).norm();

    Ok(LawResiduals {
        probes: 1,
        associativity,
        anticommutation,
        star_involution,
        star_antimultiplicative,
        parity_automorphism,
        trace_property,
        positivity,
        orthonormality,
    })
}

/// Runs `probes` independent law probes on unit-norm random elements.
pub fn probe_laws(alg: &Arc<CliffordAlgebra>, probes: usize, seed: u64) -> Result<LawResiduals> {
    let all = (0..probes)
        .into_par_iter()
        .map(|i| one_probe(alg, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(all.into_iter().fold(LawResiduals::default(), LawResiduals::merge))
}

/// Largest disagreement between the blade arithmetic and the Jordan–Wigner
/// matrices: products, the trace state and the inner product.
pub fn probe_matrix_oracle(alg: &Arc<CliffordAlgebra>, probes: usize, seed: u64) -> Result<f64> {
    let n = alg.n_generators();
    if !(1..=MAX_ORACLE_GENERATORS).contains(&n) {
        return Err(QsocError::Capacity(format!(
            "matrix oracle supports 1..={MAX_ORACLE_GENERATORS} generators, got {n}"
        )));
    }
    let jw = MatrixRepresentation::new(n);
    let residuals = (0..probes)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let a = unit(alg, true, &mut rng);
            let b = unit(alg, true, &mut rng);
            let (ma, mb) = (jw.to_matrix(&a), jw.to_matrix(&b));
            let prod = (jw.to_matrix(&a.checked_mul(&b)?) - &ma * &mb)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            let state = (jw.state(&ma) - a.state_m()).norm();
            let inner = (jw.inner(&ma, &mb) - a.inner(&b)?).norm();
            let star = (jw.to_matrix(&a.star()) - ma.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            Ok(prod.max(state).max(inner).max(star))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// Largest residuals of the Brownian identities over random adapted integrands.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct IsometryResiduals {
    pub probes: usize,
    /// `‖Σ f_k ΔW_{k+1}‖² = Σ dt‖f_k‖²`, relative.
    pub left: f64,
    /// `‖Σ ΔW_{k+1} g_k‖² = Σ dt‖g_k‖²`, relative.
    pub right: f64,
    /// `‖Σ (f_k ΔW + ΔW g_k)‖² = Σ dt‖f_k + Υg_k‖²`, relative.
    pub two_sided: f64,
    /// `f ΔW + ΔW g = (f + Υg) ΔW`, coefficientwise.
    pub parity_reduction: f64,
}

impl IsometryResiduals {
    pub fn max(&self) -> f64 {
        self.left.max(self.right).max(self.two_sided).max(self.parity_reduction)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Products with the increments use the general Clifford product, not the
/// relabelling used by the solvers.
pub fn probe_isometry(alg: &Arc<CliffordAlgebra>, probes: usize, seed: u64) -> Result<IsometryResiduals> {
    let n = alg.n_generators();
    let dt = alg.dt();
    let incs = (1..=n)
        .map(|k| brownian_increment(alg, k))
        .collect::<Result<Vec<_>>>()?;
    let all = (0..probes)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut il = CliffordElement::zero(alg);
            let mut ir = CliffordElement::zero(alg);
            let (mut ql, mut qr, mut q2) = (0.0, 0.0, 0.0);
            let mut parity_reduction = 0.0f64;
            for (k, inc) in incs.iter().enumerate() {
                let f = random_element(alg, k, false, &mut rng);
                let g = random_element(alg, k, false, &mut rng);
                let fw = f.checked_mul(inc)?;
                let wg = inc.checked_mul(&g)?;
                let reduced = (&f + &g.parity()).checked_mul(inc)?;
                let lhs = &fw + &wg;
                let scale = reduced.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
                parity_reduction = parity_reduction.max(lhs.max_abs_diff(&reduced) / scale);
                il += &fw;
                ir += &wg;
                ql += dt * f.norm_sqr();
                qr += dt * g.norm_sqr();
                q2 += dt * (&f + &g.parity()).norm_sqr();
            }
            let both = &il + &ir;
            Ok(IsometryResiduals {
                probes: 1,
                left: rel(il.norm_sqr(), ql),
                right: rel(ir.norm_sqr(), qr),
                two_sided: rel(both.norm_sqr(), q2),
                parity_reduction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(all
        .into_iter()
        .fold(IsometryResiduals::default(), |a, b| IsometryResiduals {
            probes: a.probes + b.probes,
            left: a.left.max(b.left),
            right: a.right.max(b.right),
            two_sided: a.two_sided.max(b.two_sided),
            parity_reduction: a.parity_reduction.max(b.parity_reduction),
        }))
}
