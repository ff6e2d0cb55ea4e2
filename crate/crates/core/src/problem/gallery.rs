use std::sync::Arc;

use super::{Coefficient, ControlProblem, ControlSet};
use crate::clifford::{CliffordAlgebra, CliffordElement};
use crate::error::{QsocError, Result};

/// Polynomial coefficient map
/// `Φ(k, x, u) = rate·x + Σ uᵢ bᵢ + Σ uᵢ² cᵢ + κ x x + Σ uᵢ eᵢ x`
/// where every fixed element is replaced by its conditional expectation onto
/// `{1..k}` at step `k`, so the map is adapted. Empty vectors mean zero terms.
#[derive(Clone, Debug, Default)]
pub struct CoefficientTerms {
    pub rate: f64,
    pub control: Vec<CliffordElement>,
    pub control_sq: Vec<CliffordElement>,
    pub state_sq: Option<CliffordElement>,
    pub bilinear: Vec<CliffordElement>,
}

impl CoefficientTerms {
    pub fn is_zero(&self) -> bool {
        let zero = |e: &CliffordElement| e.norm_sqr() == 0.0;
        self.rate == 0.0
            && self.control.iter().all(zero)
            && self.control_sq.iter().all(zero)
            && self.state_sq.as_ref().is_none_or(zero)
            && self.bilinear.iter().all(zero)
    }

    fn elements(&self) -> impl Iterator<Item = &CliffordElement> {
        self.control
            .iter()
            .chain(&self.control_sq)
            .chain(&self.bilinear)
            .chain(self.state_sq.iter())
    }

    fn validate(&self, alg: &Arc<CliffordAlgebra>, m: usize) -> Result<()> {
        for (what, v) in [
            ("control terms", &self.control),
            ("squared control terms", &self.control_sq),
            ("bilinear terms", &self.bilinear),
        ] {
            if !v.is_empty() && v.len() != m {
                return Err(QsocError::LengthMismatch {
                    what,
                    expected: m,
                    actual: v.len(),
                });
            }
        }
        if self.elements().any(|e| !e.same_algebra(&CliffordElement::zero(alg))) {
            return Err(QsocError::AlgebraMismatch("coefficient element".into()));
        }
        if !self.rate.is_finite() {
            return Err(QsocError::Domain("coefficient rate must be finite".into()));
        }
        Ok(())
    }

    fn value(&self, k: usize, x: &CliffordElement, u: &[f64]) -> CliffordElement {
        let mut out = x.scale_re(self.rate);
        for (ui, b) in u.iter().zip(&self.control) {
            out.axpy(*ui, &b.truncate(k));
        }
        for (ui, c) in u.iter().zip(&self.control_sq) {
            out.axpy(ui * ui, &c.truncate(k));
        }
        if let Some(kappa) = &self.state_sq {
            out += &(&(&kappa.truncate(k) * x) * x);
        }
        for (ui, e) in u.iter().zip(&self.bilinear) {
            out.axpy(*ui, &(&e.truncate(k) * x));
        }
        out
    }

    fn d_x(&self, k: usize, x: &CliffordElement, u: &[f64], h: &CliffordElement) -> CliffordElement {
        let mut out = h.scale_re(self.rate);
        if let Some(kappa) = &self.state_sq {
            let kk = kappa.truncate(k);
            out += &(&kk * &(&(x * h) + &(h * x)));
        }
        for (ui, e) in u.iter().zip(&self.bilinear) {
            out.axpy(*ui, &(&e.truncate(k) * h));
        }
        out
    }

    fn d_x_adjoint(&self, k: usize, x: &CliffordElement, u: &[f64], w: &CliffordElement) -> CliffordElement {
        let mut out = w.scale_re(self.rate);
        if let Some(kappa) = &self.state_sq {
            let kk = kappa.truncate(k);
            // Re⟨w, κxh⟩ = Re⟨(κx)* w, h⟩ and Re⟨w, κhx⟩ = Re⟨κ* w x*, h⟩
            out += &(&(&kk * x).star() * w);
            out += &(&(&kk.star() * w) * &x.star());
        }
        for (ui, e) in u.iter().zip(&self.bilinear) {
            out.axpy(*ui, &(&e.truncate(k).star() * w));
        }
        out.truncate(k)
    }

    fn d_u(&self, k: usize, x: &CliffordElement, u: &[f64], v: &[f64]) -> CliffordElement {
        let mut out = CliffordElement::zero(x.algebra());
        for (vi, b) in v.iter().zip(&self.control) {
            out.axpy(*vi, &b.truncate(k));
        }
        for ((vi, ui), c) in v.iter().zip(u).zip(&self.control_sq) {
            out.axpy(2.0 * ui * vi, &c.truncate(k));
        }
        for (vi, e) in v.iter().zip(&self.bilinear) {
            out.axpy(*vi, &(&e.truncate(k) * x));
        }
        out
    }

    fn d_xx(&self, k: usize, h1: &CliffordElement, h2: &CliffordElement) -> CliffordElement {
        match &self.state_sq {
            Some(kappa) => &kappa.truncate(k) * &(&(h1 * h2) + &(h2 * h1)),
            None => CliffordElement::zero(h1.algebra()),
        }
    }

    fn d_xx_contract(&self, k: usize, w: &CliffordElement, h: &CliffordElement) -> CliffordElement {
        match &self.state_sq {
            Some(kappa) => {
                let kk = kappa.truncate(k);
                let out = &(&(&kk * h).star() * w) + &(&(&kk.star() * w) * &h.star());
                out.truncate(k)
            }
            None => CliffordElement::zero(h.algebra()),
        }
    }

    fn d_xu(&self, k: usize, h: &CliffordElement, v: &[f64]) -> CliffordElement {
        let mut out = CliffordElement::zero(h.algebra());
        for (vi, e) in v.iter().zip(&self.bilinear) {
            out.axpy(*vi, &(&e.truncate(k) * h));
        }
        out
    }

    fn d_uu(&self, k: usize, alg: &Arc<CliffordAlgebra>, v1: &[f64], v2: &[f64]) -> CliffordElement {
        let mut out = CliffordElement::zero(alg);
        for ((a, b), c) in v1.iter().zip(v2).zip(&self.control_sq) {
            out.axpy(2.0 * a * b, &c.truncate(k));
        }
        out
    }

    fn bound(&self, radius: f64, umax: f64) -> f64 {
        let l1 = |e: &CliffordElement| e.coeffs().iter().map(|c| c.norm()).sum::<f64>();
        let lip = self.rate.abs()
            + 2.0 * radius * self.state_sq.as_ref().map_or(0.0, l1)
            + umax * self.bilinear.iter().map(l1).sum::<f64>();
        let growth =
            umax * self.control.iter().map(l1).sum::<f64>() + umax * umax * self.control_sq.iter().map(l1).sum::<f64>();
        lip.max(growth)
    }
}

/// Gallery problem with polynomial coefficients, running cost
/// `L = q‖x‖² + r‖u‖²` and terminal cost `g = s‖x − x_tgt‖² + Re⟨η, x⟩`.
#[derive(Clone, Debug)]
pub struct PolynomialProblem {
    name: String,
    alg: Arc<CliffordAlgebra>,
    set: ControlSet,
    x0: CliffordElement,
    terms: [CoefficientTerms; 3],
    q: f64,
    r: f64,
    s: f64,
    x_tgt: CliffordElement,
    eta: CliffordElement,
}

impl PolynomialProblem {
    /// Problem with zero dynamics and zero cost. `x0` must be a multiple of the identity.
    pub fn new(name: &str, alg: &Arc<CliffordAlgebra>, set: ControlSet, x0: CliffordElement) -> Result<Self> {
        if !x0.same_algebra(&CliffordElement::zero(alg)) {
            return Err(QsocError::AlgebraMismatch("initial state".into()));
        }
        if !x0.is_supported_in(0) {
            return Err(QsocError::Adaptedness(format!(
                "initial state must be a multiple of the identity, has support level {}",
                x0.support_level()
            )));
        }
        Ok(Self {
            name: name.to_owned(),
            alg: alg.clone(),
            set,
            x0,
            terms: Default::default(),
            q: 0.0,
            r: 0.0,
            s: 0.0,
            x_tgt: CliffordElement::zero(alg),
            eta: CliffordElement::zero(alg),
        })
    }

    pub fn with_coefficient(mut self, c: Coefficient, terms: CoefficientTerms) -> Result<Self> {
        terms.validate(&self.alg, self.set.dim())?;
        self.terms[c as usize] = terms;
        Ok(self)
    }

    pub fn with_running_cost(mut self, q: f64, r: f64) -> Self {
        self.q = q;
        self.r = r;
        self
    }

    pub fn with_terminal_cost(mut self, s: f64, x_tgt: CliffordElement, eta: CliffordElement) -> Result<Self> {
        let zero = CliffordElement::zero(&self.alg);
        if !x_tgt.same_algebra(&zero) || !eta.same_algebra(&zero) {
            return Err(QsocError::AlgebraMismatch("terminal cost element".into()));
        }
        self.s = s;
        self.x_tgt = x_tgt;
        self.eta = eta;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self, c: Coefficient) -> &CoefficientTerms {
        &self.terms[c as usize]
    }

    pub fn rates(&self) -> (f64, f64, f64) {
        (self.q, self.r, self.s)
    }

    pub fn has_zero_dynamics(&self) -> bool {
        self.terms.iter().all(CoefficientTerms::is_zero)
    }
}

impl ControlProblem for PolynomialProblem {
    fn algebra(&self) -> &Arc<CliffordAlgebra> {
        &self.alg
    }

    fn control_set(&self) -> &ControlSet {
        &self.set
    }

    fn initial_state(&self) -> &CliffordElement {
        &self.x0
    }

    fn coefficient(&self, c: Coefficient, k: usize, x: &CliffordElement, u: &[f64]) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].value(k, x, u))
    }

    fn coefficient_x(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        h: &CliffordElement,
    ) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].d_x(k, x, u, h))
    }

    fn coefficient_x_adjoint(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        w: &CliffordElement,
    ) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].d_x_adjoint(k, x, u, w))
    }

    fn coefficient_u(
        &self,
        c: Coefficient,
        k: usize,
        x: &CliffordElement,
        u: &[f64],
        v: &[f64],
    ) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].d_u(k, x, u, v))
    }

    fn coefficient_xx(
        &self,
        c: Coefficient,
        k: usize,
        _x: &CliffordElement,
        _u: &[f64],
        h1: &CliffordElement,
        h2: &CliffordElement,
    ) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].d_xx(k, h1, h2))
    }

    fn coefficient_xx_contract(
        &self,
        c: Coefficient,
        k: usize,
        _x: &CliffordElement,
        _u: &[f64],
        w: &CliffordElement,
        h: &CliffordElement,
    ) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].d_xx_contract(k, w, h))
    }

    fn coefficient_xu(
        &self,
        c: Coefficient,
        k: usize,
        _x: &CliffordElement,
        _u: &[f64],
        h: &CliffordElement,
        v: &[f64],
    ) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].d_xu(k, h, v))
    }

    fn coefficient_uu(
        &self,
        c: Coefficient,
        k: usize,
        _x: &CliffordElement,
        _u: &[f64],
        v1: &[f64],
        v2: &[f64],
    ) -> Result<CliffordElement> {
        Ok(self.terms[c as usize].d_uu(k, &self.alg, v1, v2))
    }

    fn running_cost(&self, _k: usize, x: &CliffordElement, u: &[f64]) -> Result<f64> {
        Ok(self.q * x.norm_sqr() + self.r * u.iter().map(|v| v * v).sum::<f64>())
    }

    fn running_cost_x(&self, _k: usize, x: &CliffordElement, _u: &[f64]) -> Result<CliffordElement> {
        Ok(x.scale_re(2.0 * self.q))
    }

    fn running_cost_u(&self, _k: usize, _x: &CliffordElement, u: &[f64]) -> Result<Vec<f64>> {
        Ok(u.iter().map(|v| 2.0 * self.r * v).collect())
    }

    fn running_cost_xx(
        &self,
        _k: usize,
        _x: &CliffordElement,
        _u: &[f64],
        h: &CliffordElement,
    ) -> Result<CliffordElement> {
        Ok(h.scale_re(2.0 * self.q))
    }

    fn running_cost_xu(&self, _k: usize, _x: &CliffordElement, u: &[f64], _h: &CliffordElement) -> Result<Vec<f64>> {
        Ok(vec![0.0; u.len()])
    }

    fn running_cost_uu(&self, _k: usize, _x: &CliffordElement, _u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(v.iter().map(|w| 2.0 * self.r * w).collect())
    }

    fn terminal_cost(&self, x: &CliffordElement) -> Result<f64> {
        Ok(self.s * (x - &self.x_tgt).norm_sqr() + self.eta.real_inner(x))
    }

    fn terminal_cost_x(&self, x: &CliffordElement) -> Result<CliffordElement> {
        Ok(&(x - &self.x_tgt).scale_re(2.0 * self.s) + &self.eta)
    }

    fn terminal_cost_xx(&self, _x: &CliffordElement, h: &CliffordElement) -> Result<CliffordElement> {
        Ok(h.scale_re(2.0 * self.s))
    }

    fn bound_constant(&self, radius: f64) -> Option<f64> {
        if !self.set.is_bounded() {
            return None;
        }
        let umax = self
            .set
            .lower()
            .iter()
            .chain(self.set.upper())
            .fold(0.0f64, |a, b| a.max(b.abs()));
        let cost_growth = self.r.abs() * self.set.dim() as f64 * umax * umax;
        let dynamics = self.terms.iter().map(|t| t.bound(radius, umax)).fold(0.0, f64::max);
        Some(dynamics.max(cost_growth))
    }
}
