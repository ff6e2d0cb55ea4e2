use std::sync::Arc;

use super::{Coefficient, ControlProblem, ControlSet};
use crate::clifford::{CliffordAlgebra, CliffordElement};
use crate::error::{QsocError, Result};

type El = CliffordElement;

pub type CoefficientFn = Arc<dyn Fn(Coefficient, usize, &El, &[f64]) -> El + Send + Sync>;
pub type CoefficientDirFn = Arc<dyn Fn(Coefficient, usize, &El, &[f64], &El) -> El + Send + Sync>;
pub type CoefficientControlFn = Arc<dyn Fn(Coefficient, usize, &El, &[f64], &[f64]) -> El + Send + Sync>;
pub type CoefficientXXFn = Arc<dyn Fn(Coefficient, usize, &El, &[f64], &El, &El) -> El + Send + Sync>;
pub type CoefficientXUFn = Arc<dyn Fn(Coefficient, usize, &El, &[f64], &El, &[f64]) -> El + Send + Sync>;
pub type CoefficientUUFn = Arc<dyn Fn(Coefficient, usize, &El, &[f64], &[f64], &[f64]) -> El + Send + Sync>;
pub type CostFn = Arc<dyn Fn(usize, &El, &[f64]) -> f64 + Send + Sync>;
pub type CostGradFn = Arc<dyn Fn(usize, &El, &[f64]) -> El + Send + Sync>;
pub type CostControlFn = Arc<dyn Fn(usize, &El, &[f64]) -> Vec<f64> + Send + Sync>;
pub type CostDirFn = Arc<dyn Fn(usize, &El, &[f64], &El) -> El + Send + Sync>;
pub type CostMixedFn = Arc<dyn Fn(usize, &El, &[f64], &El) -> Vec<f64> + Send + Sync>;
pub type CostControlDirFn = Arc<dyn Fn(usize, &El, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type TerminalFn = Arc<dyn Fn(&El) -> f64 + Send + Sync>;
pub type TerminalGradFn = Arc<dyn Fn(&El) -> El + Send + Sync>;
pub type TerminalDirFn = Arc<dyn Fn(&El, &El) -> El + Send + Sync>;

/// A problem assembled from user closures. Absent callbacks surface as
/// [`QsocError::MissingCallback`] when first needed; the two Riesz-type
/// callbacks fall back to basis evaluation when absent.
#[derive(Clone, Default)]
pub struct CustomProblem {
    alg: Option<Arc<CliffordAlgebra>>,
    set: Option<ControlSet>,
    x0: Option<CliffordElement>,
    pub coefficient: Option<CoefficientFn>,
    pub coefficient_x: Option<CoefficientDirFn>,
    pub coefficient_x_adjoint: Option<CoefficientDirFn>,
    pub coefficient_u: Option<CoefficientControlFn>,
    pub coefficient_xx: Option<CoefficientXXFn>,
    pub coefficient_xx_contract: Option<CoefficientXXFn>,
    pub coefficient_xu: Option<CoefficientXUFn>,
    pub coefficient_uu: Option<CoefficientUUFn>,
    pub running_cost: Option<CostFn>,
    pub running_cost_x: Option<CostGradFn>,
    pub running_cost_u: Option<CostControlFn>,
    pub running_cost_xx: Option<CostDirFn>,
    pub running_cost_xu: Option<CostMixedFn>,
    pub running_cost_uu: Option<CostControlDirFn>,
    pub terminal_cost: Option<TerminalFn>,
    pub terminal_cost_x: Option<TerminalGradFn>,
    pub terminal_cost_xx: Option<TerminalDirFn>,
}

fn need<'a, T: ?Sized>(f: &'a Option<Arc<T>>, name: &'static str) -> Result<&'a T> {
    f.as_deref().ok_or(QsocError::MissingCallback(name))
}

impl CustomProblem {
    pub fn new(alg: &Arc<CliffordAlgebra>, set: ControlSet, x0: CliffordElement) -> Result<Self> {
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
            alg: Some(alg.clone()),
            set: Some(set),
            x0: Some(x0),
            ..Default::default()
        })
    }

    fn required(&self) -> [(&'static str, bool); 17] {
        [
            ("coefficient", self.coefficient.is_some()),
            ("coefficient_x", self.coefficient_x.is_some()),
            ("coefficient_u", self.coefficient_u.is_some()),
            ("coefficient_xx", self.coefficient_xx.is_some()),
            ("coefficient_xu", self.coefficient_xu.is_some()),
            ("coefficient_uu", self.coefficient_uu.is_some()),
            ("running_cost", self.running_cost.is_some()),
            ("running_cost_x", self.running_cost_x.is_some()),
            ("running_cost_u", self.running_cost_u.is_some()),
            ("running_cost_xx", self.running_cost_xx.is_some()),
            ("running_cost_xu", self.running_cost_xu.is_some()),
            ("running_cost_uu", self.running_cost_uu.is_some()),
            ("terminal_cost", self.terminal_cost.is_some()),
            ("terminal_cost_x", self.terminal_cost_x.is_some()),
            ("terminal_cost_xx", self.terminal_cost_xx.is_some()),
            ("algebra", self.alg.is_some()),
            ("initial_state", self.x0.is_some()),
        ]
    }
}

impl ControlProblem for CustomProblem {
    fn algebra(&self) -> &Arc<CliffordAlgebra> {
        self.alg.as_ref().expect("CustomProblem::new sets the algebra")
    }

    fn control_set(&self) -> &ControlSet {
        self.set.as_ref().expect("CustomProblem::new sets the control set")
    }

    fn initial_state(&self) -> &CliffordElement {
        self.x0.as_ref().expect("CustomProblem::new sets the initial state")
    }

    fn check_callbacks(&self) -> Result<()> {
        match self.required().iter().find(|(_, present)| !present) {
            Some((name, _)) => Err(QsocError::MissingCallback(name)),
            None => Ok(()),
        }
    }

    fn coefficient(&self, c: Coefficient, k: usize, x: &El, u: &[f64]) -> Result<El> {
        Ok(need(&self.coefficient, "coefficient")?(c, k, x, u))
    }

    fn coefficient_x(&self, c: Coefficient, k: usize, x: &El, u: &[f64], h: &El) -> Result<El> {
        Ok(need(&self.coefficient_x, "coefficient_x")?(c, k, x, u, h))
    }

    fn coefficient_x_adjoint(&self, c: Coefficient, k: usize, x: &El, u: &[f64], w: &El) -> Result<El> {
        match &self.coefficient_x_adjoint {
            Some(f) => Ok(f(c, k, x, u, w)),
            None => {
                let f = need(&self.coefficient_x, "coefficient_x")?;
                Ok(crate::clifford::riesz(self.algebra(), k, |h| {
                    w.real_inner(&f(c, k, x, u, h))
                }))
            }
        }
    }

    fn coefficient_u(&self, c: Coefficient, k: usize, x: &El, u: &[f64], v: &[f64]) -> Result<El> {
        Ok(need(&self.coefficient_u, "coefficient_u")?(c, k, x, u, v))
    }

    fn coefficient_xx(&self, c: Coefficient, k: usize, x: &El, u: &[f64], h1: &El, h2: &El) -> Result<El> {
        Ok(need(&self.coefficient_xx, "coefficient_xx")?(c, k, x, u, h1, h2))
    }

    fn coefficient_xx_contract(&self, c: Coefficient, k: usize, x: &El, u: &[f64], w: &El, h: &El) -> Result<El> {
        match &self.coefficient_xx_contract {
            Some(f) => Ok(f(c, k, x, u, w, h)),
            None => {
                let f = need(&self.coefficient_xx, "coefficient_xx")?;
                Ok(crate::clifford::riesz(self.algebra(), k, |h2| {
                    w.real_inner(&f(c, k, x, u, h, h2))
                }))
            }
        }
    }

    fn coefficient_xu(&self, c: Coefficient, k: usize, x: &El, u: &[f64], h: &El, v: &[f64]) -> Result<El> {
        Ok(need(&self.coefficient_xu, "coefficient_xu")?(c, k, x, u, h, v))
    }

    fn coefficient_uu(&self, c: Coefficient, k: usize, x: &El, u: &[f64], v1: &[f64], v2: &[f64]) -> Result<El> {
        Ok(need(&self.coefficient_uu, "coefficient_uu")?(c, k, x, u, v1, v2))
    }

    fn running_cost(&self, k: usize, x: &El, u: &[f64]) -> Result<f64> {
        Ok(need(&self.running_cost, "running_cost")?(k, x, u))
    }

    fn running_cost_x(&self, k: usize, x: &El, u: &[f64]) -> Result<El> {
        Ok(need(&self.running_cost_x, "running_cost_x")?(k, x, u))
    }

    fn running_cost_u(&self, k: usize, x: &El, u: &[f64]) -> Result<Vec<f64>> {
        Ok(need(&self.running_cost_u, "running_cost_u")?(k, x, u))
    }

    fn running_cost_xx(&self, k: usize, x: &El, u: &[f64], h: &El) -> Result<El> {
        Ok(need(&self.running_cost_xx, "running_cost_xx")?(k, x, u, h))
    }

    fn running_cost_xu(&self, k: usize, x: &El, u: &[f64], h: &El) -> Result<Vec<f64>> {
        Ok(need(&self.running_cost_xu, "running_cost_xu")?(k, x, u, h))
    }

    fn running_cost_uu(&self, k: usize, x: &El, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(need(&self.running_cost_uu, "running_cost_uu")?(k, x, u, v))
    }

    fn terminal_cost(&self, x: &El) -> Result<f64> {
        Ok(need(&self.terminal_cost, "terminal_cost")?(x))
    }

    fn terminal_cost_x(&self, x: &El) -> Result<El> {
        Ok(need(&self.terminal_cost_x, "terminal_cost_x")?(x))
    }

    fn terminal_cost_xx(&self, x: &El, h: &El) -> Result<El> {
        Ok(need(&self.terminal_cost_xx, "terminal_cost_xx")?(x, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_callbacks_are_named() {
        let alg = CliffordAlgebra::new(2, 0.0, 1.0).unwrap();
        let set = ControlSet::symmetric(1, 1.0).unwrap();
        let mut p = CustomProblem::new(&alg, set, CliffordElement::identity(&alg)).unwrap();
        p.coefficient = Some(Arc::new(|_, _, x, _| x.clone()));
        assert!(matches!(
            p.check_callbacks(),
            Err(QsocError::MissingCallback("coefficient_x"))
        ));
        let x = CliffordElement::identity(&alg);
        assert!(p.coefficient(Coefficient::Drift, 0, &x, &[0.0]).is_ok());
        assert!(matches!(
            p.running_cost(0, &x, &[0.0]),
            Err(QsocError::MissingCallback("running_cost"))
        ));
    }

    #[test]
    fn adjoint_falls_back_to_riesz() {
        let alg = CliffordAlgebra::new(2, 0.0, 1.0).unwrap();
        let set = ControlSet::symmetric(1, 1.0).unwrap();
        let mut p = CustomProblem::new(&alg, set, CliffordElement::identity(&alg)).unwrap();
        let e1 = CliffordElement::generator(&alg, 1).unwrap();
        let left = e1.clone();
        p.coefficient_x = Some(Arc::new(move |_, _, _, _, h| &left * h));
        let w = CliffordElement::generator(&alg, 2).unwrap();
        let x = CliffordElement::zero(&alg);
        let adj = p.coefficient_x_adjoint(Coefficient::Left, 2, &x, &[0.0], &w).unwrap();
        assert!(adj.max_abs_diff(&(&e1 * &w)) < 1e-15);
    }
}
