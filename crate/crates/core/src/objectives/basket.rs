use crate::data::AtomicMatrix;
use crate::duality::{primal_basket, ObjectiveKind};
use crate::error::{FckError, Result};
use crate::screening::ScreenMode;
use crate::solver::{ActiveDesign, DualObjective};

/// Covering loss `½‖(τ1 − Xβ)₊‖² + λᵀβ + (γ/2)‖β‖²` over `β ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasketSpec {
    pub tau: f64,
    pub gamma: f64,
    /// Keep the dual inside `α ≥ 0`. Turning this off solves the dual of
    /// the plain squared loss `½‖τ1 − Xβ‖²`.
    pub nonneg_dual: bool,
}

impl Default for BasketSpec {
    fn default() -> Self {
        Self { tau: 10.0, gamma: 1e-3, nonneg_dual: true }
    }
}

#[derive(Debug, Clone)]
pub struct Basket {
    spec: BasketSpec,
    n_rows: usize,
    n_atoms: usize,
}

impl Basket {
    pub fn new(spec: BasketSpec, a: &AtomicMatrix) -> Result<Self> {
        if !(spec.tau > 0.0 && spec.gamma > 0.0) || !spec.tau.is_finite() || !spec.gamma.is_finite() {
            return Err(FckError::Config("basket needs tau > 0 and gamma > 0".into()));
        }
        Ok(Self { spec, n_rows: a.n_rows(), n_atoms: a.n_cols() })
    }

    pub fn spec(&self) -> &BasketSpec {
        &self.spec
    }

    fn shifted(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        design.xt(alpha).iter().zip(design.thresholds()).map(|(d, l)| d - l).collect()
    }

    fn beta(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        primal_basket(&design.xt(alpha), design.thresholds(), self.spec.gamma)
    }
}

impl DualObjective for Basket {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Basket
    }

    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    fn screen_mode(&self) -> ScreenMode {
        ScreenMode::Nonneg
    }

    fn initial_dual(&self) -> Vec<f64> {
        vec![self.spec.tau; self.n_rows]
    }

    fn project(&self, alpha: &mut [f64]) {
        if self.spec.nonneg_dual {
            alpha.iter_mut().for_each(|a| *a = a.max(0.0));
        }
    }

    fn free_set(&self, alpha: &[f64], grad: &[f64]) -> Vec<bool> {
        alpha.iter().zip(grad).map(|(&a, &g)| !self.spec.nonneg_dual || a > 0.0 || g > 0.0).collect()
    }

    fn value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64 {
        let (tau, gamma) = (self.spec.tau, self.spec.gamma);
        let loss: f64 = alpha.iter().map(|a| 0.5 * tau * tau - 0.5 * (tau - a) * (tau - a)).sum();
        let reg: f64 = self
            .shifted(design, alpha)
            .iter()
            .map(|&z| {
                if z <= 0.0 {
                    0.0
                } else if z < gamma {
                    z * z / (2.0 * gamma)
                } else {
                    z - gamma / 2.0
                }
            })
            .sum();
        loss - reg
    }

    fn gradient(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        let fit = design.x(&self.beta(design, alpha));
        alpha.iter().zip(fit).map(|(a, f)| self.spec.tau - a - f).collect()
    }

    fn hessian_matvec(&self, design: &ActiveDesign, alpha: &[f64], v: &[f64]) -> Vec<f64> {
        let gamma = self.spec.gamma;
        let z = self.shifted(design, alpha);
        let mut out = v.to_vec();
        for (c, &zu) in design.columns().iter().zip(&z) {
            if zu > 0.0 && zu < gamma {
                c.axpy(c.dot(v) / gamma, &mut out);
            }
        }
        out
    }

    fn primal_coefficients(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<Vec<f64>> {
        self.beta(design, alpha).into_iter().map(|b| vec![b]).collect()
    }

    fn primal_value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64 {
        let beta = self.beta(design, alpha);
        let fit = design.x(&beta);
        let tau = self.spec.tau;
        let loss: f64 = if self.spec.nonneg_dual {
            fit.iter().map(|f| 0.5 * (tau - f).max(0.0).powi(2)).sum()
        } else {
            fit.iter().map(|f| 0.5 * (tau - f).powi(2)).sum()
        };
        let reg: f64 = beta
            .iter()
            .zip(design.thresholds())
            .map(|(b, l)| l * b + 0.5 * self.spec.gamma * b * b)
            .sum();
        loss + reg
    }

    fn fitted(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        design.x(&self.beta(design, alpha))
    }
}
