use crate::data::AtomicMatrix;
use crate::duality::{logistic_conjugate, primal_logistic, ObjectiveKind};
use crate::error::{FckError, Result};
use crate::screening::ScreenMode;
use crate::solver::{ActiveDesign, DualObjective};

/// Distance kept between `y − α` and the ends of `[0, 1]`.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Elastic-Net logistic regression without intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSpec {
    pub labels: Vec<f64>,
    pub tau: f64,
}

/// The dual variable is the residual `α = y − σ(Xβ)`.
#[derive(Debug, Clone)]
pub struct Logistic {
    labels: Vec<f64>,
    tau: f64,
    n_atoms: usize,
}

pub fn sigmoid(p: f64) -> f64 {
    if p >= 0.0 {
        1.0 / (1.0 + (-p).exp())
    } else {
        let e = p.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eᵖ)` without overflow.
pub fn softplus(p: f64) -> f64 {
    p.max(0.0) + (-p.abs()).exp().ln_1p()
}

impl Logistic {
    pub fn new(spec: LogisticSpec, a: &AtomicMatrix) -> Result<Self> {
        if spec.labels.len() != a.n_rows() {
            return Err(FckError::DimensionMismatch { expected: a.n_rows(), got: spec.labels.len() });
        }
        if spec.labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(FckError::Domain("logistic labels must be 0 or 1".into()));
        }
        if !(spec.tau > 0.0 && spec.tau.is_finite()) {
            return Err(FckError::Config("logistic needs tau > 0".into()));
        }
        Ok(Self { labels: spec.labels, tau: spec.tau, n_atoms: a.n_cols() })
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn beta(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        primal_logistic(&design.xt(alpha), design.thresholds(), self.tau)
    }

    fn margin(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        design.x(&self.beta(design, alpha))
    }
}

impl DualObjective for Logistic {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Logistic
    }

    fn n_rows(&self) -> usize {
        self.labels.len()
    }

    fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    fn screen_mode(&self) -> ScreenMode {
        ScreenMode::Signed
    }

    fn initial_dual(&self) -> Vec<f64> {
        self.labels.iter().map(|y| y - 0.5).collect()
    }

    fn project(&self, alpha: &mut [f64]) {
        for (a, y) in alpha.iter_mut().zip(&self.labels) {
            *a = a.clamp(y - 1.0 + BOUNDARY_EPS, y - BOUNDARY_EPS);
        }
    }

    fn free_set(&self, alpha: &[f64], grad: &[f64]) -> Vec<bool> {
        alpha
            .iter()
            .zip(grad)
            .zip(&self.labels)
            .map(|((&a, &g), &y)| {
                let at_low = a <= y - 1.0 + BOUNDARY_EPS;
                let at_high = a >= y - BOUNDARY_EPS;
                !(at_low && g <= 0.0 || at_high && g >= 0.0)
            })
            .collect()
    }

    fn value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64 {
        let mut v = 0.0;
        for (&a, &y) in alpha.iter().zip(&self.labels) {
            match logistic_conjugate(-a, y) {
                Ok(h) => v -= h,
                Err(_) => return f64::NEG_INFINITY,
            }
        }
        let beta = self.beta(design, alpha);
        v - 0.5 * self.tau * beta.iter().map(|b| b * b).sum::<f64>()
    }

    fn gradient(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        let margin = self.margin(design, alpha);
        alpha
            .iter()
            .zip(&self.labels)
            .zip(margin)
            .map(|((&a, &y), m)| {
                let q = y - a;
                (q / (1.0 - q)).ln() - m
            })
            .collect()
    }

    fn hessian_matvec(&self, design: &ActiveDesign, alpha: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = alpha
            .iter()
            .zip(&self.labels)
            .zip(v)
            .map(|((&a, &y), &x)| {
                let q = y - a;
                x * (1.0 / q + 1.0 / (1.0 - q))
            })
            .collect();
        let dots = design.xt(alpha);
        for ((c, &d), &l) in design.columns().iter().zip(&dots).zip(design.thresholds()) {
            if d.abs() > l {
                c.axpy(c.dot(v) / self.tau, &mut out);
            }
        }
        out
    }

    fn primal_coefficients(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<Vec<f64>> {
        self.beta(design, alpha).into_iter().map(|b| vec![b]).collect()
    }

    fn primal_value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64 {
        let beta = self.beta(design, alpha);
        let margin = design.x(&beta);
        let loss: f64 = margin.iter().zip(&self.labels).map(|(&p, &y)| softplus(p) - y * p).sum();
        let reg: f64 = beta
            .iter()
            .zip(design.thresholds())
            .map(|(b, l)| l * b.abs() + 0.5 * self.tau * b * b)
            .sum();
        loss + reg
    }

    fn fitted(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        self.margin(design, alpha).into_iter().map(sigmoid).collect()
    }
}
