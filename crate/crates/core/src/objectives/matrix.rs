use nalgebra::DMatrix;

use crate::data::AtomicMatrix;
use crate::duality::{group_shrink, ObjectiveKind};
use crate::error::{FckError, Result};
use crate::linalg::{nuclear_norm, numerical_rank, shrink_singular_values, singular_values};
use crate::screening::ScreenMode;
use crate::solver::{ActiveDesign, DualObjective};

/// Multi-task least squares with nuclear-norm, group-Lasso and ridge terms.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpec {
    pub responses: DMatrix<f64>,
    pub rho: f64,
    pub eta: f64,
    pub fit_intercept: bool,
}

/// The dual variable is an `n × T` matrix stored column-major. With an
/// intercept the responses are centered, the dual is confined to centered
/// matrices and the nuclear norm applies to the centered prediction.
#[derive(Debug, Clone)]
pub struct MatrixObjective {
    y: DMatrix<f64>,
    means: Vec<f64>,
    rho: f64,
    eta: f64,
    fit_intercept: bool,
    n_atoms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankReport {
    /// Numerical rank of the (centered) prediction `XW`.
    pub pred_rank: usize,
    /// Singular values of `Y − Λ` above `ρ`.
    pub retained_singulars: usize,
}

fn center_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
}

impl MatrixObjective {
    pub fn new(spec: MatrixSpec, a: &AtomicMatrix) -> Result<Self> {
        let MatrixSpec { responses: mut y, rho, eta, fit_intercept } = spec;
        if y.nrows() != a.n_rows() {
            return Err(FckError::DimensionMismatch { expected: a.n_rows(), got: y.nrows() });
        }
        if y.ncols() == 0 {
            return Err(FckError::EmptyInput("response matrix".into()));
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(FckError::NonFinite("responses"));
        }
        if !(rho >= 0.0 && rho.is_finite() && eta > 0.0 && eta.is_finite()) {
            return Err(FckError::Config("matrix objective needs rho >= 0 and eta > 0".into()));
        }
        let means = if fit_intercept {
            let m: Vec<f64> = y.column_iter().map(|c| c.mean()).collect();
            center_columns(&mut y);
            m
        } else {
            vec![0.0; y.ncols()]
        };
        Ok(Self { y, means, rho, eta, fit_intercept, n_atoms: a.n_cols() })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Responses as the solver sees them (centered when fitting an intercept).
    pub fn responses(&self) -> &DMatrix<f64> {
        &self.y
    }

    fn t(&self) -> usize {
        self.y.ncols()
    }

    fn as_matrix(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.y.nrows(), self.t(), v)
    }

    fn center(&self, v: &mut [f64]) {
        if self.fit_intercept {
            let n = self.y.nrows();
            for col in v.chunks_mut(n) {
                let mean = col.iter().sum::<f64>() / n as f64;
                col.iter_mut().for_each(|x| *x -= mean);
            }
        }
    }

    fn weights(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<Vec<f64>> {
        design
            .xt_block(alpha, self.t())
            .iter()
            .zip(design.thresholds())
            .map(|(r, &l)| group_shrink(r, l, self.eta))
            .collect()
    }

    fn centered_prediction(&self, design: &ActiveDesign, w: &[Vec<f64>]) -> Vec<f64> {
        let mut f = design.x_block(w, self.t());
        self.center(&mut f);
        f
    }

    pub fn rank_report(&self, design: &ActiveDesign, alpha: &[f64]) -> Result<RankReport> {
        let w = self.weights(design, alpha);
        let pred = self.as_matrix(&self.centered_prediction(design, &w));
        let m = &self.y - self.as_matrix(alpha);
        let retained = singular_values(&m)?.iter().filter(|&&s| s > self.rho).count();
        Ok(RankReport { pred_rank: numerical_rank(&pred, 1e-8)?, retained_singulars: retained })
    }
}

impl DualObjective for MatrixObjective {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Matrix
    }

    fn n_rows(&self) -> usize {
        self.y.nrows()
    }

    fn n_tasks(&self) -> usize {
        self.t()
    }

    fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    fn screen_mode(&self) -> ScreenMode {
        ScreenMode::Group
    }

    fn initial_dual(&self) -> Vec<f64> {
        shrink_singular_values(&self.y, self.rho).expect("responses are finite").as_slice().to_vec()
    }

    fn project(&self, alpha: &mut [f64]) {
        self.center(alpha);
    }

    fn free_set(&self, alpha: &[f64], _grad: &[f64]) -> Vec<bool> {
        vec![true; alpha.len()]
    }

    fn value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64 {
        let m = &self.y - self.as_matrix(alpha);
        let s = match singular_values(&m) {
            Ok(s) => s,
            Err(_) => return f64::NEG_INFINITY,
        };
        let loss = 0.5 * self.y.norm_squared() - 0.5 * s.iter().map(|&x| (x - self.rho).max(0.0).powi(2)).sum::<f64>();
        let reg: f64 = design
            .xt_block(alpha, self.t())
            .iter()
            .zip(design.thresholds())
            .map(|(r, &l)| {
                let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                (norm - l).max(0.0).powi(2) / (2.0 * self.eta)
            })
            .sum();
        loss - reg
    }

    fn gradient(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        let m = &self.y - self.as_matrix(alpha);
        let z = shrink_singular_values(&m, self.rho).unwrap_or_else(|_| DMatrix::from_element(m.nrows(), m.ncols(), f64::NAN));
        let fit = design.x_block(&self.weights(design, alpha), self.t());
        let mut g: Vec<f64> = z.as_slice().iter().zip(&fit).map(|(a, b)| a - b).collect();
        self.center(&mut g);
        g
    }

    fn hessian_matvec(&self, design: &ActiveDesign, alpha: &[f64], v: &[f64]) -> Vec<f64> {
        let t = self.t();
        let n = self.y.nrows();
        let mut v = v.to_vec();
        self.center(&mut v);
        let mut out = v.clone();
        let dots = design.xt_block(alpha, t);
        for ((c, z), &l) in design.columns().iter().zip(&dots).zip(design.thresholds()) {
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= l {
                continue;
            }
            let r: Vec<f64> = (0..t).map(|j| c.dot(&v[j * n..(j + 1) * n])).collect();
            let zr: f64 = z.iter().zip(&r).map(|(a, b)| a * b).sum();
            let k = l / (norm * norm * norm);
            for j in 0..t {
                let coef = ((1.0 - l / norm) * r[j] + k * zr * z[j]) / self.eta;
                c.axpy(coef, &mut out[j * n..(j + 1) * n]);
            }
        }
        self.center(&mut out);
        out
    }

    fn primal_coefficients(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<Vec<f64>> {
        self.weights(design, alpha)
    }

    fn intercept(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        if !self.fit_intercept {
            return vec![0.0; self.t()];
        }
        let n = self.y.nrows();
        let f = design.x_block(&self.weights(design, alpha), self.t());
        f.chunks(n).zip(&self.means).map(|(col, m)| m - col.iter().sum::<f64>() / n as f64).collect()
    }

    fn primal_value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64 {
        let w = self.weights(design, alpha);
        let z = self.as_matrix(&self.centered_prediction(design, &w));
        let fit = 0.5 * (&self.y - &z).norm_squared();
        let nuclear = if self.rho > 0.0 { self.rho * nuclear_norm(&z).unwrap_or(f64::INFINITY) } else { 0.0 };
        let reg: f64 = w
            .iter()
            .zip(design.thresholds())
            .map(|(r, &l)| {
                let sq = r.iter().map(|x| x * x).sum::<f64>();
                l * sq.sqrt() + 0.5 * self.eta * sq
            })
            .sum();
        fit + nuclear + reg
    }

    fn fitted(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64> {
        let n = self.y.nrows();
        let b = self.intercept(design, alpha);
        let mut f = design.x_block(&self.weights(design, alpha), self.t());
        for (col, bj) in f.chunks_mut(n).zip(b) {
            col.iter_mut().for_each(|x| *x += bj);
        }
        f
    }
}
