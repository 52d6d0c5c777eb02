//! Warm-started regularization paths and prediction.

use std::collections::HashSet;
use std::time::Instant;

use crate::data::{AtomicMatrix, FeatureSet};
use crate::duality::{ObjectiveKind, PrimalModel};
use crate::error::{FckError, Result};
use crate::objectives::sigmoid;
use crate::screening::{max_normalized_statistic, PenaltySchedule, PenaltyShape, ScreenConfig};
use crate::solver::{solve, DualObjective, LogRecord, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub n_lambdas: usize,
    pub lambda_min_ratio: f64,
    pub shape: PenaltyShape,
    /// Explicit grid; overrides `n_lambdas` and `lambda_min_ratio`.
    pub lambdas: Option<Vec<f64>>,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self { n_lambdas: 50, lambda_min_ratio: 1e-3, shape: PenaltyShape::Flat, lambdas: None }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if let Some(l) = &self.lambdas {
            if l.is_empty() || l.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || l.windows(2).any(|w| w[1] >= w[0]) {
                return Err(FckError::Config("lambda grid must be finite, nonnegative and strictly decreasing".into()));
            }
            return Ok(());
        }
        if self.n_lambdas == 0 || !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(FckError::Config("need n_lambdas >= 1 and lambda_min_ratio in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Geometric grid from `lambda_max` down to `lambda_max · min_ratio`.
pub fn lambda_grid(lambda_max: f64, n: usize, min_ratio: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lambda_max];
    }
    let step = min_ratio.ln() / (n - 1) as f64;
    (0..n).map(|k| lambda_max * (step * k as f64).exp()).collect()
}

/// Smallest base penalty at which screening at the empty model's dual point
/// emits nothing.
pub fn lambda_max<O: DualObjective + ?Sized>(
    obj: &O,
    a: &AtomicMatrix,
    shape: &PenaltyShape,
    scfg: &ScreenConfig,
) -> Result<f64> {
    let mut alpha = obj.initial_dual();
    obj.project(&mut alpha);
    let cfg = ScreenConfig { mode: obj.screen_mode(), ..*scfg };
    max_normalized_statistic(a, &obj.screen_weights(&alpha), shape, &cfg)
}

/// Nonzero entries of a dual vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSnapshot {
    pub len: usize,
    pub entries: Vec<(u32, f64)>,
}

impl DualSnapshot {
    pub fn from_dense(alpha: &[f64]) -> Self {
        let entries = alpha.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i as u32, v)).collect();
        Self { len: alpha.len(), entries }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PathPoint {
    pub lambda: f64,
    pub model: PrimalModel,
    pub dual: DualSnapshot,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub converged: bool,
    /// Sets with nonzero coefficients at the solution.
    pub active_count: usize,
    /// Sets emitted by screening at the warm start.
    pub predicted_count: usize,
    pub explored_count: usize,
    pub expansions: usize,
    /// Whether the warm-start prediction contained every active set.
    pub superset: bool,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub seconds: f64,
}

impl PathPoint {
    /// `predicted / active`, with an empty active set counted as one so the
    /// ratio stays finite. Both empty gives 1.
    pub fn predicted_ratio(&self) -> f64 {
        match (self.predicted_count, self.active_count) {
            (0, 0) => 1.0,
            (p, a) => p as f64 / a.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub lambda_max: f64,
    pub points: Vec<PathPoint>,
    /// Solver progress, tagged with the path index.
    pub log: Vec<(usize, LogRecord)>,
}

impl PathResult {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    pub const TSV_HEADER: &'static str = "lambda\tactive_count\tpredicted_count\tratio\texplored_count\texpansions\tsuperset\tprimal\tdual\tgap\tconverged\tseconds";

    pub fn to_tsv(&self) -> String {
        let mut s = String::from(Self::TSV_HEADER);
        s.push('\n');
        for p in &self.points {
            s.push_str(&format!(
                "{:.9e}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{:.12e}\t{:.12e}\t{:.3e}\t{}\t{:.4}\n",
                p.lambda,
                p.active_count,
                p.predicted_count,
                p.predicted_ratio(),
                p.explored_count,
                p.expansions,
                p.superset,
                p.primal_value,
                p.dual_value,
                p.gap,
                p.converged,
                p.seconds
            ));
        }
        s
    }
}

/// Solves along a decreasing λ grid, warm-starting each point from the
/// previous dual solution.
pub fn run_path<O: DualObjective + ?Sized>(
    obj: &O,
    a: &AtomicMatrix,
    pcfg: &PathConfig,
    scfg: &ScreenConfig,
    cfg: &SolverConfig,
) -> Result<PathResult> {
    pcfg.validate()?;
    let lmax = lambda_max(obj, a, &pcfg.shape, scfg)?;
    let grid = match &pcfg.lambdas {
        Some(l) => l.clone(),
        None => lambda_grid(lmax, pcfg.n_lambdas, pcfg.lambda_min_ratio),
    };
    let mut alpha = obj.initial_dual();
    let mut points = Vec::with_capacity(grid.len());
    let mut log = Vec::new();
    for (t, &lambda) in grid.iter().enumerate() {
        let start = Instant::now();
        let schedule = PenaltySchedule::new(lambda, pcfg.shape);
        let out = solve(obj, a, &schedule, &alpha, scfg, cfg)?;
        let predicted: HashSet<&FeatureSet> = out.initial_screen.emitted.iter().map(|e| &e.set).collect();
        let superset = out.model.active.iter().all(|s| predicted.contains(s));
        log.extend(out.log.iter().cloned().map(|r| (t, r)));
        points.push(PathPoint {
            lambda,
            dual: DualSnapshot::from_dense(&out.dual.alpha),
            primal_value: out.primal_value,
            dual_value: out.dual_value,
            gap: out.gap,
            converged: out.converged,
            active_count: out.model.len(),
            predicted_count: out.initial_screen.emitted.len(),
            explored_count: out.explored_count,
            expansions: out.expansions,
            superset,
            outer_iters: out.outer_iters,
            inner_iters: out.inner_iters,
            seconds: start.elapsed().as_secs_f64(),
            model: out.model,
        });
        alpha = out.dual.alpha;
    }
    Ok(PathResult { lambda_max: lmax, points, log })
}

/// Scores for new rows: coverage `Xβ` for the basket model, probabilities
/// for the logistic model, and `XW + 1bᵀ` (column-major) for the matrix
/// model.
pub fn predict(model: &PrimalModel, a: &AtomicMatrix) -> Result<Vec<f64>> {
    if a.n_cols() != model.n_atoms {
        return Err(FckError::DimensionMismatch { expected: model.n_atoms, got: a.n_cols() });
    }
    let n = a.n_rows();
    let t = model.n_tasks();
    let mut out = vec![0.0; n * t];
    for (set, row) in model.active.iter().zip(&model.coefficients) {
        if row.len() != t {
            return Err(FckError::DimensionMismatch { expected: t, got: row.len() });
        }
        let c = a.interaction_column(set)?;
        for (j, &w) in row.iter().enumerate() {
            c.axpy(w, &mut out[j * n..(j + 1) * n]);
        }
    }
    match model.kind {
        ObjectiveKind::Basket => {}
        ObjectiveKind::Logistic => out.iter_mut().for_each(|p| *p = sigmoid(*p)),
        ObjectiveKind::Matrix => {
            for (j, &b) in model.intercept.iter().enumerate() {
                out[j * n..(j + 1) * n].iter_mut().for_each(|x| *x += b);
            }
        }
    }
    Ok(out)
}
