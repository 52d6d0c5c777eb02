//! Quasi-Newton dual ascent with a screened working set.
//!
//! Each inner step solves `(H + hI) d = ∇` on the free coordinates with
//! matrix-free conjugate gradients, then backtracks along the projected path.
//! When no step along `d` improves the dual, the step falls back to the
//! gradient direction with a larger `h`. Near the optimum, where dual values
//! agree to rounding error, a step is accepted when it keeps the value and
//! shrinks the projected-gradient residual. The outer loop re-screens the full
//! poset at the new dual point and grows the working set until no interaction
//! outside it passes its inclusion test.

use std::collections::HashSet;
use std::time::Instant;

use crate::data::{AtomicMatrix, Column, DualWeights, FeatureSet};
use crate::duality::{ObjectiveKind, PrimalModel};
use crate::error::{FckError, Result};
use crate::screening::{screen, Interaction, PenaltySchedule, ScreenConfig, ScreenMode, ScreenResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub kkt_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
    pub h_init: f64,
    pub h_grow: f64,
    pub h_shrink: f64,
    pub ls_shrink: f64,
    pub ls_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-6,
            max_outer: 100,
            max_inner: 500,
            cg_rel_tol: 1e-8,
            cg_max_iter: 200,
            h_init: 1e-4,
            h_grow: 10.0,
            h_shrink: 0.5,
            ls_shrink: 0.5,
            ls_max: 30,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.kkt_tol, self.cg_rel_tol, self.h_init, self.h_grow];
        if positive.iter().any(|&x| !(x > 0.0)) || self.max_outer == 0 || self.max_inner == 0 || self.ls_max == 0 {
            return Err(FckError::Config("solver tolerances and limits must be positive".into()));
        }
        if !(self.h_shrink > 0.0 && self.h_shrink < 1.0 && self.ls_shrink > 0.0 && self.ls_shrink < 1.0) {
            return Err(FckError::Config("shrink factors must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// The working set: materialized interaction columns and their thresholds.
#[derive(Debug, Clone, Default)]
pub struct ActiveDesign {
    n_rows: usize,
    sets: Vec<FeatureSet>,
    columns: Vec<Column>,
    thresholds: Vec<f64>,
}

impl ActiveDesign {
    pub fn new(n_rows: usize) -> Self {
        Self { n_rows, ..Default::default() }
    }

    pub fn from_screen(n_rows: usize, res: &ScreenResult) -> Self {
        let mut d = Self::new(n_rows);
        for e in &res.emitted {
            d.push(e.set.clone(), e.column.clone(), e.threshold);
        }
        d
    }

    /// Materializes the listed interactions of `a`.
    pub fn from_sets(a: &AtomicMatrix, sets: &[FeatureSet], schedule: &PenaltySchedule) -> Result<Self> {
        let mut d = Self::new(a.n_rows());
        for s in sets {
            d.push(s.clone(), a.interaction_column(s)?, schedule.threshold(s.order()));
        }
        Ok(d)
    }

    pub fn push(&mut self, set: FeatureSet, column: Column, threshold: f64) {
        self.sets.push(set);
        self.columns.push(column);
        self.thresholds.push(threshold);
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[FeatureSet] {
        &self.sets
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// `Xᵀv` for one block of `n_rows` entries.
    pub fn xt(&self, v: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| c.dot(v)).collect()
    }

    /// `Xb` for a coefficient vector aligned with the active columns.
    pub fn x(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (c, &b) in self.columns.iter().zip(coef) {
            c.axpy(b, &mut out);
        }
        out
    }

    /// Rows `A_uᵀΛ` for a column-major `n_rows × tasks` block.
    pub fn xt_block(&self, v: &[f64], tasks: usize) -> Vec<Vec<f64>> {
        let n = self.n_rows;
        self.columns.iter().map(|c| (0..tasks).map(|j| c.dot(&v[j * n..(j + 1) * n])).collect()).collect()
    }

    /// `XW` as a column-major `n_rows × tasks` block.
    pub fn x_block(&self, rows: &[Vec<f64>], tasks: usize) -> Vec<f64> {
        let n = self.n_rows;
        let mut out = vec![0.0; n * tasks];
        for (c, r) in self.columns.iter().zip(rows) {
            for j in 0..tasks {
                c.axpy(r[j], &mut out[j * n..(j + 1) * n]);
            }
        }
        out
    }
}

/// Maximization-form dual problem restricted to a working set.
pub trait DualObjective: Sync {
    fn kind(&self) -> ObjectiveKind;
    fn n_rows(&self) -> usize;
    fn n_tasks(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        self.n_rows() * self.n_tasks()
    }
    fn n_atoms(&self) -> usize;
    fn screen_mode(&self) -> ScreenMode;

    /// Dual point of the empty model.
    fn initial_dual(&self) -> Vec<f64>;
    /// Maps `alpha` onto the dual feasible set in place.
    fn project(&self, alpha: &mut [f64]);
    /// Coordinates that may move: interior ones, and those on a bound whose
    /// gradient points inward.
    fn free_set(&self, alpha: &[f64], grad: &[f64]) -> Vec<bool>;

    fn value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64;
    fn gradient(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64>;
    /// Product with the (approximate) Hessian of the negated dual.
    fn hessian_matvec(&self, design: &ActiveDesign, alpha: &[f64], v: &[f64]) -> Vec<f64>;

    /// Coefficient rows aligned with the working set.
    fn primal_coefficients(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<Vec<f64>>;
    fn intercept(&self, _design: &ActiveDesign, _alpha: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    /// Primal objective at the coefficients recovered from `alpha`.
    fn primal_value(&self, design: &ActiveDesign, alpha: &[f64]) -> f64;
    /// Fitted values on the training rows, in the units `predict` reports.
    fn fitted(&self, design: &ActiveDesign, alpha: &[f64]) -> Vec<f64>;

    fn screen_weights(&self, alpha: &[f64]) -> DualWeights {
        DualWeights::from_alpha(alpha, self.n_rows(), self.n_tasks()).expect("dual has objective dimensions")
    }

    fn primal_model(&self, design: &ActiveDesign, alpha: &[f64]) -> PrimalModel {
        let rows = self.primal_coefficients(design, alpha);
        PrimalModel::new(
            self.kind(),
            self.n_atoms(),
            design.sets().iter().cloned().zip(rows),
            self.intercept(design, alpha),
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgInfo {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive definite operator.
pub fn cg_solve(
    matvec: impl Fn(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, CgInfo)> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let rhs_norm = norm(rhs);
    let target = cfg.cg_rel_tol * rhs_norm;
    let mut rr = dot(&r, &r);
    if rhs_norm == 0.0 {
        return Ok((x, CgInfo { iterations: 0, residual: 0.0, converged: true }));
    }
    for it in 0..cfg.cg_max_iter {
        let ap = matvec(&p);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rr.is_finite() {
            return Err(FckError::NonFinite("conjugate gradient"));
        }
        if pap <= 0.0 {
            return Err(FckError::Domain("operator is not positive definite".into()));
        }
        let step = rr / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok((x, CgInfo { iterations: it + 1, residual: rr_new.sqrt(), converged: true }));
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Ok((x, CgInfo { iterations: cfg.cg_max_iter, residual: rr.sqrt(), converged: false }))
}

fn masked(v: &[f64], free: &[bool]) -> Vec<f64> {
    v.iter().zip(free).map(|(&x, &f)| if f { x } else { 0.0 }).collect()
}

/// Solves `(H + hI) d = grad` on the free coordinates; zero elsewhere.
pub fn qn_step(
    grad: &[f64],
    hessian_matvec: impl Fn(&[f64]) -> Vec<f64>,
    free: &[bool],
    h: f64,
    cfg: &SolverConfig,
) -> Vec<f64> {
    let g = masked(grad, free);
    if g.iter().all(|&x| x == 0.0) {
        return g;
    }
    let op = |v: &[f64]| {
        let hv = hessian_matvec(v);
        hv.iter().zip(v).zip(free).map(|((&a, &b), &f)| if f { a + h * b } else { 0.0 }).collect::<Vec<_>>()
    };
    match cg_solve(op, &g, cfg) {
        Ok((d, _)) if d.iter().all(|x| x.is_finite()) && dot(&d, &g) > 0.0 => d,
        _ => g,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearch {
    Accepted { alpha: Vec<f64>, value: f64, h_next: f64, step: f64 },
    /// No improving step along either the quasi-Newton or the gradient
    /// direction.
    Stall { h_next: f64 },
}

const ARMIJO: f64 = 1e-4;
const VALUE_NOISE: f64 = 64.0 * f64::EPSILON;

/// `‖P(α + ∇) − α‖`, zero exactly at a stationary point of the projected
/// ascent.
pub fn projected_residual<O: DualObjective + ?Sized>(obj: &O, alpha: &[f64], grad: &[f64]) -> f64 {
    let mut next: Vec<f64> = alpha.iter().zip(grad).map(|(a, g)| a + g).collect();
    obj.project(&mut next);
    next.iter().zip(alpha).map(|(n, a)| (n - a) * (n - a)).sum::<f64>().sqrt()
}

#[allow(clippy::too_many_arguments)]
fn residual_backtrack<O: DualObjective + ?Sized>(
    obj: &O,
    design: &ActiveDesign,
    alpha: &[f64],
    value: f64,
    residual: f64,
    direction: &[f64],
    cfg: &SolverConfig,
) -> Option<(Vec<f64>, f64, f64)> {
    let floor = value - VALUE_NOISE * (1.0 + value.abs());
    let mut t = 1.0;
    for _ in 0..cfg.ls_max {
        let mut next: Vec<f64> = alpha.iter().zip(direction).map(|(a, d)| a + t * d).collect();
        obj.project(&mut next);
        let v = obj.value(design, &next);
        if v.is_finite() && v >= floor {
            let g = obj.gradient(design, &next);
            if projected_residual(obj, &next, &g) < (1.0 - ARMIJO) * residual {
                return Some((next, v, t));
            }
        }
        t *= cfg.ls_shrink;
    }
    None
}

fn backtrack<O: DualObjective + ?Sized>(
    obj: &O,
    design: &ActiveDesign,
    alpha: &[f64],
    value: f64,
    grad: &[f64],
    direction: &[f64],
    cfg: &SolverConfig,
) -> Option<(Vec<f64>, f64, f64, usize)> {
    let mut t = 1.0;
    for trial in 0..cfg.ls_max {
        let mut next: Vec<f64> = alpha.iter().zip(direction).map(|(a, d)| a + t * d).collect();
        obj.project(&mut next);
        let moved: Vec<f64> = next.iter().zip(alpha).map(|(n, a)| n - a).collect();
        let gain = dot(grad, &moved);
        if gain > 0.0 {
            let v = obj.value(design, &next);
            if v.is_finite() && v >= value + ARMIJO * gain && v > value {
                return Some((next, v, t, trial));
            }
        }
        t *= cfg.ls_shrink;
    }
    None
}

/// Backtracking along the projected path `α + t·d`, with a gradient
/// fallback and `h` adaptation.
#[allow(clippy::too_many_arguments)]
pub fn line_search<O: DualObjective + ?Sized>(
    obj: &O,
    design: &ActiveDesign,
    alpha: &[f64],
    value: f64,
    grad: &[f64],
    direction: &[f64],
    free: &[bool],
    h: f64,
    cfg: &SolverConfig,
) -> LineSearch {
    if let Some((next, v, t, trial)) = backtrack(obj, design, alpha, value, grad, direction, cfg) {
        let h_next = if trial == 0 { (h * cfg.h_shrink).max(cfg.h_init) } else { h };
        return LineSearch::Accepted { alpha: next, value: v, h_next, step: t };
    }
    let h_next = h * cfg.h_grow;
    let g: Vec<f64> = masked(grad, free).into_iter().map(|x| x / (1.0 + h_next)).collect();
    if let Some((next, v, t, _)) = backtrack(obj, design, alpha, value, grad, &g, cfg) {
        return LineSearch::Accepted { alpha: next, value: v, h_next, step: t };
    }
    let residual = projected_residual(obj, alpha, grad);
    for d in [direction, &g[..]] {
        if let Some((next, v, t)) = residual_backtrack(obj, design, alpha, value, residual, d, cfg) {
            return LineSearch::Accepted { alpha: next, value: v, h_next: h, step: t };
        }
    }
    LineSearch::Stall { h_next }
}

/// One progress record per inner iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub dual_value: f64,
    pub gap: f64,
    pub active_count: usize,
    pub explored_count: usize,
}

impl LogRecord {
    pub const HEADER: &'static str = "outer_iter\tinner_iter\tdual_value\tgap\tactive_count\texplored_count";

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{:.12e}\t{:.6e}\t{}\t{}",
            self.outer_iter, self.inner_iter, self.dual_value, self.gap, self.active_count, self.explored_count
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub n_rows: usize,
    pub n_tasks: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub dual: DualState,
    pub model: PrimalModel,
    /// Working set at termination.
    pub design: ActiveDesign,
    /// Screening result at the starting dual point.
    pub initial_screen: ScreenResult,
    pub converged: bool,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Interactions added by the outer loop after the initial screen.
    pub expansions: usize,
    /// Join candidates materialized over every screen of the solve.
    pub explored_count: usize,
    pub log: Vec<LogRecord>,
    pub seconds: f64,
}

impl SolveOutcome {
    pub fn relative_gap(&self) -> f64 {
        self.gap / (1.0 + self.primal_value.abs())
    }
}

/// Solves the full dual by alternating working-set solves and poset-wide
/// KKT checks.
pub fn solve<O: DualObjective + ?Sized>(
    obj: &O,
    a: &AtomicMatrix,
    schedule: &PenaltySchedule,
    alpha0: &[f64],
    scfg: &ScreenConfig,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    if alpha0.len() != obj.dim() {
        return Err(FckError::DimensionMismatch { expected: obj.dim(), got: alpha0.len() });
    }
    if a.n_rows() != obj.n_rows() {
        return Err(FckError::DimensionMismatch { expected: obj.n_rows(), got: a.n_rows() });
    }
    let scfg = ScreenConfig { mode: obj.screen_mode(), ..*scfg };
    let start = Instant::now();
    let mut alpha = alpha0.to_vec();
    obj.project(&mut alpha);

    let initial_screen = screen(a, &obj.screen_weights(&alpha), schedule, &scfg)?;
    let mut design = ActiveDesign::from_screen(a.n_rows(), &initial_screen);
    let mut explored = initial_screen.explored_count;
    let mut expansions = 0;
    let mut log = Vec::new();
    let mut h = cfg.h_init;
    let mut inner_total = 0;
    let mut converged = false;
    let mut outer = 0;

    let tol = |pv: f64| cfg.kkt_tol * (1.0 + pv.abs());

    while outer < cfg.max_outer {
        outer += 1;
        let mut inner_ok = false;
        let mut stalled = false;
        let mut value = obj.value(&design, &alpha);
        for inner in 0..cfg.max_inner {
            let pv = obj.primal_value(&design, &alpha);
            let gap = pv - value;
            if !value.is_finite() || !pv.is_finite() {
                return Err(FckError::NonFinite("dual objective"));
            }
            log.push(LogRecord {
                outer_iter: outer,
                inner_iter: inner,
                dual_value: value,
                gap,
                active_count: design.len(),
                explored_count: explored,
            });
            if gap <= tol(pv) {
                inner_ok = true;
                break;
            }
            inner_total += 1;
            let grad = obj.gradient(&design, &alpha);
            let free = obj.free_set(&alpha, &grad);
            let hv = |v: &[f64]| obj.hessian_matvec(&design, &alpha, v);
            let dir = qn_step(&grad, hv, &free, h, cfg);
            if dir.iter().all(|&x| x == 0.0) {
                stalled = true;
                break;
            }
            match line_search(obj, &design, &alpha, value, &grad, &dir, &free, h, cfg) {
                LineSearch::Accepted { alpha: next, value: v, h_next, .. } => {
                    alpha = next;
                    value = v;
                    h = h_next;
                }
                LineSearch::Stall { h_next } => {
                    h = h_next;
                    stalled = true;
                    break;
                }
            }
        }

        let check = screen(a, &obj.screen_weights(&alpha), schedule, &scfg)?;
        explored += check.explored_count;
        let have: HashSet<&FeatureSet> = design.sets().iter().collect();
        let violations: Vec<Interaction> = check.emitted.into_iter().filter(|i| !have.contains(&i.set)).collect();
        drop(have);
        if !violations.is_empty() {
            expansions += violations.len();
            for v in violations {
                design.push(v.set, v.column, v.threshold);
            }
            h = cfg.h_init;
            continue;
        }
        if inner_ok {
            converged = true;
            break;
        }
        if stalled {
            let pv = obj.primal_value(&design, &alpha);
            converged = pv - obj.value(&design, &alpha) <= tol(pv);
            break;
        }
    }

    let dual_value = obj.value(&design, &alpha);
    let primal_value = obj.primal_value(&design, &alpha);
    let model = obj.primal_model(&design, &alpha);
    Ok(SolveOutcome {
        dual: DualState { alpha, n_rows: obj.n_rows(), n_tasks: obj.n_tasks() },
        model,
        design,
        initial_screen,
        converged,
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        outer_iters: outer,
        inner_iters: inner_total,
        expansions,
        explored_count: explored,
        log,
        seconds: start.elapsed().as_secs_f64(),
    })
}
