//! Independent reference implementations used by the integration tests:
//! explicit enumeration of every interaction column and first-order solvers
//! on the fully materialized primal problems.

#![allow(dead_code)]

use fck::data::{AtomicMatrix, FeatureSet};
use fck::objectives::{Basket, BasketSpec, Logistic, LogisticSpec, MatrixObjective, MatrixSpec};
use fck::screening::{PenaltySchedule, ScreenMode};
use fck::solver::{ActiveDesign, DualObjective};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_binary(rng: &mut ChaCha8Rng, n: usize, d: usize, density: f64) -> AtomicMatrix {
    let tid = (0..d)
        .map(|_| (0..n as u32).filter(|_| rng.gen::<f64>() < density).collect())
        .collect();
    AtomicMatrix::from_tidlists(n, tid).unwrap()
}

pub fn random_dense(rng: &mut ChaCha8Rng, n: usize, d: usize) -> AtomicMatrix {
    let cols = (0..d).map(|_| (0..n).map(|_| if rng.gen::<f64>() < 0.3 { 0.0 } else { rng.gen::<f64>() }).collect()).collect();
    AtomicMatrix::from_dense_columns(n, cols).unwrap()
}

/// Every nonempty subset of `0..d` with at most `max_order` atoms.
pub fn all_sets(d: usize, max_order: usize) -> Vec<FeatureSet> {
    (1u32..(1 << d))
        .filter(|m| (m.count_ones() as usize) <= max_order)
        .map(|m| FeatureSet::new((0..d as u32).filter(|k| m >> k & 1 == 1).collect()).unwrap())
        .collect()
}

/// Dense interaction columns computed row by row from the dense atom matrix.
pub fn materialize(a: &AtomicMatrix, sets: &[FeatureSet]) -> Vec<Vec<f64>> {
    let rows = a.to_dense_rows();
    sets.iter()
        .map(|s| rows.iter().map(|r| s.atoms().iter().map(|&k| r[k as usize]).product()).collect())
        .collect()
}

pub fn thresholds(sets: &[FeatureSet], s: &PenaltySchedule) -> Vec<f64> {
    sets.iter().map(|u| s.threshold(u.order())).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Brute-force screening: every subset whose statistic exceeds its threshold.
pub fn enumerate_screen(
    a: &AtomicMatrix,
    alpha: &[f64],
    tasks: usize,
    s: &PenaltySchedule,
    mode: ScreenMode,
    max_order: usize,
) -> Vec<(FeatureSet, f64)> {
    let n = a.n_rows();
    let sets = all_sets(a.n_cols(), max_order);
    let cols = materialize(a, &sets);
    let mut out = Vec::new();
    for (u, c) in sets.into_iter().zip(cols) {
        let dots: Vec<f64> = (0..tasks).map(|j| dot(&c, &alpha[j * n..(j + 1) * n])).collect();
        let stat = match mode {
            ScreenMode::Signed => dots[0].abs(),
            ScreenMode::Nonneg => dots[0],
            ScreenMode::Group => dots.iter().map(|x| x * x).sum::<f64>().sqrt(),
        };
        if stat > s.threshold(u.order()) {
            out.push((u, stat));
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Largest eigenvalue of `XᵀX` by power iteration.
pub fn spectral_sq(cols: &[Vec<f64>], n: usize) -> f64 {
    if cols.is_empty() {
        return 0.0;
    }
    let mut v = vec![1.0; cols.len()];
    let mut est = 0.0;
    for _ in 0..500 {
        let mut xv = vec![0.0; n];
        for (c, &b) in cols.iter().zip(&v) {
            for i in 0..n {
                xv[i] += c[i] * b;
            }
        }
        let w: Vec<f64> = cols.iter().map(|c| dot(c, &xv)).collect();
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm / dot(&v, &v).sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    est * 1.01
}

pub fn xmul(cols: &[Vec<f64>], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (c, &w) in cols.iter().zip(b) {
        if w != 0.0 {
            for i in 0..n {
                out[i] += c[i] * w;
            }
        }
    }
    out
}

/// FISTA with gradient restarts on a composite objective. `grad` returns the
/// smooth part's gradient, `prox(v, t)` the proximal map, `obj` the full
/// objective.
pub fn fista(
    x0: Vec<f64>,
    lipschitz: f64,
    iters: usize,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    prox: impl Fn(&[f64], f64) -> Vec<f64>,
    obj: impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let step = 1.0 / lipschitz;
    let mut x = x0.clone();
    let mut y = x0;
    let mut t = 1.0_f64;
    let mut best = x.clone();
    let mut best_val = obj(&x);
    for _ in 0..iters {
        let g = grad(&y);
        let v: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let xn = prox(&v, step);
        let restart = y.iter().zip(&xn).zip(&x).map(|((yy, xx), xo)| (yy - xx) * (xx - xo)).sum::<f64>() > 0.0;
        let tn = if restart { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
        let mom = if restart { 0.0 } else { (t - 1.0) / tn };
        y = xn.iter().zip(&x).map(|(a, b)| a + mom * (a - b)).collect();
        x = xn;
        t = tn;
        let val = obj(&x);
        if val < best_val {
            best_val = val;
            best = x.clone();
        }
    }
    best
}

pub struct BasketOracle<'a> {
    pub cols: &'a [Vec<f64>],
    pub lam: &'a [f64],
    pub n: usize,
    pub tau: f64,
    pub gamma: f64,
    pub plus: bool,
}

impl BasketOracle<'_> {
    pub fn objective(&self, b: &[f64]) -> f64 {
        let f = xmul(self.cols, b, self.n);
        let loss: f64 = f
            .iter()
            .map(|x| {
                let r = self.tau - x;
                0.5 * if self.plus { r.max(0.0) } else { r }.powi(2)
            })
            .sum();
        loss + b.iter().zip(self.lam).map(|(b, l)| l * b + 0.5 * self.gamma * b * b).sum::<f64>()
    }

    pub fn solve(&self, iters: usize) -> Vec<f64> {
        let l = spectral_sq(self.cols, self.n) + self.gamma;
        let grad = |b: &[f64]| {
            let f = xmul(self.cols, b, self.n);
            let r: Vec<f64> = f.iter().map(|x| if self.plus { (self.tau - x).max(0.0) } else { self.tau - x }).collect();
            self.cols
                .iter()
                .zip(b)
                .zip(self.lam)
                .map(|((c, &bb), &l)| -dot(c, &r) + self.gamma * bb + l)
                .collect()
        };
        let prox = |v: &[f64], _t: f64| v.iter().map(|x| x.clamp(0.0, 1.0)).collect();
        fista(vec![0.0; self.cols.len()], l, iters, grad, prox, |b| self.objective(b))
    }
}

pub fn softplus(p: f64) -> f64 {
    p.max(0.0) + (-p.abs()).exp().ln_1p()
}

pub fn sigmoid(p: f64) -> f64 {
    1.0 / (1.0 + (-p).exp())
}

pub struct LogisticOracle<'a> {
    pub cols: &'a [Vec<f64>],
    pub lam: &'a [f64],
    pub y: &'a [f64],
    pub tau: f64,
}

impl LogisticOracle<'_> {
    pub fn objective(&self, b: &[f64]) -> f64 {
        let p = xmul(self.cols, b, self.y.len());
        let loss: f64 = p.iter().zip(self.y).map(|(&p, &y)| softplus(p) - y * p).sum();
        loss + b.iter().zip(self.lam).map(|(b, l)| l * b.abs() + 0.5 * self.tau * b * b).sum::<f64>()
    }

    pub fn solve(&self, iters: usize) -> Vec<f64> {
        let n = self.y.len();
        let l = spectral_sq(self.cols, n) / 4.0 + self.tau;
        let grad = |b: &[f64]| {
            let p = xmul(self.cols, b, n);
            let r: Vec<f64> = p.iter().zip(self.y).map(|(&p, &y)| sigmoid(p) - y).collect();
            self.cols.iter().zip(b).map(|(c, &bb)| dot(c, &r) + self.tau * bb).collect()
        };
        let prox = |v: &[f64], t: f64| {
            v.iter().zip(self.lam).map(|(&x, &l)| x.signum() * (x.abs() - t * l).max(0.0)).collect()
        };
        fista(vec![0.0; self.cols.len()], l, iters, grad, prox, |b| self.objective(b))
    }
}

/// Multi-task problem `½‖Y_c − C·XW‖² + ρ‖C·XW‖* + Σ λ_u‖W_u‖ + (η/2)‖W‖²`
/// with `W` stored row-major (`p × T`).
pub struct MatrixOracle<'a> {
    pub cols: &'a [Vec<f64>],
    pub lam: &'a [f64],
    /// Centered responses.
    pub y: &'a DMatrix<f64>,
    pub rho: f64,
    pub eta: f64,
}

impl MatrixOracle<'_> {
    fn t(&self) -> usize {
        self.y.ncols()
    }

    /// Centered prediction `C·XW`.
    pub fn predict(&self, w: &[f64]) -> DMatrix<f64> {
        let n = self.y.nrows();
        let t = self.t();
        let mut z = DMatrix::<f64>::zeros(n, t);
        for (u, c) in self.cols.iter().enumerate() {
            for j in 0..t {
                let wj = w[u * t + j];
                if wj != 0.0 {
                    for i in 0..n {
                        z[(i, j)] += c[i] * wj;
                    }
                }
            }
        }
        for mut col in z.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
        }
        z
    }

    fn xt(&self, r: &DMatrix<f64>) -> Vec<f64> {
        let t = self.t();
        let mut out = vec![0.0; self.cols.len() * t];
        for (u, c) in self.cols.iter().enumerate() {
            for j in 0..t {
                out[u * t + j] = dot(c, r.column(j).as_slice());
            }
        }
        out
    }

    fn centered_cols(&self) -> Vec<Vec<f64>> {
        self.cols
            .iter()
            .map(|c| {
                let m = c.iter().sum::<f64>() / c.len() as f64;
                c.iter().map(|x| x - m).collect()
            })
            .collect()
    }

    fn prox_g(&self, v: &[f64], t: f64) -> Vec<f64> {
        let tt = self.t();
        let mut out = vec![0.0; v.len()];
        for (u, &l) in self.lam.iter().enumerate() {
            let row = &v[u * tt..(u + 1) * tt];
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > t * l {
                let s = (1.0 - t * l / norm) / (1.0 + t * self.eta);
                for j in 0..tt {
                    out[u * tt + j] = s * row[j];
                }
            }
        }
        out
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let z = self.predict(w);
        let fit = 0.5 * (self.y - &z).norm_squared();
        let nuc = if self.rho > 0.0 { self.rho * z.clone().svd(false, false).singular_values.sum() } else { 0.0 };
        let tt = self.t();
        let reg: f64 = self
            .lam
            .iter()
            .enumerate()
            .map(|(u, l)| {
                let sq: f64 = w[u * tt..(u + 1) * tt].iter().map(|x| x * x).sum();
                l * sq.sqrt() + 0.5 * self.eta * sq
            })
            .sum();
        fit + nuc + reg
    }

    /// Proximal gradient; only valid for `rho = 0`.
    pub fn solve_smooth(&self, iters: usize) -> Vec<f64> {
        assert_eq!(self.rho, 0.0);
        let cc = self.centered_cols();
        let l = spectral_sq(&cc, self.y.nrows());
        let grad = |w: &[f64]| {
            let r = self.predict(w) - self.y;
            self.xt(&r)
        };
        // the ridge term sits inside the prox
        fista(vec![0.0; self.cols.len() * self.t()], l.max(1e-12), iters, grad, |v, t| self.prox_g(v, t), |w| {
            self.objective(w)
        })
    }

    /// Primal-dual splitting on `g(W) + h(C·XW)` with
    /// `h(Z) = ½‖Y_c − Z‖² + ρ‖Z‖*`, accelerated using the strong convexity
    /// of `g`.
    pub fn solve_primal_dual(&self, iters: usize) -> Vec<f64> {
        let n = self.y.nrows();
        let t = self.t();
        let cc = self.centered_cols();
        let k_norm = spectral_sq(&cc, n).sqrt().max(1e-12);
        let mut tau = 1.0 / k_norm;
        let mut sigma = 1.0 / k_norm;
        let mut w = vec![0.0; self.cols.len() * t];
        let mut w_bar = w.clone();
        let mut dual = DMatrix::<f64>::zeros(n, t);
        let mut best = w.clone();
        let mut best_val = self.objective(&w);
        for it in 0..iters {
            // dual ascent with the prox of h* via Moreau
            let v = &dual + self.predict(&w_bar) * sigma;
            let scaled = &v / sigma;
            let prox_h = {
                let s = 1.0 / sigma;
                let m = (self.y * s + &scaled) / (1.0 + s);
                fck::linalg::shrink_singular_values(&m, s * self.rho / (1.0 + s)).unwrap()
            };
            dual = v - prox_h * sigma;
            let kt = {
                let mut c = dual.clone();
                for mut col in c.column_iter_mut() {
                    let m = col.mean();
                    col.add_scalar_mut(-m);
                }
                self.xt(&c)
            };
            let step: Vec<f64> = w.iter().zip(&kt).map(|(a, b)| a - tau * b).collect();
            let w_new = self.prox_g(&step, tau);
            let theta = 1.0 / (1.0 + 2.0 * self.eta * tau).sqrt();
            tau *= theta;
            sigma /= theta;
            w_bar = w_new.iter().zip(&w).map(|(a, b)| a + theta * (a - b)).collect();
            w = w_new;
            if it % 10 == 0 || it + 1 == iters {
                let val = self.objective(&w);
                if val < best_val {
                    best_val = val;
                    best = w.clone();
                }
            }
        }
        best
    }
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

pub struct FdStats {
    pub grad_rel: f64,
    pub sym_rel: f64,
    /// Directional Hessian error; NaN when the objective's Hessian is a
    /// surrogate rather than the exact second derivative.
    pub hess_rel: f64,
}

pub struct FdInstance {
    pub obj: Box<dyn DualObjective>,
    pub design: ActiveDesign,
    pub alpha: Vec<f64>,
    pub exact_hessian: bool,
    pub label: &'static str,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Midpoint of the widest gap between consecutive sorted values, so the
/// threshold sits as far from every entry as possible.
fn gap_midpoint(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.insert(0, 0.0);
    let k = (1..v.len()).max_by(|&a, &b| (v[a] - v[a - 1]).total_cmp(&(v[b] - v[b - 1]))).unwrap();
    (v[k] + v[k - 1]) / 2.0
}

fn center_blocks(v: &mut [f64], n: usize) {
    for block in v.chunks_mut(n) {
        let m = block.iter().sum::<f64>() / n as f64;
        block.iter_mut().for_each(|x| *x -= m);
    }
}

/// A random objective, working set and interior dual point. `kind` cycles
/// through basket, logistic, matrix without and with the nuclear term.
pub fn fd_instance(kind: usize, rng: &mut ChaCha8Rng) -> FdInstance {
    let n = rng.gen_range(10..=20);
    let d = rng.gen_range(3..=6);
    let a = if rng.gen::<bool>() { random_binary(rng, n, d, 0.5) } else { random_dense(rng, n, d) };
    let mut pool = all_sets(d, 3);
    let keep = rng.gen_range(2..=pool.len().min(8));
    let mut sets = Vec::new();
    for _ in 0..keep {
        sets.push(pool.swap_remove(rng.gen_range(0..pool.len())));
    }
    sets.sort();
    let cols = materialize(&a, &sets);
    let unit = |lam: f64| PenaltySchedule::flat(lam);
    match kind % 4 {
        0 => {
            let gamma = 0.5;
            let obj = Basket::new(BasketSpec { tau: 2.0, gamma, nonneg_dual: true }, &a).unwrap();
            let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
            let lam = gap_midpoint(cols.iter().map(|c| dot(c, &alpha)).collect()) - gamma / 2.0;
            let design = ActiveDesign::from_sets(&a, &sets, &unit(lam.max(1e-3))).unwrap();
            FdInstance { obj: Box::new(obj), design, alpha, exact_hessian: true, label: "basket" }
        }
        1 => {
            let y: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect();
            let obj = Logistic::new(LogisticSpec { labels: y.clone(), tau: 0.5 }, &a).unwrap();
            let alpha: Vec<f64> = y.iter().map(|yi| yi - rng.gen_range(0.05..0.95)).collect();
            let lam = gap_midpoint(cols.iter().map(|c| dot(c, &alpha).abs()).collect());
            let design = ActiveDesign::from_sets(&a, &sets, &unit(lam.max(1e-3))).unwrap();
            FdInstance { obj: Box::new(obj), design, alpha, exact_hessian: true, label: "logistic" }
        }
        k => {
            let t = rng.gen_range(2..=4);
            let y = DMatrix::from_fn(n, t, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let mut alpha: Vec<f64> = (0..n * t).map(|_| rng.gen::<f64>() - 0.5).collect();
            center_blocks(&mut alpha, n);
            let rho = if k == 3 {
                let mut yc = y.clone();
                for mut c in yc.column_iter_mut() {
                    let m = c.mean();
                    c.add_scalar_mut(-m);
                }
                let resid = yc - DMatrix::from_column_slice(n, t, &alpha);
                let sv = fck::linalg::singular_values(&resid).unwrap();
                gap_midpoint(sv.iter().copied().collect())
            } else {
                0.0
            };
            let spec = MatrixSpec { responses: y, rho, eta: 0.5, fit_intercept: true };
            let obj = MatrixObjective::new(spec, &a).unwrap();
            let lam = gap_midpoint(
                cols.iter()
                    .map(|c| norm2(&(0..t).map(|j| dot(c, &alpha[j * n..(j + 1) * n])).collect::<Vec<_>>()))
                    .collect(),
            );
            let design = ActiveDesign::from_sets(&a, &sets, &unit(lam.max(1e-3))).unwrap();
            let label = if k == 3 { "matrix-nuclear" } else { "matrix" };
            FdInstance { obj: Box::new(obj), design, alpha, exact_hessian: k == 2, label }
        }
    }
}

pub fn fd_check(inst: &FdInstance, rng: &mut ChaCha8Rng) -> FdStats {
    let (obj, design, alpha) = (&inst.obj, &inst.design, &inst.alpha);
    let n = obj.n_rows();
    let centered = obj.kind() == fck::ObjectiveKind::Matrix;
    let g = obj.gradient(design, alpha);
    let mut fd = fd_gradient(|x| obj.value(design, x), alpha, 1e-6);
    if centered {
        center_blocks(&mut fd, n);
    }
    let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let grad_rel = norm2(&diff) / (1.0 + norm2(&g));

    let mut u: Vec<f64> = (0..alpha.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut v: Vec<f64> = (0..alpha.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
    if centered {
        center_blocks(&mut u, n);
        center_blocks(&mut v, n);
    }
    let hu = obj.hessian_matvec(design, alpha, &u);
    let hv = obj.hessian_matvec(design, alpha, &v);
    let (a1, a2) = (dot(&u, &hv), dot(&v, &hu));
    let sym_rel = (a1 - a2).abs() / (1.0 + a1.abs());

    let hess_rel = if inst.exact_hessian {
        let eps = 1e-6;
        let shift = |s: f64| -> Vec<f64> { alpha.iter().zip(&v).map(|(a, d)| a + s * d).collect() };
        let gp = obj.gradient(design, &shift(eps));
        let gm = obj.gradient(design, &shift(-eps));
        let fd_h: Vec<f64> = gp.iter().zip(&gm).map(|(p, m)| -(p - m) / (2.0 * eps)).collect();
        let e: Vec<f64> = hv.iter().zip(&fd_h).map(|(a, b)| a - b).collect();
        norm2(&e) / (1.0 + norm2(&hv))
    } else {
        f64::NAN
    };
    FdStats { grad_rel, sym_rel, hess_rel }
}
