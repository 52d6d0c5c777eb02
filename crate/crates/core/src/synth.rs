//! Reproducible datasets with planted interactions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{AtomicMatrix, FeatureSet};
use crate::error::{FckError, Result};

pub const DEFAULT_DENSITY: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Transactions with planted itemsets co-occurring; noise flips bits.
    Basket,
    /// Labels from thresholding the planted score plus Gaussian noise.
    Logistic,
    /// `T` responses `XW + noise`. With `rank`, the planted rows of `W`
    /// span a random `rank`-dimensional subspace.
    Matrix { tasks: usize, rank: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub planted: Vec<(FeatureSet, f64)>,
    /// Bit-flip probability for baskets, Gaussian standard deviation
    /// otherwise.
    pub noise: f64,
    pub kind: SynthKind,
    pub density: f64,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub a: AtomicMatrix,
    /// Binary labels for the logistic kind.
    pub labels: Option<Vec<f64>>,
    /// Responses for the matrix kind.
    pub responses: Option<DMatrix<f64>>,
    /// Planted coefficient rows; length `T` for the matrix kind.
    pub truth: Vec<(FeatureSet, Vec<f64>)>,
}

impl SynthData {
    pub fn planted_sets(&self) -> Vec<FeatureSet> {
        self.truth.iter().map(|(s, _)| s.clone()).collect()
    }
}

fn bernoulli_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize, p: f64) -> Vec<Vec<bool>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>() < p).collect()).collect()
}

fn to_matrix(rows: &[Vec<bool>], d: usize) -> Result<AtomicMatrix> {
    let mut tid = vec![Vec::new(); d];
    for (i, r) in rows.iter().enumerate() {
        for (k, &b) in r.iter().enumerate() {
            if b {
                tid[k].push(i as u32);
            }
        }
    }
    AtomicMatrix::from_tidlists(rows.len(), tid)
}

fn contains(row: &[bool], s: &FeatureSet) -> bool {
    s.atoms().iter().all(|&k| row[k as usize])
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn synth_planted(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.n == 0 || cfg.d == 0 {
        return Err(FckError::Config("synthetic data needs n >= 1 and d >= 1".into()));
    }
    if !(cfg.density > 0.0 && cfg.density < 1.0) || !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(FckError::Config("density must lie in (0, 1) and noise must be nonnegative".into()));
    }
    for (s, w) in &cfg.planted {
        if let Some(&k) = s.atoms().last() {
            if k as usize >= cfg.d {
                return Err(FckError::AtomOutOfRange { atom: k as usize, n_cols: cfg.d });
            }
        }
        if !w.is_finite() {
            return Err(FckError::NonFinite("planted weight"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = bernoulli_matrix(&mut rng, cfg.n, cfg.d, cfg.density);

    match cfg.kind {
        SynthKind::Basket => {
            if cfg.noise > 1.0 {
                return Err(FckError::Config("bit-flip probability must be at most 1".into()));
            }
            for row in rows.iter_mut() {
                for (s, _) in &cfg.planted {
                    if rng.gen::<f64>() < cfg.density {
                        s.atoms().iter().for_each(|&k| row[k as usize] = true);
                    }
                }
                for b in row.iter_mut() {
                    if rng.gen::<f64>() < cfg.noise {
                        *b = !*b;
                    }
                }
            }
            let truth = cfg.planted.iter().map(|(s, w)| (s.clone(), vec![*w])).collect();
            Ok(SynthData { a: to_matrix(&rows, cfg.d)?, labels: None, responses: None, truth })
        }
        SynthKind::Logistic => {
            let clean: Vec<f64> = rows
                .iter()
                .map(|r| cfg.planted.iter().filter(|(s, _)| contains(r, s)).map(|(_, w)| w).sum())
                .collect();
            let cut = clean.iter().sum::<f64>() / cfg.n as f64;
            let labels = clean.iter().map(|&s| if s + cfg.noise * normal(&mut rng) > cut { 1.0 } else { 0.0 }).collect();
            let truth = cfg.planted.iter().map(|(s, w)| (s.clone(), vec![*w])).collect();
            Ok(SynthData { a: to_matrix(&rows, cfg.d)?, labels: Some(labels), responses: None, truth })
        }
        SynthKind::Matrix { tasks, rank } => {
            if tasks == 0 || rank.is_some_and(|r| r == 0 || r > tasks) {
                return Err(FckError::Config("matrix synthesis needs tasks >= 1 and 1 <= rank <= tasks".into()));
            }
            let r = rank.unwrap_or(tasks);
            let basis = DMatrix::<f64>::from_fn(tasks, r, |_, _| normal(&mut rng));
            let truth: Vec<(FeatureSet, Vec<f64>)> = cfg
                .planted
                .iter()
                .map(|(s, w)| {
                    let g = nalgebra::DVector::<f64>::from_fn(r, |_, _| normal(&mut rng));
                    let v = &basis * g;
                    let v = v.scale(w / v.norm());
                    (s.clone(), v.iter().cloned().collect())
                })
                .collect();
            let mut y = DMatrix::<f64>::zeros(cfg.n, tasks);
            for (i, row) in rows.iter().enumerate() {
                for (s, w) in &truth {
                    if contains(row, s) {
                        for j in 0..tasks {
                            y[(i, j)] += w[j];
                        }
                    }
                }
                for j in 0..tasks {
                    y[(i, j)] += cfg.noise * normal(&mut rng);
                }
            }
            Ok(SynthData { a: to_matrix(&rows, cfg.d)?, labels: None, responses: Some(y), truth })
        }
    }
}
