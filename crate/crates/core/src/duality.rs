//! Conjugates, sparsity oracles and primal recovery for the three
//! regularizer stacks.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::FeatureSet;
use crate::error::{FckError, Result};

/// `sign(x)·max(|x| − lam, 0)`
pub fn soft_threshold(x: f64, lam: f64) -> f64 {
    debug_assert!(lam >= 0.0);
    x.signum() * (x.abs() - lam).max(0.0)
}

pub fn clamp(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(FckError::Domain(format!("clamp bounds {lo} > {hi}")));
    }
    Ok(x.max(lo).min(hi))
}

/// `q·log q` with the continuous extension `0·log 0 = 0`.
pub(crate) fn xlogx(q: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else {
        q * q.ln()
    }
}

/// Conjugate of `x ↦ −y·x + log(1 + eˣ)` at `a`:
/// `(a+y)·log(a+y) + (1−a−y)·log(1−a−y)` on `0 ≤ a + y ≤ 1`.
pub fn logistic_conjugate(a: f64, y: f64) -> Result<f64> {
    let q = a + y;
    if !(0.0..=1.0).contains(&q) {
        return Err(FckError::Domain(format!("a + y = {q} outside [0, 1]")));
    }
    Ok(xlogx(q) + xlogx(1.0 - q))
}

/// Covering objective: `β_u = clamp((dot_u − λ_u)/γ, 0, 1)`.
pub fn primal_basket(dots: &[f64], lam: &[f64], gamma: f64) -> Vec<f64> {
    dots.iter().zip(lam).map(|(d, l)| ((d - l) / gamma).clamp(0.0, 1.0)).collect()
}

/// Elastic-Net logistic: `β_u = S(dot_u, λ_u)/τ`.
pub fn primal_logistic(dots: &[f64], lam: &[f64], tau: f64) -> Vec<f64> {
    dots.iter().zip(lam).map(|(&d, &l)| soft_threshold(d, l) / tau).collect()
}

/// Group shrinkage of one row `z = A_uᵀΛ`: `(1 − D_uu)/η · z` with
/// `D_uu = min(1, λ_u/‖z‖)`.
pub fn group_shrink(row: &[f64], lam: f64, eta: f64) -> Vec<f64> {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= lam {
        return vec![0.0; row.len()];
    }
    let scale = (1.0 - lam / norm) / eta;
    row.iter().map(|x| scale * x).collect()
}

pub fn primal_matrix(row_dots: &[Vec<f64>], lam: &[f64], eta: f64) -> Vec<Vec<f64>> {
    row_dots.iter().zip(lam).map(|(r, &l)| group_shrink(r, l, eta)).collect()
}

pub fn duality_gap(primal_value: f64, dual_value: f64) -> f64 {
    primal_value - dual_value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Basket,
    Logistic,
    Matrix,
}

/// Sparse primal model: one coefficient row per active interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalModel {
    pub kind: ObjectiveKind,
    pub n_atoms: usize,
    pub active: Vec<FeatureSet>,
    /// Length 1 rows for scalar objectives, length T for the matrix objective.
    pub coefficients: Vec<Vec<f64>>,
    /// Empty unless the objective fits an intercept.
    pub intercept: Vec<f64>,
}

impl PrimalModel {
    /// Drops rows whose entries are all zero and orders the rest by atoms.
    pub fn new(
        kind: ObjectiveKind,
        n_atoms: usize,
        rows: impl IntoIterator<Item = (FeatureSet, Vec<f64>)>,
        intercept: Vec<f64>,
    ) -> Self {
        let mut rows: Vec<(FeatureSet, Vec<f64>)> = rows.into_iter().filter(|(_, r)| r.iter().any(|&x| x != 0.0)).collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let (active, coefficients) = rows.into_iter().unzip();
        Self { kind, n_atoms, active, coefficients, intercept }
    }

    pub fn empty(kind: ObjectiveKind, n_atoms: usize, intercept: Vec<f64>) -> Self {
        Self::new(kind, n_atoms, std::iter::empty(), intercept)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn n_tasks(&self) -> usize {
        match self.kind {
            ObjectiveKind::Matrix => self.intercept.len().max(self.coefficients.first().map_or(1, Vec::len)),
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelFile>(text)?.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|source| FckError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| FckError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: ObjectiveKind,
    n_atoms: usize,
    intercept: Vec<f64>,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    atoms: FeatureSet,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    coef: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    coef_row: Option<Vec<f64>>,
}

impl From<&PrimalModel> for ModelFile {
    fn from(m: &PrimalModel) -> Self {
        let entries = m
            .active
            .iter()
            .zip(&m.coefficients)
            .map(|(s, r)| match m.kind {
                ObjectiveKind::Matrix => EntryFile { atoms: s.clone(), coef: None, coef_row: Some(r.clone()) },
                _ => EntryFile { atoms: s.clone(), coef: Some(r[0]), coef_row: None },
            })
            .collect();
        ModelFile { kind: m.kind, n_atoms: m.n_atoms, intercept: m.intercept.clone(), entries }
    }
}

impl TryFrom<ModelFile> for PrimalModel {
    type Error = FckError;

    fn try_from(f: ModelFile) -> Result<Self> {
        let mut rows = Vec::with_capacity(f.entries.len());
        for e in f.entries {
            let row = match (e.coef, e.coef_row) {
                (Some(c), None) => vec![c],
                (None, Some(r)) => r,
                _ => return Err(FckError::Config(format!("entry {} needs exactly one of coef, coef_row", e.atoms))),
            };
            if row.iter().any(|x| !x.is_finite()) {
                return Err(FckError::NonFinite("model coefficients"));
            }
            if let Some(&a) = e.atoms.atoms().last() {
                if a as usize >= f.n_atoms {
                    return Err(FckError::AtomOutOfRange { atom: a as usize, n_cols: f.n_atoms });
                }
            }
            rows.push((e.atoms, row));
        }
        Ok(PrimalModel::new(f.kind, f.n_atoms, rows, f.intercept))
    }
}
