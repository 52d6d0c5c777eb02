//! Thin SVD helpers for tall matrices with few columns.
//!
//! Singular values and right singular vectors come from the eigendecomposition
//! of the `T × T` Gram matrix, so the cost is linear in the number of rows.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{FckError, Result};

/// Right singular vectors (columns of `q`) and singular values of `m`,
/// sorted by decreasing singular value.
#[derive(Debug, Clone)]
pub struct GramSvd {
    pub singular_values: DVector<f64>,
    pub q: DMatrix<f64>,
}

pub fn gram_svd(m: &DMatrix<f64>) -> Result<GramSvd> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(FckError::NonFinite("singular value decomposition"));
    }
    let gram = m.transpose() * m;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let t = order.len();
    let mut q = DMatrix::zeros(t, t);
    let mut s = DVector::zeros(t);
    for (k, &i) in order.iter().enumerate() {
        s[k] = eig.eigenvalues[i].max(0.0).sqrt();
        q.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(GramSvd { singular_values: s, q })
}

pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(gram_svd(m)?.singular_values)
}

/// Singular value soft-thresholding `U·diag((σ − ρ)₊)·Vᵀ`.
pub fn shrink_singular_values(m: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    if rho == 0.0 {
        return Ok(m.clone());
    }
    let svd = gram_svd(m)?;
    let scale = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values.iter().map(|&s| if s > rho { 1.0 - rho / s } else { 0.0 }),
    );
    let q = &svd.q;
    Ok(m * q * DMatrix::from_diagonal(&scale) * q.transpose())
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m)?.sum())
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let top = s.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > rel_tol * top).count())
}
