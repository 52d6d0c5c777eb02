//! Evaluation metrics.

use crate::error::{FckError, Result};

/// Rank-based ROC AUC; tied scores receive their mid-rank.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(FckError::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(FckError::NonFinite("scores"));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0.5).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(FckError::UndefinedMetric("AUC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k] > 0.5).count() as f64 * mid;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Coefficient of determination per column of column-major `n × T` blocks,
/// plus the mean over columns.
pub fn r2(pred: &[f64], truth: &[f64], n_rows: usize) -> Result<(Vec<f64>, f64)> {
    if pred.len() != truth.len() {
        return Err(FckError::DimensionMismatch { expected: truth.len(), got: pred.len() });
    }
    if n_rows == 0 || truth.len() % n_rows != 0 {
        return Err(FckError::DimensionMismatch { expected: n_rows, got: truth.len() });
    }
    let mut per = Vec::new();
    for (p, t) in pred.chunks(n_rows).zip(truth.chunks(n_rows)) {
        let mean = t.iter().sum::<f64>() / n_rows as f64;
        let sst: f64 = t.iter().map(|y| (y - mean).powi(2)).sum();
        if sst == 0.0 {
            return Err(FckError::UndefinedMetric("R² of a constant column"));
        }
        let sse: f64 = p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum();
        per.push(1.0 - sse / sst);
    }
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    Ok((per, mean))
}
