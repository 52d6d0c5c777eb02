//! Report files written next to a fitted model.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FckError, Result};
use crate::screening::ScreenResult;
use crate::solver::LogRecord;

/// One line of `interactions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub atoms: Vec<u32>,
    pub items: Vec<String>,
    pub stat: f64,
    pub threshold: f64,
}

pub fn interaction_records(res: &ScreenResult, items: Option<&[String]>) -> Vec<InteractionRecord> {
    res.emitted
        .iter()
        .map(|e| InteractionRecord {
            atoms: e.set.atoms().to_vec(),
            items: e.set.labels(items),
            stat: e.stat,
            threshold: e.threshold,
        })
        .collect()
}

pub fn interactions_jsonl(res: &ScreenResult, items: Option<&[String]>) -> Result<String> {
    let mut out = String::new();
    for r in interaction_records(res, items) {
        out.push_str(&serde_json::to_string(&r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_interactions_jsonl(text: &str) -> Result<Vec<InteractionRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Solver progress tagged with the path index.
pub fn log_tsv(log: &[(usize, LogRecord)]) -> String {
    let mut s = format!("path_index\t{}\n", LogRecord::HEADER);
    for (t, r) in log {
        s.push_str(&format!("{t}\t{}\n", r.to_tsv()));
    }
    s
}

/// Reads a dual vector: numbers separated by whitespace or commas, `#`
/// starting a comment.
pub fn parse_alpha(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for (col, tok) in body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).enumerate() {
            let v: f64 = tok.parse().map_err(|_| FckError::NonNumeric { row: line_no, col, cell: tok.to_string() })?;
            if !v.is_finite() {
                return Err(FckError::NonFinite("dual vector"));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(FckError::EmptyInput("dual vector".into()));
    }
    Ok(out)
}

pub fn read_alpha(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_alpha(&read_text(path)?)
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|source| FckError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    let io = |source| FckError::Io { path: path.to_path_buf(), source };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}
