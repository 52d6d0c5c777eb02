//! Atomic feature storage and implicit interaction columns.
//!
//! Binary data is held as tidlists (sorted row indices of the nonzeros), so
//! the column of an interaction is the intersection of its atoms' tidlists.
//! Non-binary data falls back to dense columns with values in `[0, 1]`, where
//! an interaction column is the elementwise product of its atoms.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FckError, Result};

/// A non-empty, strictly increasing set of atom indices naming one
/// interaction column.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct FeatureSet(Vec<u32>);

impl FeatureSet {
    pub fn new(mut atoms: Vec<u32>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(FckError::InvalidFeatureSet("empty".into()));
        }
        atoms.sort_unstable();
        if atoms.windows(2).any(|w| w[0] == w[1]) {
            return Err(FckError::InvalidFeatureSet(format!("duplicate atom in {atoms:?}")));
        }
        Ok(Self(atoms))
    }

    pub fn singleton(atom: u32) -> Self {
        Self(vec![atom])
    }

    pub fn atoms(&self) -> &[u32] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Sorted union of two sets.
    pub fn union(&self, other: &FeatureSet) -> FeatureSet {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        FeatureSet(out)
    }

    pub fn is_subset_of(&self, other: &FeatureSet) -> bool {
        let mut it = other.0.iter();
        self.0.iter().all(|a| it.by_ref().any(|b| b == a))
    }

    /// Item tokens for each atom, falling back to the numeric id.
    pub fn labels(&self, items: Option<&[String]>) -> Vec<String> {
        self.0
            .iter()
            .map(|&a| match items.and_then(|it| it.get(a as usize)) {
                Some(s) => s.clone(),
                None => a.to_string(),
            })
            .collect()
    }
}

impl TryFrom<Vec<u32>> for FeatureSet {
    type Error = FckError;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        FeatureSet::new(v)
    }
}

impl From<FeatureSet> for Vec<u32> {
    fn from(s: FeatureSet) -> Self {
        s.0
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Binary,
    Dense,
}

/// One column of the atomic matrix or of the implicit interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Sorted row indices whose entry is 1.
    Tidlist(Vec<u32>),
    /// One value in `[0, 1]` per row.
    Dense(Vec<f64>),
}

impl Column {
    pub fn is_binary(&self) -> bool {
        matches!(self, Column::Tidlist(_))
    }

    /// Number of nonzero entries.
    pub fn support_len(&self) -> usize {
        match self {
            Column::Tidlist(t) => t.len(),
            Column::Dense(v) => v.iter().filter(|&&x| x != 0.0).count(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Column::Tidlist(t) => t.is_empty(),
            Column::Dense(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    /// `cᵀv` for a dense vector `v` of length `n_rows`.
    pub fn dot(&self, v: &[f64]) -> f64 {
        match self {
            Column::Tidlist(t) => t.iter().map(|&i| v[i as usize]).sum(),
            Column::Dense(c) => c.iter().zip(v).map(|(a, b)| a * b).sum(),
        }
    }

    /// `out += scale * c`.
    pub fn axpy(&self, scale: f64, out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        match self {
            Column::Tidlist(t) => {
                for &i in t {
                    out[i as usize] += scale;
                }
            }
            Column::Dense(c) => {
                for (o, x) in out.iter_mut().zip(c) {
                    *o += scale * x;
                }
            }
        }
    }

    /// Elementwise product with another column of the same representation.
    pub fn product(&self, other: &Column) -> Column {
        match (self, other) {
            (Column::Tidlist(a), Column::Tidlist(b)) => Column::Tidlist(intersect_sorted(a, b)),
            (Column::Dense(a), Column::Dense(b)) => {
                Column::Dense(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (Column::Tidlist(t), Column::Dense(d)) | (Column::Dense(d), Column::Tidlist(t)) => {
                let mut out = vec![0.0; d.len()];
                for &i in t {
                    out[i as usize] = d[i as usize];
                }
                Column::Dense(out)
            }
        }
    }

    pub fn to_dense(&self, n_rows: usize) -> Vec<f64> {
        match self {
            Column::Tidlist(t) => {
                let mut out = vec![0.0; n_rows];
                for &i in t {
                    out[i as usize] = 1.0;
                }
                out
            }
            Column::Dense(v) => v.clone(),
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            Column::Tidlist(t) => t.len() as f64,
            Column::Dense(v) => v.iter().map(|x| x * x).sum(),
        }
    }
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// The base feature matrix `A ∈ [0,1]^{n×d}`, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMatrix {
    n_rows: usize,
    columns: Vec<Column>,
    kind: MatrixKind,
    items: Option<Vec<String>>,
}

impl AtomicMatrix {
    pub fn from_tidlists(n_rows: usize, tidlists: Vec<Vec<u32>>) -> Result<Self> {
        for (k, t) in tidlists.iter().enumerate() {
            if t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(FckError::InvalidFeatureSet(format!(
                    "tidlist of column {k} is not strictly increasing"
                )));
            }
            if let Some(&last) = t.last() {
                if last as usize >= n_rows {
                    return Err(FckError::DimensionMismatch {
                        expected: n_rows,
                        got: last as usize + 1,
                    });
                }
            }
        }
        Ok(Self {
            n_rows,
            columns: tidlists.into_iter().map(Column::Tidlist).collect(),
            kind: MatrixKind::Binary,
            items: None,
        })
    }

    /// Builds a matrix from dense columns, switching to tidlists when every
    /// entry is 0 or 1.
    pub fn from_dense_columns(n_rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        for (k, c) in columns.iter().enumerate() {
            if c.len() != n_rows {
                return Err(FckError::DimensionMismatch { expected: n_rows, got: c.len() });
            }
            for (i, &v) in c.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(FckError::OutOfRange { row: i, col: k, value: v });
                }
            }
        }
        let binary = columns.iter().flatten().all(|&v| v == 0.0 || v == 1.0);
        let (kind, columns) = if binary {
            let cols = columns
                .into_iter()
                .map(|c| {
                    Column::Tidlist(
                        c.iter()
                            .enumerate()
                            .filter(|(_, &v)| v == 1.0)
                            .map(|(i, _)| i as u32)
                            .collect(),
                    )
                })
                .collect();
            (MatrixKind::Binary, cols)
        } else {
            (MatrixKind::Dense, columns.into_iter().map(Column::Dense).collect())
        };
        Ok(Self { n_rows, columns, kind, items: None })
    }

    /// Row-major convenience constructor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut cols = vec![Vec::with_capacity(n); d];
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(FckError::DimensionMismatch { expected: d, got: r.len() });
            }
            for (k, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(FckError::OutOfRange { row: i, col: k, value: v });
                }
                cols[k].push(v);
            }
        }
        Self::from_dense_columns(n, cols)
    }

    pub fn with_items(mut self, items: Vec<String>) -> Result<Self> {
        if items.len() != self.columns.len() {
            return Err(FckError::DimensionMismatch { expected: self.columns.len(), got: items.len() });
        }
        self.items = Some(items);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn is_binary(&self) -> bool {
        self.kind == MatrixKind::Binary
    }

    pub fn column(&self, k: usize) -> &Column {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn items(&self) -> Option<&[String]> {
        self.items.as_deref()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> AtomicMatrix {
        AtomicMatrix {
            n_rows: self.n_rows,
            columns: keep.iter().map(|&k| self.columns[k].clone()).collect(),
            kind: self.kind,
            items: self.items.as_ref().map(|it| keep.iter().map(|&k| it[k].clone()).collect()),
        }
    }

    /// Keeps only the listed rows (e.g. a train/test split).
    pub fn select_rows(&self, rows: &[usize]) -> AtomicMatrix {
        let mut remap = vec![u32::MAX; self.n_rows];
        for (new, &old) in rows.iter().enumerate() {
            remap[old] = new as u32;
        }
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Tidlist(t) => {
                    let mut v: Vec<u32> =
                        t.iter().map(|&i| remap[i as usize]).filter(|&i| i != u32::MAX).collect();
                    v.sort_unstable();
                    Column::Tidlist(v)
                }
                Column::Dense(d) => Column::Dense(rows.iter().map(|&i| d[i]).collect()),
            })
            .collect();
        AtomicMatrix { n_rows: rows.len(), columns, kind: self.kind, items: self.items.clone() }
    }

    /// Column of the interaction `u`: `∏_{k∈u} A_k`.
    pub fn interaction_column(&self, u: &FeatureSet) -> Result<Column> {
        let atoms = u.atoms();
        for &a in atoms {
            if a as usize >= self.columns.len() {
                return Err(FckError::AtomOutOfRange { atom: a as usize, n_cols: self.columns.len() });
            }
        }
        let mut col = self.columns[atoms[0] as usize].clone();
        for &a in &atoms[1..] {
            col = col.product(&self.columns[a as usize]);
        }
        Ok(col)
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_cols()]; self.n_rows];
        for (k, c) in self.columns.iter().enumerate() {
            for (i, v) in c.to_dense(self.n_rows).into_iter().enumerate() {
                rows[i][k] = v;
            }
        }
        rows
    }
}

/// Positive and negative parts of a dual variable, one block of `n_rows`
/// entries per response column.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWeights {
    n_rows: usize,
    n_tasks: usize,
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl DualWeights {
    /// Splits a column-major dual vector of length `n_rows * n_tasks`.
    pub fn from_alpha(alpha: &[f64], n_rows: usize, n_tasks: usize) -> Result<Self> {
        if alpha.len() != n_rows * n_tasks {
            return Err(FckError::DimensionMismatch { expected: n_rows * n_tasks, got: alpha.len() });
        }
        let pos = alpha.iter().map(|&a| a.max(0.0)).collect();
        let neg = alpha.iter().map(|&a| (-a).max(0.0)).collect();
        Ok(Self { n_rows, n_tasks, pos, neg })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn pos(&self, task: usize) -> &[f64] {
        &self.pos[task * self.n_rows..(task + 1) * self.n_rows]
    }

    pub fn neg(&self, task: usize) -> &[f64] {
        &self.neg[task * self.n_rows..(task + 1) * self.n_rows]
    }

    /// Mass of each atomic column against the positive parts, summed over
    /// tasks. Used to order the traversal seeds.
    pub fn mass(&self, c: &Column) -> f64 {
        (0..self.n_tasks).map(|j| c.dot(self.pos(j)) + c.dot(self.neg(j))).sum()
    }
}

/// `(cᵀα₊, cᵀα₋)` for one response column.
pub fn split_dots(c: &Column, w: &DualWeights, task: usize) -> Result<(f64, f64)> {
    if let Column::Dense(v) = c {
        if v.len() != w.n_rows() {
            return Err(FckError::DimensionMismatch { expected: w.n_rows(), got: v.len() });
        }
    }
    if let Column::Tidlist(t) = c {
        if t.last().is_some_and(|&i| i as usize >= w.n_rows()) {
            return Err(FckError::DimensionMismatch {
                expected: w.n_rows(),
                got: *t.last().unwrap() as usize + 1,
            });
        }
    }
    if task >= w.n_tasks() {
        return Err(FckError::DimensionMismatch { expected: w.n_tasks(), got: task + 1 });
    }
    Ok((c.dot(w.pos(task)), c.dot(w.neg(task))))
}

/// Support overlap `|a ∩ b| / |a ∪ b|`; 1 when both are empty.
pub fn jaccard(a: &Column, b: &Column) -> Result<f64> {
    match (a, b) {
        (Column::Tidlist(x), Column::Tidlist(y)) => {
            let inter = intersection_len(x, y);
            let union = x.len() + y.len() - inter;
            Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
        }
        _ => Err(FckError::NotBinary),
    }
}

/// Cosine similarity; 1 when both columns are zero, 0 when exactly one is.
pub fn cosine(a: &Column, b: &Column, n_rows: usize) -> f64 {
    let (na, nb) = (a.norm_sq(), b.norm_sq());
    if na == 0.0 && nb == 0.0 {
        return 1.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot = match (a, b) {
        (Column::Tidlist(x), Column::Tidlist(y)) => intersection_len(x, y) as f64,
        (x, y) => x.dot(&y.to_dense(n_rows)),
    };
    dot / (na.sqrt() * nb.sqrt())
}

/// Jaccard for binary columns, cosine otherwise.
pub fn similarity(a: &Column, b: &Column, n_rows: usize) -> f64 {
    jaccard(a, b).unwrap_or_else(|_| cosine(a, b, n_rows))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| FckError::Io { path: path.to_path_buf(), source })
}

/// Reads a transaction file: one transaction per line, items separated by
/// whitespace. Item tokens become columns in first-seen order.
pub fn load_transactions(path: impl AsRef<Path>) -> Result<AtomicMatrix> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_transactions(&text).map_err(|e| match e {
        FckError::EmptyInput(_) => FckError::EmptyInput(path.display().to_string()),
        e => e,
    })
}

pub fn parse_transactions(text: &str) -> Result<AtomicMatrix> {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut items: Vec<String> = Vec::new();
    let mut tidlists: Vec<Vec<u32>> = Vec::new();
    let mut n_rows = 0usize;
    for (row, line) in text.lines().enumerate() {
        n_rows += 1;
        let mut seen: Vec<u32> = Vec::new();
        for tok in line.split_whitespace() {
            let id = *ids.entry(tok).or_insert_with(|| {
                items.push(tok.to_string());
                tidlists.push(Vec::new());
                (items.len() - 1) as u32
            });
            if seen.contains(&id) {
                return Err(FckError::DuplicateItem { line: row + 1, item: tok.to_string() });
            }
            seen.push(id);
            tidlists[id as usize].push(row as u32);
        }
    }
    if n_rows == 0 || items.is_empty() {
        return Err(FckError::EmptyInput("transaction data".into()));
    }
    AtomicMatrix::from_tidlists(n_rows, tidlists)?.with_items(items)
}

/// Parses transactions against a fixed item vocabulary, so that column `k`
/// is `items[k]`. Unknown tokens are ignored and returned.
pub fn parse_transactions_with_items(text: &str, items: &[String]) -> Result<(AtomicMatrix, Vec<String>)> {
    let ids: HashMap<&str, u32> = items.iter().enumerate().map(|(k, s)| (s.as_str(), k as u32)).collect();
    let mut tidlists: Vec<Vec<u32>> = vec![Vec::new(); items.len()];
    let mut unknown: Vec<String> = Vec::new();
    let mut n_rows = 0usize;
    for (row, line) in text.lines().enumerate() {
        n_rows += 1;
        for tok in line.split_whitespace() {
            match ids.get(tok) {
                Some(&id) => {
                    let t = &mut tidlists[id as usize];
                    if t.last() == Some(&(row as u32)) {
                        return Err(FckError::DuplicateItem { line: row + 1, item: tok.to_string() });
                    }
                    t.push(row as u32);
                }
                None if !unknown.iter().any(|u| u == tok) => unknown.push(tok.to_string()),
                None => {}
            }
        }
    }
    if n_rows == 0 {
        return Err(FckError::EmptyInput("transaction data".into()));
    }
    Ok((AtomicMatrix::from_tidlists(n_rows, tidlists)?.with_items(items.to_vec())?, unknown))
}

/// Reads a CSV file with a header row. The last `response_cols` columns are
/// responses; the rest are features in `[0, 1]`.
pub fn load_dense(path: impl AsRef<Path>, response_cols: usize) -> Result<(AtomicMatrix, DMatrix<f64>)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| FckError::Io { path: path.to_path_buf(), source })?;
    parse_dense(file, response_cols)
}

pub fn parse_dense<R: std::io::Read>(reader: R, response_cols: usize) -> Result<(AtomicMatrix, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < response_cols {
        return Err(FckError::DimensionMismatch { expected: response_cols, got: header.len() });
    }
    let d = header.len() - response_cols;
    let mut feats: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut resp: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| FckError::NonNumeric {
                row,
                col,
                cell: cell.to_string(),
            })?;
            if col < d {
                if !(0.0..=1.0).contains(&v) {
                    return Err(FckError::OutOfRange { row, col, value: v });
                }
                feats[col].push(v);
            } else {
                if !v.is_finite() {
                    return Err(FckError::NonNumeric { row, col, cell: cell.to_string() });
                }
                resp.push(v);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(FckError::EmptyInput("csv data".into()));
    }
    let a = AtomicMatrix::from_dense_columns(n, feats)?.with_items(header[..d].to_vec())?;
    let y = DMatrix::from_row_slice(n, response_cols, &resp);
    Ok((a, y))
}

#[derive(Serialize, Deserialize)]
struct ItemMap {
    items: Vec<String>,
}

/// Writes the item-token map that accompanies emitted interactions.
pub fn save_item_map(items: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(&ItemMap { items: items.to_vec() })?;
    fs::write(path, json).map_err(|source| FckError::Io { path: path.to_path_buf(), source })
}

pub fn load_item_map(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let text = read_to_string(path.as_ref())?;
    Ok(serde_json::from_str::<ItemMap>(&text)?.items)
}
