//! Bottom-up screening of the interaction poset.
//!
//! The search is ECLAT-style: a depth-first walk over prefix classes where a
//! candidate `u = F[k] ∪ F[j]` is formed by intersecting the columns of two
//! siblings. A candidate is emitted when its inclusion statistic exceeds the
//! order-dependent threshold. Its subtree is only explored when the
//! downward-closure bound, which dominates the statistic of every superset,
//! exceeds the threshold of the next order.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{similarity, split_dots, AtomicMatrix, Column, DualWeights, FeatureSet};
use crate::error::{FckError, Result};

/// Growth of the penalty with interaction order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PenaltyShape {
    Flat,
    /// `ρ(k) = base^(k-1)`
    Geometric { base: f64 },
    /// `ρ(k) = base^((k-1)^exponent)`
    SuperGeometric { base: f64, exponent: f64 },
}

impl PenaltyShape {
    pub fn rho(&self, order: usize) -> f64 {
        let k = order.max(1) as f64 - 1.0;
        match *self {
            PenaltyShape::Flat => 1.0,
            PenaltyShape::Geometric { base } => base.powf(k),
            PenaltyShape::SuperGeometric { base, exponent } => base.powf(k.powf(exponent)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PenaltyShape::Flat => Ok(()),
            PenaltyShape::Geometric { base } if base >= 1.0 => Ok(()),
            PenaltyShape::SuperGeometric { base, exponent } if base >= 1.0 && exponent >= 1.0 => Ok(()),
            other => Err(FckError::Config(format!("penalty {other} must have base >= 1 and exponent >= 1"))),
        }
    }

    /// True when `ρ(k) < ρ(k+1)` for every order.
    pub fn strictly_increasing(&self) -> bool {
        match *self {
            PenaltyShape::Flat => false,
            PenaltyShape::Geometric { base } | PenaltyShape::SuperGeometric { base, .. } => base > 1.0,
        }
    }
}

impl fmt::Display for PenaltyShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyShape::Flat => write!(f, "flat"),
            PenaltyShape::Geometric { base } => write!(f, "geo:{base}"),
            PenaltyShape::SuperGeometric { base, exponent } => write!(f, "supergeo:{base}:{exponent}"),
        }
    }
}

impl FromStr for PenaltyShape {
    type Err = FckError;

    /// Parses `flat`, `geo:BASE` or `supergeo:BASE:EXP`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| -> Result<f64> {
            p.parse().map_err(|_| FckError::Config(format!("bad number {p:?} in penalty {s:?}")))
        };
        let shape = match parts.as_slice() {
            ["flat"] => PenaltyShape::Flat,
            ["geo", b] => PenaltyShape::Geometric { base: num(b)? },
            ["supergeo", b, e] => PenaltyShape::SuperGeometric { base: num(b)?, exponent: num(e)? },
            _ => return Err(FckError::Config(format!("unknown penalty {s:?}"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// `threshold(k) = base_lambda · ρ(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    pub base_lambda: f64,
    pub shape: PenaltyShape,
}

impl PenaltySchedule {
    pub fn new(base_lambda: f64, shape: PenaltyShape) -> Self {
        Self { base_lambda, shape }
    }

    pub fn flat(base_lambda: f64) -> Self {
        Self::new(base_lambda, PenaltyShape::Flat)
    }

    pub fn threshold(&self, order: usize) -> f64 {
        self.base_lambda * self.shape.rho(order)
    }

    pub fn with_lambda(&self, base_lambda: f64) -> Self {
        Self { base_lambda, shape: self.shape }
    }
}

/// How the inclusion statistic and closure bound are formed from the dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreenMode {
    /// `|cᵀα|` against `max(cᵀα₊, cᵀα₋)`.
    Signed,
    /// `cᵀα` with `α ≥ 0`.
    Nonneg,
    /// `‖cᵀΛ‖₂` over response columns.
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenConfig {
    pub max_order: usize,
    /// Skip a child when its support similarity with both parents exceeds
    /// this value. 0 disables the heuristic.
    pub child_parent_prune: f64,
    pub mode: ScreenMode,
    /// Explore top-level subtrees on the rayon pool.
    pub parallel: bool,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self { max_order: 20, child_parent_prune: 0.0, mode: ScreenMode::Signed, parallel: false }
    }
}

impl ScreenConfig {
    pub fn with_mode(mode: ScreenMode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_order == 0 {
            return Err(FckError::Config("max_order must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.child_parent_prune) {
            return Err(FckError::Config("child_parent_prune must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// An emitted interaction with its materialized column.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub set: FeatureSet,
    pub column: Column,
    pub stat: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScreenResult {
    /// Sorted lexicographically by atoms.
    pub emitted: Vec<Interaction>,
    /// Join candidates (order ≥ 2) whose column was materialized.
    pub explored_count: usize,
    /// Candidates whose subtree was cut by the closure bound.
    pub pruned_by_closure: usize,
    /// Candidates skipped by the child/parent similarity heuristic.
    pub pruned_by_similarity: usize,
}

impl ScreenResult {
    pub fn sets(&self) -> Vec<FeatureSet> {
        self.emitted.iter().map(|e| e.set.clone()).collect()
    }
}

/// Inclusion statistic of a column at the dual point.
pub fn inclusion_statistic(c: &Column, w: &DualWeights, mode: ScreenMode) -> Result<f64> {
    Ok(stat_and_bound(c, w, mode)?.0)
}

/// Bound `B(u)` with `statistic(t) ≤ B(u)` for every `t ⊇ u`.
pub fn closure_bound(c: &Column, w: &DualWeights, cfg: &ScreenConfig) -> Result<f64> {
    Ok(stat_and_bound(c, w, cfg.mode)?.1)
}

fn stat_and_bound(c: &Column, w: &DualWeights, mode: ScreenMode) -> Result<(f64, f64)> {
    match mode {
        ScreenMode::Signed => {
            let (p, m) = split_dots(c, w, 0)?;
            Ok(((p - m).abs(), p.max(m)))
        }
        ScreenMode::Nonneg => {
            let (p, m) = split_dots(c, w, 0)?;
            Ok((p - m, p))
        }
        ScreenMode::Group => {
            let (mut s, mut b) = (0.0, 0.0);
            for j in 0..w.n_tasks() {
                let (p, m) = split_dots(c, w, j)?;
                s += (p - m) * (p - m);
                b += p.max(m) * p.max(m);
            }
            Ok((s.sqrt(), b.sqrt()))
        }
    }
}

struct Node {
    set: FeatureSet,
    column: Column,
    /// Atom this node added to its parent.
    atom: u32,
}

/// Column of `parent ∪ {sib.atom}`. Tidlists intersect with the sibling's
/// (shorter) list; dense columns multiply by the atom alone so shared atoms
/// are not counted twice.
fn join(a: &AtomicMatrix, parent: &Node, sib: &Node) -> (FeatureSet, Column) {
    let set = parent.set.union(&FeatureSet::singleton(sib.atom));
    let column = match (&parent.column, &sib.column) {
        (Column::Tidlist(_), Column::Tidlist(_)) => parent.column.product(&sib.column),
        _ => parent.column.product(a.column(sib.atom as usize)),
    };
    (set, column)
}

#[derive(Default)]
struct Partial {
    emitted: Vec<Interaction>,
    explored: usize,
    pruned_closure: usize,
    pruned_similar: usize,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.emitted.extend(other.emitted);
        self.explored += other.explored;
        self.pruned_closure += other.pruned_closure;
        self.pruned_similar += other.pruned_similar;
        self
    }
}

fn check_inputs(a: &AtomicMatrix, w: &DualWeights, cfg: &ScreenConfig) -> Result<()> {
    cfg.validate()?;
    if w.n_rows() != a.n_rows() {
        return Err(FckError::DimensionMismatch { expected: a.n_rows(), got: w.n_rows() });
    }
    if cfg.mode != ScreenMode::Group && w.n_tasks() != 1 {
        return Err(FckError::Config(format!("{:?} screening needs a single dual column", cfg.mode)));
    }
    Ok(())
}

/// Emits every interaction whose inclusion statistic exceeds its threshold,
/// pruning subtrees certified empty by the closure bound.
pub fn screen(a: &AtomicMatrix, w: &DualWeights, s: &PenaltySchedule, cfg: &ScreenConfig) -> Result<ScreenResult> {
    check_inputs(a, w, cfg)?;
    let mut root = Partial::default();
    let mut seeds: Vec<(f64, usize, Node)> = Vec::new();
    for k in 0..a.n_cols() {
        let column = a.column(k).clone();
        let (stat, bound) = stat_and_bound(&column, w, cfg.mode)?;
        let set = FeatureSet::singleton(k as u32);
        if stat > s.threshold(1) {
            root.emitted.push(Interaction { set: set.clone(), column: column.clone(), stat, threshold: s.threshold(1) });
        }
        if cfg.max_order > 1 && bound > s.threshold(2) {
            seeds.push((w.mass(&column), k, Node { set, column, atom: k as u32 }));
        } else {
            root.pruned_closure += 1;
        }
    }
    seeds.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let seeds: Vec<Node> = seeds.into_iter().map(|(_, _, n)| n).collect();

    let ctx = Ctx { a, w, s, cfg };
    let rest = if cfg.parallel {
        (0..seeds.len())
            .into_par_iter()
            .map(|k| ctx.explore(&seeds, k))
            .reduce(Partial::default, Partial::merge)
    } else {
        (0..seeds.len()).map(|k| ctx.explore(&seeds, k)).fold(Partial::default(), Partial::merge)
    };
    let mut all = root.merge(rest);
    all.emitted.sort_by(|x, y| x.set.cmp(&y.set));
    debug_assert!(all.emitted.windows(2).all(|p| p[0].set != p[1].set), "interaction emitted twice");
    Ok(ScreenResult {
        emitted: all.emitted,
        explored_count: all.explored,
        pruned_by_closure: all.pruned_closure,
        pruned_by_similarity: all.pruned_similar,
    })
}

struct Ctx<'a> {
    a: &'a AtomicMatrix,
    w: &'a DualWeights,
    s: &'a PenaltySchedule,
    cfg: &'a ScreenConfig,
}

impl Ctx<'_> {
    /// Joins `nodes[k]` with its later siblings and walks the resulting
    /// subtree depth-first on an explicit stack.
    fn explore(&self, nodes: &[Node], k: usize) -> Partial {
        let mut out = Partial::default();
        let first = self.children(nodes, k, &mut out);
        let mut stack: Vec<(Vec<Node>, usize)> = Vec::new();
        if !first.is_empty() {
            stack.push((first, 0));
        }
        while let Some((frame, idx)) = stack.last_mut() {
            if *idx >= frame.len() {
                stack.pop();
                continue;
            }
            let i = *idx;
            *idx += 1;
            let kids = self.children(frame, i, &mut out);
            if !kids.is_empty() {
                stack.push((kids, 0));
            }
        }
        out
    }

    fn children(&self, nodes: &[Node], k: usize, out: &mut Partial) -> Vec<Node> {
        let parent = &nodes[k];
        let mut kids = Vec::new();
        for sib in &nodes[k + 1..] {
            let (set, column) = join(self.a, parent, sib);
            out.explored += 1;
            let p = self.cfg.child_parent_prune;
            if p > 0.0
                && similarity(&column, &parent.column, self.a.n_rows()) > p
                && similarity(&column, &sib.column, self.a.n_rows()) > p
            {
                out.pruned_similar += 1;
                continue;
            }
            let order = set.order();
            // dimensions were validated up front
            let (stat, bound) = stat_and_bound(&column, self.w, self.cfg.mode).expect("validated dimensions");
            let thr = self.s.threshold(order);
            let extend = order < self.cfg.max_order && bound > self.s.threshold(order + 1);
            if !extend {
                out.pruned_closure += 1;
            }
            match (stat > thr, extend) {
                (true, true) => {
                    out.emitted.push(Interaction { set: set.clone(), column: column.clone(), stat, threshold: thr });
                    kids.push(Node { set, column, atom: sib.atom });
                }
                (true, false) => out.emitted.push(Interaction { set, column, stat, threshold: thr }),
                (false, true) => kids.push(Node { set, column, atom: sib.atom }),
                (false, false) => {}
            }
        }
        kids
    }
}

/// Interactions emitted at `w` that are missing from `active`. An empty
/// result certifies that `active` covers every inclusion at `w`.
pub fn verify_kkt<'a>(
    a: &AtomicMatrix,
    w: &DualWeights,
    s: &PenaltySchedule,
    cfg: &ScreenConfig,
    active: impl IntoIterator<Item = &'a FeatureSet>,
) -> Result<Vec<FeatureSet>> {
    Ok(kkt_violations(a, w, s, cfg, active)?.into_iter().map(|i| i.set).collect())
}

pub(crate) fn kkt_violations<'a>(
    a: &AtomicMatrix,
    w: &DualWeights,
    s: &PenaltySchedule,
    cfg: &ScreenConfig,
    active: impl IntoIterator<Item = &'a FeatureSet>,
) -> Result<Vec<Interaction>> {
    let have: HashSet<&FeatureSet> = active.into_iter().collect();
    let res = screen(a, w, s, cfg)?;
    Ok(res.emitted.into_iter().filter(|i| !have.contains(&i.set)).collect())
}

/// Greedy left-to-right removal of near-duplicate atomic columns. Returns the
/// reduced matrix and, for each kept column, its original index.
pub fn dedup_atoms(a: &AtomicMatrix, sim: f64) -> Result<(AtomicMatrix, Vec<usize>)> {
    if !(sim > 0.0 && sim <= 1.0) {
        return Err(FckError::Config(format!("similarity threshold {sim} outside (0, 1]")));
    }
    let mut kept: Vec<usize> = Vec::new();
    for k in 0..a.n_cols() {
        let c = a.column(k);
        let dup = kept.iter().any(|&j| similarity(c, a.column(j), a.n_rows()) >= sim);
        if !dup {
            kept.push(k);
        }
    }
    Ok((a.select_columns(&kept), kept))
}

/// `max_u statistic(u) / ρ(|u|)` over interactions of order ≤ `max_order`,
/// found by branch and bound on the closure bound.
pub fn max_normalized_statistic(
    a: &AtomicMatrix,
    w: &DualWeights,
    shape: &PenaltyShape,
    cfg: &ScreenConfig,
) -> Result<f64> {
    check_inputs(a, w, cfg)?;
    let mut best = 0.0_f64;
    let mut seeds: Vec<(f64, Node)> = Vec::new();
    for k in 0..a.n_cols() {
        let column = a.column(k).clone();
        let (stat, bound) = stat_and_bound(&column, w, cfg.mode)?;
        best = best.max(stat / shape.rho(1));
        seeds.push((bound, Node { set: FeatureSet::singleton(k as u32), column, atom: k as u32 }));
    }
    seeds.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut frames: Vec<(Vec<Node>, usize)> = Vec::new();
    let seeds: Vec<Node> = seeds
        .into_iter()
        .filter(|(b, n)| cfg.max_order > n.set.order() && b / shape.rho(2) > best)
        .map(|(_, n)| n)
        .collect();
    frames.push((seeds, 0));
    while let Some((frame, idx)) = frames.last_mut() {
        if *idx >= frame.len() {
            frames.pop();
            continue;
        }
        let k = *idx;
        *idx += 1;
        let parent = &frame[k];
        // the bound of the parent may have dropped below the running best
        let (_, pb) = stat_and_bound(&parent.column, w, cfg.mode)?;
        if pb / shape.rho(parent.set.order() + 1) <= best {
            continue;
        }
        let mut kids = Vec::new();
        for sib in &frame[k + 1..] {
            let (set, column) = join(a, parent, sib);
            let (stat, bound) = stat_and_bound(&column, w, cfg.mode)?;
            best = best.max(stat / shape.rho(set.order()));
            if set.order() < cfg.max_order && bound / shape.rho(set.order() + 1) > best {
                kids.push(Node { set, column, atom: sib.atom });
            }
        }
        if !kids.is_empty() {
            frames.push((kids, 0));
        }
    }
    Ok(best)
}

/// Itemsets whose support exceeds `min_support`, found by screening the
/// all-ones dual weights with a flat schedule. Returned in screening order
/// with their supports.
pub fn frequent_itemsets(a: &AtomicMatrix, min_support: f64, max_order: usize) -> Result<Vec<(FeatureSet, f64)>> {
    if !a.is_binary() {
        return Err(FckError::NotBinary);
    }
    let w = DualWeights::from_alpha(&vec![1.0; a.n_rows()], a.n_rows(), 1)?;
    let cfg = ScreenConfig { max_order, mode: ScreenMode::Nonneg, ..ScreenConfig::default() };
    let res = screen(a, &w, &PenaltySchedule::flat(min_support), &cfg)?;
    Ok(res.emitted.into_iter().map(|e| (e.set, e.stat)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_transactions;

    fn example() -> AtomicMatrix {
        parse_transactions("a b\na b c\nb c\na\n").unwrap()
    }

    fn set(v: &[u32]) -> FeatureSet {
        FeatureSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(PenaltySchedule::flat(2.0).threshold(3), 2.0);
        let geo = PenaltySchedule::new(1.0, PenaltyShape::Geometric { base: 1.5 });
        assert!((geo.threshold(3) - 2.25).abs() < 1e-15);
        let sg = PenaltySchedule::new(1.0, PenaltyShape::SuperGeometric { base: 1.5, exponent: 1.5 });
        assert!((sg.threshold(2) - 1.5).abs() < 1e-15);
        assert_eq!(sg.threshold(1), 1.0);
        for k in 1..15 {
            assert!(sg.threshold(k + 1) >= sg.threshold(k));
        }
    }

    #[test]
    fn penalty_parse() {
        assert_eq!("flat".parse::<PenaltyShape>().unwrap(), PenaltyShape::Flat);
        assert_eq!("geo:1.5".parse::<PenaltyShape>().unwrap(), PenaltyShape::Geometric { base: 1.5 });
        assert_eq!(
            "supergeo:1.5:1.5".parse::<PenaltyShape>().unwrap(),
            PenaltyShape::SuperGeometric { base: 1.5, exponent: 1.5 }
        );
        assert!("geo:0.5".parse::<PenaltyShape>().is_err());
        assert!("cubic".parse::<PenaltyShape>().is_err());
    }

    #[test]
    fn closure_bound_examples() {
        let c = Column::Tidlist(vec![0, 1, 2]);
        let w = DualWeights::from_alpha(&[1.0, -0.5, 0.25, 7.0], 4, 1).unwrap();
        assert_eq!(closure_bound(&c, &w, &ScreenConfig::with_mode(ScreenMode::Signed)).unwrap(), 1.25);

        let w = DualWeights::from_alpha(&[1.0, 1.0, 0.0, 0.0], 4, 1).unwrap();
        let c = Column::Tidlist(vec![0, 1]);
        assert_eq!(closure_bound(&c, &w, &ScreenConfig::with_mode(ScreenMode::Nonneg)).unwrap(), 2.0);

        // task 0: (p, m) = (3, 0); task 1: (p, m) = (0, 4)
        let w = DualWeights::from_alpha(&[1.0, 2.0, -1.0, -3.0], 2, 2).unwrap();
        let c = Column::Tidlist(vec![0, 1]);
        assert_eq!(closure_bound(&c, &w, &ScreenConfig::with_mode(ScreenMode::Group)).unwrap(), 5.0);
    }

    #[test]
    fn screen_worked_example() {
        let a = example();
        let w = DualWeights::from_alpha(&[1.0; 4], 4, 1).unwrap();
        let cfg = ScreenConfig::with_mode(ScreenMode::Nonneg);
        let res = screen(&a, &w, &PenaltySchedule::flat(1.5), &cfg).unwrap();
        assert_eq!(res.sets(), vec![set(&[0]), set(&[0, 1]), set(&[1]), set(&[1, 2]), set(&[2])]);
        let stats: Vec<f64> = res.emitted.iter().map(|e| e.stat).collect();
        assert_eq!(stats, vec![3.0, 2.0, 3.0, 2.0, 2.0]);
        assert!(res.sets().iter().all(|s| s != &set(&[0, 2]) && s != &set(&[0, 1, 2])));
    }

    #[test]
    fn screen_zero_dual_and_single_column() {
        let a = example();
        let w = DualWeights::from_alpha(&[0.0; 4], 4, 1).unwrap();
        let res = screen(&a, &w, &PenaltySchedule::flat(1.0), &ScreenConfig::default()).unwrap();
        assert!(res.emitted.is_empty());
        assert_eq!(res.explored_count, 0);
        assert_eq!(res.pruned_by_closure, 3);

        let one = AtomicMatrix::from_tidlists(5, vec![vec![0, 1, 2, 3, 4]]).unwrap();
        let w = DualWeights::from_alpha(&[1.0; 5], 5, 1).unwrap();
        let res = screen(&one, &w, &PenaltySchedule::flat(1.0), &ScreenConfig::default()).unwrap();
        assert_eq!(res.sets(), vec![set(&[0])]);
    }

    #[test]
    fn verify_kkt_examples() {
        let a = example();
        let w = DualWeights::from_alpha(&[1.0; 4], 4, 1).unwrap();
        let s = PenaltySchedule::flat(1.5);
        let cfg = ScreenConfig::with_mode(ScreenMode::Nonneg);
        let full = screen(&a, &w, &s, &cfg).unwrap().sets();
        assert!(verify_kkt(&a, &w, &s, &cfg, &full).unwrap().is_empty());
        let mut partial = full.clone();
        let dropped = partial.remove(2);
        assert_eq!(verify_kkt(&a, &w, &s, &cfg, &partial).unwrap(), vec![dropped]);
        let mut sup = full.clone();
        sup.push(set(&[0, 2]));
        assert!(verify_kkt(&a, &w, &s, &cfg, &sup).unwrap().is_empty());
    }

    #[test]
    fn dedup_examples() {
        let t = vec![0u32, 2, 5];
        let a = AtomicMatrix::from_tidlists(6, vec![t.clone(), t.clone(), vec![1]]).unwrap();
        let (r, kept) = dedup_atoms(&a, 0.999).unwrap();
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(r.n_cols(), 2);

        let a = AtomicMatrix::from_tidlists(6, vec![vec![0, 1], vec![0, 1, 2], vec![3]]).unwrap();
        assert_eq!(dedup_atoms(&a, 1.0).unwrap().1, vec![0, 1, 2]);

        let a = AtomicMatrix::from_tidlists(6, vec![t; 23]).unwrap();
        assert_eq!(dedup_atoms(&a, 0.999).unwrap().1, vec![0]);

        let d = AtomicMatrix::from_rows(&[vec![0.5, 0.25], vec![0.2, 0.1]]).unwrap();
        assert_eq!(dedup_atoms(&d, 0.999).unwrap().1, vec![0]);
    }

    #[test]
    fn child_parent_prune_skips_redundant_children() {
        // b is almost a subset of a, so {a,b} is nearly identical to b, but
        // not to a; c and d are identical, so {c,d} matches both parents.
        let a = AtomicMatrix::from_tidlists(
            8,
            vec![vec![0, 1, 2, 3, 4, 5, 6], vec![0, 1, 2], vec![4, 5, 6, 7], vec![4, 5, 6, 7]],
        )
        .unwrap();
        let w = DualWeights::from_alpha(&[1.0; 8], 8, 1).unwrap();
        let s = PenaltySchedule::flat(0.5);
        let cfg = ScreenConfig { child_parent_prune: 0.5, mode: ScreenMode::Nonneg, ..Default::default() };
        let res = screen(&a, &w, &s, &cfg).unwrap();
        let sets = res.sets();
        assert!(sets.contains(&set(&[0, 1])));
        assert!(!sets.contains(&set(&[2, 3])));
        assert!(res.pruned_by_similarity >= 1);
    }

    #[test]
    fn parallel_matches_sequential() {
        let a = example();
        let w = DualWeights::from_alpha(&[1.0, -0.3, 0.8, 0.5], 4, 1).unwrap();
        let s = PenaltySchedule::flat(0.2);
        let seq = screen(&a, &w, &s, &ScreenConfig::default()).unwrap();
        let par = screen(&a, &w, &s, &ScreenConfig { parallel: true, ..Default::default() }).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn max_normalized_statistic_example() {
        let a = example();
        let w = DualWeights::from_alpha(&[1.0; 4], 4, 1).unwrap();
        let cfg = ScreenConfig::with_mode(ScreenMode::Nonneg);
        assert_eq!(max_normalized_statistic(&a, &w, &PenaltyShape::Flat, &cfg).unwrap(), 3.0);
    }
}
