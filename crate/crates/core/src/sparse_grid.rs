//! Index-set combinatorics for the sparse dyadic grid and a shared
//! function-evaluation cache keyed by exact dyadic points.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest dyadic level accepted for canonical points.
pub const MAX_LEVEL: u32 = 40;

/// All `k` in `Z^d_+` with `|k|_1 <= m`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelSet {
    dim: usize,
    budget: u32,
    members: Vec<Vec<u32>>,
}

impl LevelSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn members(&self) -> &[Vec<u32>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: &[u32]) -> bool {
        k.len() == self.dim && k.iter().sum::<u32>() <= self.budget
    }

    pub fn position(&self, k: &[u32]) -> Option<usize> {
        self.members.binary_search_by(|probe| probe.as_slice().cmp(k)).ok()
    }
}

pub fn enumerate_levels(d: usize, m: u32) -> LevelSet {
    fn recurse(prefix: &mut Vec<u32>, d: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            recurse(prefix, d, remaining - k, out);
            prefix.pop();
        }
    }
    let mut members = Vec::new();
    if d > 0 {
        recurse(&mut Vec::with_capacity(d), d, m, &mut members);
    }
    LevelSet {
        dim: d,
        budget: m,
        members,
    }
}

/// Which node set `I_r(k)` a grid uses along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeSet {
    /// `0 <= s <= 2^k`, used by every quasi-interpolant and by the order-2
    /// interpolant.
    Closed,
    /// `0 <= s <= 2^k - 1`, used by the piecewise-constant interpolant.
    LeftClosed,
}

impl NodeSet {
    /// `I_1` for `r = 1`, `I` otherwise.
    pub fn for_interpolant_order(r: usize) -> Self {
        if r == 1 {
            NodeSet::LeftClosed
        } else {
            NodeSet::Closed
        }
    }

    pub fn count(self, level: u32) -> u64 {
        match self {
            NodeSet::Closed => (1u64 << level) + 1,
            NodeSet::LeftClosed => 1u64 << level,
        }
    }

    pub fn last(self, level: u32) -> i64 {
        self.count(level) as i64 - 1
    }
}

/// Exact dyadic point of `[0,1]^d` stored as canonical `(level, numerator)`
/// pairs: the numerator is odd, or the pair is `(0,0)` or `(0,1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DyadicPoint {
    coords: Vec<(u32, u64)>,
}

fn canonical(level: u32, s: i64) -> Result<(u32, u64)> {
    if level > MAX_LEVEL || s < 0 || s > (1i64 << level) {
        return Err(Error::IndexOutOfRange { level, s });
    }
    if s == 0 {
        return Ok((0, 0));
    }
    let shift = (s.trailing_zeros()).min(level);
    Ok((level - shift, (s >> shift) as u64))
}

impl DyadicPoint {
    /// The point `2^{-k} s`.
    pub fn from_index(levels: &[u32], s: &[i64]) -> Result<Self> {
        if levels.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: levels.len(),
                got: s.len(),
            });
        }
        let coords = levels
            .iter()
            .zip(s)
            .map(|(&k, &si)| canonical(k, si))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }

    /// Recover the exact dyadic point from floating coordinates.
    pub fn from_coords(x: &[f64]) -> Result<Self> {
        let coords = x
            .iter()
            .map(|&xi| {
                if !(0.0..=1.0).contains(&xi) {
                    return Err(Error::OutOfDomain(x.to_vec()));
                }
                let scaled = xi * (1u64 << MAX_LEVEL) as f64;
                if scaled.fract() != 0.0 {
                    return Err(Error::NotDyadic(xi));
                }
                canonical(MAX_LEVEL, scaled as i64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn pairs(&self) -> &[(u32, u64)] {
        &self.coords
    }

    pub fn to_coords(&self) -> Vec<f64> {
        self.coords
            .iter()
            .map(|&(level, t)| t as f64 / (1u64 << level) as f64)
            .collect()
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords
            .iter()
            .map(|(level, t)| format!("({level},{t})"))
            .collect();
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "[{}]", parts.join(","))
        }
    }
}

/// Index range of the splines that do not vanish identically on `[0,1]`.
///
/// Integer translation gives `J(k) = {s : -r/2 < s < 2^k + r/2}`, half
/// translation gives `{s : -r < s < 2^{k+1} + r}` (and `0..=2^{k+1} + 1` for
/// `r = 1`).
pub fn shift_range(order: usize, level: u32, translation: crate::bspline::Translation) -> (i64, i64) {
    let r = order as i64;
    let n = 1i64 << level;
    match translation {
        crate::bspline::Translation::Integer => ((-r).div_euclid(2) + 1, (2 * n + r - 1).div_euclid(2)),
        // r = 1 is closed on the left, so the next half shift still touches x = 1
        crate::bspline::Translation::Half => (-r + 1, 2 * n + r - 1 + i64::from(r == 1)),
    }
}

/// The index set `J_r^d(k)` as per-axis inclusive ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSetJ {
    order: usize,
    levels: Vec<u32>,
    ranges: Vec<(i64, i64)>,
}

impl IndexSetJ {
    pub fn new(order: usize, levels: &[u32]) -> Self {
        let translation = crate::bspline::Translation::for_order(order);
        Self {
            order,
            levels: levels.to_vec(),
            ranges: levels
                .iter()
                .map(|&k| shift_range(order, k, translation))
                .collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges
            .iter()
            .map(|(lo, hi)| (hi - lo + 1) as usize)
            .product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: &[i64]) -> bool {
        s.len() == self.ranges.len()
            && s
                .iter()
                .zip(&self.ranges)
                .all(|(si, (lo, hi))| lo <= si && si <= hi)
    }
}

/// One node `2^{-k} s` of the multiset grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridNode {
    pub level: Vec<u32>,
    pub index: Vec<i64>,
}

impl GridNode {
    pub fn coords(&self) -> Vec<f64> {
        self.level
            .iter()
            .zip(&self.index)
            .map(|(&k, &s)| s as f64 / (1u64 << k) as f64)
            .collect()
    }

    pub fn point(&self) -> Result<DyadicPoint> {
        DyadicPoint::from_index(&self.level, &self.index)
    }
}

/// Row-major walk over the full tensor index box `lo..=hi` (last axis fastest).
pub(crate) fn for_each_index(ranges: &[(i64, i64)], mut visit: impl FnMut(&[i64])) {
    if ranges.iter().any(|(lo, hi)| hi < lo) {
        return;
    }
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        visit(&idx);
        let mut axis = ranges.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if idx[axis] < ranges[axis].1 {
                idx[axis] += 1;
                break;
            }
            idx[axis] = ranges[axis].0;
        }
    }
}

/// Every `(k, s)` with `k` in the level set and `s` in `I_r^d(k)`, levels in
/// lexicographic order and indices row-major.
pub fn grid_nodes(d: usize, m: u32, nodes: NodeSet) -> Vec<GridNode> {
    let mut out = Vec::new();
    for k in enumerate_levels(d, m).members() {
        let ranges: Vec<(i64, i64)> = k.iter().map(|&ki| (0, nodes.last(ki))).collect();
        for_each_index(&ranges, |s| {
            out.push(GridNode {
                level: k.clone(),
                index: s.to_vec(),
            })
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridCardinality {
    /// `sum_k |I_r^d(k)|`, the number of samples the sampling form uses.
    pub multiset_count: u64,
    /// Number of distinct points of the grid.
    pub distinct_count: u64,
}

/// Grid sizes for `r in {1, 2}` (any other order uses the closed node set).
///
/// The distinct count groups points by their canonical per-axis level `l`:
/// a point lies on the level-`k` grid iff `l <= k` componentwise, so it lies
/// on the sparse grid iff `|l|_1 <= m`.
pub fn grid_cardinality(d: usize, m: u32, r: usize) -> GridCardinality {
    let nodes = NodeSet::for_interpolant_order(r);
    let levels = enumerate_levels(d, m);
    let multiset_count = levels
        .members()
        .iter()
        .map(|k| k.iter().map(|&ki| nodes.count(ki)).product::<u64>())
        .sum();
    let per_level = |l: u32| -> u64 {
        match (l, nodes) {
            (0, NodeSet::Closed) => 2,
            (0, NodeSet::LeftClosed) => 1,
            (l, _) => 1u64 << (l - 1),
        }
    };
    let distinct_count = levels
        .members()
        .iter()
        .map(|l| l.iter().map(|&li| per_level(li)).product::<u64>())
        .sum();
    GridCardinality {
        multiset_count,
        distinct_count,
    }
}

/// Deduplicating, single-flight cache of function values at dyadic points.
///
/// The function is called at most once per canonical point for the lifetime
/// of the cache, also under concurrent use.
#[derive(Debug, Default)]
pub struct EvalCache {
    entries: Mutex<HashMap<DyadicPoint, Arc<OnceLock<f64>>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub distinct: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_eval<F>(&self, point: &DyadicPoint, f: &F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        let cell = {
            let mut entries = self.entries.lock().expect("cache lock poisoned");
            entries.entry(point.clone()).or_default().clone()
        };
        let mut evaluated = false;
        let value = *cell.get_or_init(|| {
            evaluated = true;
            f(&point.to_coords())
        });
        if evaluated {
            self.misses.fetch_add(1, Ordering::Relaxed);
        } else {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        if !value.is_finite() {
            return Err(Error::TaintedSample {
                point: point.clone(),
                value,
            });
        }
        Ok(value)
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            distinct: self.entries.lock().expect("cache lock poisoned").len() as u64,
        }
    }

    /// Stored values in canonical point order.
    pub fn snapshot(&self) -> Vec<(DyadicPoint, f64)> {
        let entries = self.entries.lock().expect("cache lock poisoned");
        let mut out: Vec<(DyadicPoint, f64)> = entries
            .iter()
            .filter_map(|(p, cell)| cell.get().map(|v| (p.clone(), *v)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

/// Values of `f` at `points` in request order, evaluating each distinct
/// canonical point once per cache lifetime.
pub fn sample<F>(f: &F, points: &[DyadicPoint], cache: &EvalCache) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    points.iter().map(|p| cache.get_or_eval(p, f)).collect()
}
