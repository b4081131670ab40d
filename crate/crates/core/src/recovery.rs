//! The Smolyak sampling operator `R_m(f) = sum_{|k|_1 <= m} q_k(f)`.
//!
//! Samples live on the full tensor grids `I^d(k)`, `k in Delta(m)`, whose
//! union is the sparse grid `G^d(m)`. Mixed coefficient functionals are
//! tensor products of univariate ones, so each block `c^r_{k,.}(f)` is
//! obtained by applying the univariate level operator along axis 1, then
//! axis 2, and so on.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bspline::{spline_for, Translation};
use crate::error::{Error, Result};
use crate::quasi_interpolant::{LevelOperator, LevelOperators, Mask};
use crate::sparse_grid::{enumerate_levels, for_each_index, CacheStats, DyadicPoint, EvalCache, LevelSet};
use crate::spline::{apply_rows, strides_for, AxisTerms, CompensatedSum, LevelSpline};

fn check_point(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if x.iter().any(|xi| !(0.0..=1.0).contains(xi)) {
        return Err(Error::OutOfDomain(x.to_vec()));
    }
    Ok(())
}

fn node_ranges(levels: &[u32]) -> Vec<(i64, i64)> {
    levels.iter().map(|&k| (0, 1i64 << k)).collect()
}

/// Function values on every block `I^d(k)`, `k in Delta(m)`.
///
/// Each block is row-major over `j in prod_i {0..2^{k_i}}`, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid {
    levels: LevelSet,
    blocks: Vec<Vec<f64>>,
}

impl SampledGrid {
    /// Sample `f` through `cache`, in parallel over level blocks.
    pub fn sample<F>(f: &F, d: usize, m: u32, cache: &EvalCache) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync + ?Sized,
    {
        Self::build(d, m, |point| cache.get_or_eval(point, f))
    }

    /// Take samples from a table keyed by canonical point.
    pub fn from_values(d: usize, m: u32, values: &HashMap<DyadicPoint, f64>) -> Result<Self> {
        Self::build(d, m, |point| {
            values
                .get(point)
                .copied()
                .ok_or_else(|| Error::SampledData(format!("missing value at grid node {point}")))
        })
    }

    fn build(d: usize, m: u32, value: impl Fn(&DyadicPoint) -> Result<f64> + Sync) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        let levels = enumerate_levels(d, m);
        let blocks = levels
            .members()
            .par_iter()
            .map(|k| {
                let mut out = Vec::new();
                let mut err = None;
                for_each_index(&node_ranges(k), |j| {
                    if err.is_some() {
                        return;
                    }
                    match DyadicPoint::from_index(k, j).and_then(|p| value(&p)) {
                        Ok(v) => out.push(v),
                        Err(e) => err = Some(e),
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(out),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels, blocks })
    }

    /// Load CSV rows `x_1, ..., x_d, value` covering exactly the nodes of
    /// `G^d(m)`. A header row is allowed.
    pub fn from_csv(path: impl AsRef<Path>, d: usize, m: u32) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut values = HashMap::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::SampledData(format!("row {}: {e}", line + 1))),
            };
            if row.len() != d + 1 {
                return Err(Error::SampledData(format!(
                    "row {}: expected {} columns, got {}",
                    line + 1,
                    d + 1,
                    row.len()
                )));
            }
            let point = DyadicPoint::from_coords(&row[..d])
                .map_err(|e| Error::SampledData(format!("row {}: {e}", line + 1)))?;
            let depth: u32 = point.pairs().iter().map(|&(l, _)| l).sum();
            if depth > m {
                return Err(Error::SampledData(format!(
                    "row {}: point {point} is not a node of the level-{m} sparse grid",
                    line + 1
                )));
            }
            if values.insert(point.clone(), row[d]).is_some() {
                return Err(Error::SampledData(format!("row {}: duplicate node {point}", line + 1)));
            }
        }
        Self::from_values(d, m, &values)
    }

    pub fn dim(&self) -> usize {
        self.levels.dim()
    }

    pub fn budget(&self) -> u32 {
        self.levels.budget()
    }

    pub fn levels(&self) -> &LevelSet {
        &self.levels
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, k: &[u32]) -> Option<&[f64]> {
        self.levels.position(k).map(|i| self.blocks[i].as_slice())
    }
}

/// Apply one univariate operator per axis to a sample block, axis 1 first.
fn tensor_apply<'a>(
    samples: &[f64],
    levels: &[u32],
    operator: impl Fn(u32) -> &'a LevelOperator,
) -> (Vec<(i64, i64)>, Vec<f64>) {
    let mut shape: Vec<usize> = levels.iter().map(|&k| (1usize << k) + 1).collect();
    let mut data = samples.to_vec();
    let mut ranges = Vec::with_capacity(levels.len());
    for (axis, &k) in levels.iter().enumerate() {
        let op = operator(k);
        data = apply_rows(&data, &mut shape, axis, op.rows());
        ranges.push((op.first_row(), op.first_row() + op.rows().len() as i64 - 1));
    }
    (ranges, data)
}

/// Blocks `c^r_{k,s}(f)`, `s in J_r^d(k)`, for every `k in Delta(m)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    dim: usize,
    order: usize,
    budget: u32,
    #[serde(skip)]
    levels: LevelSet,
    blocks: Vec<LevelSpline>,
}

impl CoefficientTable {
    /// Coefficients from precomputed samples.
    pub fn from_samples(samples: &SampledGrid, mask: &Mask) -> Self {
        let ops = LevelOperators::new(mask, samples.budget());
        let blocks = samples
            .levels()
            .members()
            .par_iter()
            .zip(samples.blocks().par_iter())
            .map(|(k, block)| {
                let (ranges, coeffs) = tensor_apply(block, k, |l| ops.c(l));
                LevelSpline::new(mask.order(), Translation::for_order(mask.order()), k.clone(), ranges, coeffs)
            })
            .collect();
        Self {
            dim: samples.dim(),
            order: mask.order(),
            budget: samples.budget(),
            levels: samples.levels().clone(),
            blocks,
        }
    }

    /// Arbitrary coefficient blocks over the natural shift boxes of
    /// `Delta(m)`, in level-set order. `values(k, block_len)` supplies each
    /// block.
    pub fn from_blocks(
        d: usize,
        order: usize,
        m: u32,
        mut values: impl FnMut(&[u32], usize) -> Vec<f64>,
    ) -> Self {
        let levels = enumerate_levels(d, m);
        let translation = Translation::for_order(order);
        let blocks = levels
            .members()
            .iter()
            .map(|k| {
                let mut block = LevelSpline::zeros(order, translation, k.clone());
                let len = block.coefficients().len();
                let v = values(k, len);
                assert_eq!(v.len(), len, "block length");
                block.coefficients_mut().copy_from_slice(&v);
                block
            })
            .collect();
        Self {
            dim: d,
            order,
            budget: m,
            levels,
            blocks,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn levels(&self) -> &LevelSet {
        &self.levels
    }

    /// `q_k(f)` for every `k`, in level-set order.
    pub fn blocks(&self) -> &[LevelSpline] {
        &self.blocks
    }

    pub fn block(&self, k: &[u32]) -> Option<&LevelSpline> {
        self.levels.position(k).map(|i| &self.blocks[i])
    }

    /// `sum_{|k|_1 <= budget} q_k(x)` without domain checks.
    pub fn eval_partial(&self, x: &[f64], budget: u32) -> f64 {
        let mut acc = CompensatedSum::default();
        for block in &self.blocks {
            if block.levels().iter().sum::<u32>() <= budget {
                block.accumulate(x, &mut acc);
            }
        }
        acc.value()
    }
}

/// `c^r_{k,s}(f)` for all `k in Delta(m)`; every sample goes through `cache`.
pub fn build_coefficients<F>(f: &F, d: usize, mask: &Mask, m: u32, cache: &EvalCache) -> Result<CoefficientTable>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let samples = SampledGrid::sample(f, d, m, cache)?;
    Ok(CoefficientTable::from_samples(&samples, mask))
}

/// The recovered function `R_m(f)`.
#[derive(Debug, Clone)]
pub struct Recovery {
    mask: Mask,
    table: CoefficientTable,
    cache_stats: Option<CacheStats>,
}

impl Recovery {
    pub fn new(mask: &Mask, table: CoefficientTable) -> Self {
        assert_eq!(mask.order(), table.order(), "mask and table orders differ");
        Self {
            mask: mask.clone(),
            table,
            cache_stats: None,
        }
    }

    /// Sample `f` on `G^d(m)` with a fresh cache and build `R_m(f)`.
    pub fn from_function<F>(f: &F, d: usize, m: u32, mask: &Mask) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync + ?Sized,
    {
        let cache = EvalCache::new();
        let table = build_coefficients(f, d, mask, m, &cache)?;
        Ok(Self {
            mask: mask.clone(),
            table,
            cache_stats: Some(cache.stats()),
        })
    }

    pub fn from_samples(samples: &SampledGrid, mask: &Mask) -> Self {
        Self::new(mask, CoefficientTable::from_samples(samples, mask))
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn budget(&self) -> u32 {
        self.table.budget()
    }

    /// Cache counters of the sampling run, if this recovery sampled `f` itself.
    pub fn cache_stats(&self) -> Option<CacheStats> {
        self.cache_stats
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_point(self.dim(), x)?;
        Ok(self.table.eval_partial(x, self.budget()))
    }

    /// `q_k(f)`.
    pub fn level_component(&self, k: &[u32]) -> Result<&LevelSpline> {
        if k.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: k.len(),
            });
        }
        self.table
            .block(k)
            .ok_or_else(|| Error::LevelOutOfRange(k.to_vec()))
    }

    /// Largest `|sum_{k' <= k} q_{k'}(f)(x) - Q_k(f)(x)|` over `points`.
    pub fn level_sum_discrepancy<F>(&self, f: &F, k: &[u32], points: &[Vec<f64>]) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync + ?Sized,
    {
        self.level_component(k)?;
        let below: Vec<&LevelSpline> = self
            .table
            .blocks()
            .iter()
            .filter(|b| b.levels().iter().zip(k).all(|(a, b)| a <= b))
            .collect();
        let q = mixed_quasi_interpolant(f, &self.mask, k, &EvalCache::new())?;
        let mut worst = 0.0f64;
        for x in points {
            check_point(self.dim(), x)?;
            let mut acc = CompensatedSum::default();
            for b in &below {
                b.accumulate(x, &mut acc);
            }
            worst = worst.max((acc.value() - q.eval(x)).abs());
        }
        Ok(worst)
    }
}

/// The mixed operator `Q_k(f)` against integer-translated `M_{k,s}`.
pub fn mixed_quasi_interpolant<F>(f: &F, mask: &Mask, k: &[u32], cache: &EvalCache) -> Result<LevelSpline>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let max_level = k.iter().copied().max().unwrap_or(0);
    let ops = LevelOperators::new(mask, max_level);
    let mut samples = Vec::new();
    let mut err = None;
    for_each_index(&node_ranges(k), |j| {
        if err.is_some() {
            return;
        }
        match DyadicPoint::from_index(k, j).and_then(|p| cache.get_or_eval(&p, f)) {
            Ok(v) => samples.push(v),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let (ranges, coeffs) = tensor_apply(&samples, k, |l| ops.a(l));
    Ok(LevelSpline::new(mask.order(), Translation::Integer, k.to_vec(), ranges, coeffs))
}

/// Univariate factor table of the sampling form at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiLevel {
    pub level: u32,
    /// `columns[j]` lists `(s, gamma_{k,j}(s))`, so that
    /// `psi_{k,j} = sum_s gamma_{k,j}(s) M^r_{k,s}`.
    pub columns: Vec<Vec<(i64, f64)>>,
    #[serde(skip)]
    operator: LevelOperator,
}

impl PsiLevel {
    /// `psi_{k,j}(x)` for a single axis.
    pub fn eval(&self, order: usize, node: usize, x: f64) -> f64 {
        let base = spline_for(order).expect("positive order");
        let translation = Translation::for_order(order);
        self.columns[node]
            .iter()
            .map(|&(s, g)| g * base.eval(translation.argument(self.level, s, x)))
            .sum()
    }

    /// Largest number of B-splines in one `psi_{k,j}`.
    pub fn max_support(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Weights of the sampling form
/// `R_m(f)(x) = sum_{k in Delta(m)} sum_{j in I^d(k)} f(2^{-k} j) psi_{k,j}(x)`
/// with `psi_{k,j}(x) = prod_i psi_{k_i,j_i}(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiWeights {
    order: usize,
    dim: usize,
    budget: u32,
    translation: Translation,
    levels: Vec<PsiLevel>,
}

impl PsiWeights {
    pub fn new(d: usize, mask: &Mask, m: u32) -> Self {
        let ops = LevelOperators::new(mask, m);
        let levels = (0..=m)
            .map(|k| {
                let operator = ops.c(k).clone();
                PsiLevel {
                    level: k,
                    columns: operator.columns(),
                    operator,
                }
            })
            .collect();
        Self {
            order: mask.order(),
            dim: d,
            budget: m,
            translation: Translation::for_order(mask.order()),
            levels,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    /// Univariate factors for levels `0..=m`.
    pub fn levels(&self) -> &[PsiLevel] {
        &self.levels
    }

    /// Largest per-axis B-spline count over all `psi_{k,j}`.
    pub fn max_support(&self) -> usize {
        self.levels.iter().map(PsiLevel::max_support).max().unwrap_or(0)
    }

    /// Nonzero `(j, psi_{k,j}(x))` for one axis.
    fn axis_weights(&self, level: u32, x: f64) -> Vec<(usize, f64)> {
        let base = spline_for(self.order).expect("positive order");
        let psi = &self.levels[level as usize];
        let op = &psi.operator;
        let range = (op.first_row(), op.first_row() + op.rows().len() as i64 - 1);
        let terms = AxisTerms::new(&base, self.translation, level, range, x);
        let mut weights: HashMap<usize, f64> = HashMap::new();
        for t in 0..terms.len() {
            let (row, value) = terms.get(t);
            for &(j, g) in &op.rows()[row] {
                *weights.entry(j).or_insert(0.0) += g * value;
            }
        }
        let mut out: Vec<(usize, f64)> = weights.into_iter().filter(|(_, w)| *w != 0.0).collect();
        out.sort_by_key(|&(j, _)| j);
        out
    }

    /// `sum_k sum_j f(2^{-k} j) psi_{k,j}(x)` from stored samples.
    pub fn evaluate(&self, samples: &SampledGrid, x: &[f64]) -> Result<f64> {
        check_point(self.dim, x)?;
        if samples.dim() != self.dim || samples.budget() != self.budget {
            return Err(Error::InvalidParams(format!(
                "samples cover G^{}({}) but weights were built for G^{}({})",
                samples.dim(),
                samples.budget(),
                self.dim,
                self.budget
            )));
        }
        let per_level: Vec<Vec<Vec<(usize, f64)>>> = x
            .iter()
            .map(|&xi| (0..=self.budget).map(|k| self.axis_weights(k, xi)).collect())
            .collect();
        let mut acc = CompensatedSum::default();
        for (k, block) in samples.levels().members().iter().zip(samples.blocks()) {
            let ranges = node_ranges(k);
            let strides = strides_for(&ranges);
            let axes: Vec<&Vec<(usize, f64)>> =
                k.iter().enumerate().map(|(i, &ki)| &per_level[i][ki as usize]).collect();
            if axes.iter().any(|a| a.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; self.dim];
            'walk: loop {
                let mut offset = 0;
                let mut weight = 1.0;
                for i in 0..self.dim {
                    let (j, w) = axes[i][idx[i]];
                    offset += j * strides[i];
                    weight *= w;
                }
                acc.add(block[offset] * weight);
                let mut axis = self.dim;
                loop {
                    if axis == 0 {
                        break 'walk;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < axes[axis].len() {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
        }
        Ok(acc.value())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
