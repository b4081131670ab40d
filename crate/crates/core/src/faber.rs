//! Interpolant representations for `r = 1` (steps) and `r = 2`
//! (Faber–Schauder hats).
//!
//! Univariate bases at level `k`:
//! - `r = 1`: `phi_{0,0} = N_{0,0}`, `phi_{k,s} = N_{k,2s+1}` with
//!   `lambda_{0,0}(f) = f(0)` and `lambda_{k,s}(f) = f(2^{-k}(2s+1)) - f(2^{-k} 2s)`.
//! - `r = 2`: `phi_{0,s} = M_{0,s}`, `phi_{k,s} = M_{k,2s+1}` with
//!   `lambda_{0,s}(f) = f(s)` and `lambda_{k,s}(f) = -1/2 Delta^2_{2^{-k}} f(2^{-k+1} s)`.
//!
//! Mixed functionals are tensor products, applied axis 1 first.

use rayon::prelude::*;
use serde::Serialize;

use crate::besov::{ell_theta, sequence_norm};
use crate::error::{Error, Result};
use crate::quadrature::Integrand;
use crate::sparse_grid::{enumerate_levels, for_each_index, DyadicPoint, EvalCache, LevelSet};
use crate::spline::{apply_rows, strides_for, CompensatedSum};

fn check_variant(r: usize) -> Result<()> {
    match r {
        1 | 2 => Ok(()),
        _ => Err(Error::InvalidParams(format!(
            "interpolant representations exist for r = 1 and r = 2, got r = {r}"
        ))),
    }
}

/// `N_{k,s}`: indicator of `[2^{-k}s, 2^{-k}(s+1))`, closed at `x = 1` for
/// the last cell.
pub fn n_basis(k: u32, s: u64, x: f64) -> f64 {
    let n = 1u64 << k;
    let y = x * n as f64 - s as f64;
    let closed = s + 1 == n;
    if (0.0..1.0).contains(&y) || (closed && y == 1.0) {
        1.0
    } else {
        0.0
    }
}

fn hat(k: u32, s: i64, x: f64) -> f64 {
    (1.0 - (x * (1u64 << k) as f64 - s as f64).abs()).max(0.0)
}

/// `|Z_r(k)|`.
pub fn z_count(r: usize, k: u32) -> usize {
    match (r, k) {
        (1, 0) => 1,
        (_, 0) => 2,
        _ => 1usize << (k - 1),
    }
}

/// `|I_r(k)|`: `2^k` nodes for `r = 1`, `2^k + 1` for `r = 2`.
pub fn node_count(r: usize, k: u32) -> usize {
    if r == 1 {
        1usize << k
    } else {
        (1usize << k) + 1
    }
}

/// One univariate basis function `phi^r_{k,s}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FaberBasisFn {
    pub r: usize,
    pub level: u32,
    pub index: usize,
}

impl FaberBasisFn {
    pub fn new(r: usize, level: u32, index: usize) -> Result<Self> {
        check_variant(r)?;
        if index >= z_count(r, level) {
            return Err(Error::IndexOutOfRange {
                level,
                s: index as i64,
            });
        }
        Ok(Self { r, level, index })
    }

    pub fn eval(&self, x: f64) -> f64 {
        basis_value(self.r, self.level, self.index, x)
    }
}

fn basis_value(r: usize, k: u32, s: usize, x: f64) -> f64 {
    match (r, k) {
        (1, 0) => n_basis(0, 0, x),
        (1, _) => n_basis(k, 2 * s as u64 + 1, x),
        (_, 0) => hat(0, s as i64, x),
        _ => hat(k, 2 * s as i64 + 1, x),
    }
}

/// Nonzero `(s, phi^r_{k,s}(x))`.
fn axis_basis(r: usize, k: u32, x: f64) -> Vec<(usize, f64)> {
    if k == 0 {
        return (0..z_count(r, 0))
            .map(|s| (s, basis_value(r, 0, s, x)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
    }
    let n = (1u64 << k) as f64;
    let cell = ((x * n).floor() as i64).clamp(0, (1 << k) - 1);
    // a fine cell index c belongs to s = c / 2 (r = 1) and is covered by the
    // hats of s = (c - 1) / 2 and c / 2 (r = 2)
    let mut out = Vec::with_capacity(2);
    let count = z_count(r, k) as i64;
    for s in [(cell - 1).div_euclid(2), cell.div_euclid(2)] {
        if (0..count).contains(&s) && out.iter().all(|&(t, _)| t != s as usize) {
            let v = basis_value(r, k, s as usize, x);
            if v != 0.0 {
                out.push((s as usize, v));
            }
        }
    }
    out
}

/// `lambda^r_{k,s}` as combinations of level-`k` node values `0..|I_r(k)|`.
fn functional_rows(r: usize, k: u32) -> Vec<Vec<(usize, f64)>> {
    (0..z_count(r, k))
        .map(|s| match (r, k) {
            (1, 0) => vec![(0, 1.0)],
            (1, _) => vec![(2 * s, -1.0), (2 * s + 1, 1.0)],
            (_, 0) => vec![(s, 1.0)],
            _ => vec![(2 * s, -0.5), (2 * s + 1, 1.0), (2 * s + 2, -0.5)],
        })
        .collect()
}

/// Step interpolant `Pi_k(f) = sum_{s < 2^k} f(2^{-k}s) N_{k,s}`; `Pi_{-1} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    level: Option<u32>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn level(&self) -> Option<u32> {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.level {
            None => 0.0,
            Some(k) => {
                let n = 1usize << k;
                let cell = ((x * n as f64).floor().max(0.0) as usize).min(n - 1);
                self.values[cell]
            }
        }
    }
}

/// `Pi_k(f)` for `k >= -1`.
pub fn pi_k(f: impl Fn(f64) -> f64, k: i32) -> Result<StepFunction> {
    if k < -1 {
        return Err(Error::InvalidParams(format!("level must be at least -1, got {k}")));
    }
    if k == -1 {
        return Ok(StepFunction {
            level: None,
            values: Vec::new(),
        });
    }
    let n = 1usize << k;
    Ok(StepFunction {
        level: Some(k as u32),
        values: (0..n).map(|s| f(s as f64 / n as f64)).collect(),
    })
}

/// `lambda^r_{k,s}(f)` for all `k in Delta(m)`, `s in Z_r^d(k)`; blocks are
/// row-major, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaberCoefficients {
    r: usize,
    dim: usize,
    budget: u32,
    #[serde(skip)]
    levels: LevelSet,
    blocks: Vec<Vec<f64>>,
}

impl FaberCoefficients {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn budget(&self) -> u32 {
        self.budget
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

    pub fn coefficient(&self, k: &[u32], s: &[usize]) -> Option<f64> {
        let block = self.block(k)?;
        let ranges: Vec<(i64, i64)> = k.iter().map(|&ki| (0, z_count(self.r, ki) as i64 - 1)).collect();
        let strides = strides_for(&ranges);
        let mut offset = 0;
        for ((si, &(_, hi)), st) in s.iter().zip(&ranges).zip(strides) {
            if *si as i64 > hi {
                return None;
            }
            offset += si * st;
        }
        Some(block[offset])
    }

    /// `R^r_m(f)(x) = sum_k sum_s lambda_{k,s}(f) phi_{k,s}(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_point(self.dim, x)?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let per_axis: Vec<Vec<Vec<(usize, f64)>>> = x
            .iter()
            .map(|&xi| (0..=self.budget).map(|k| axis_basis(self.r, k, xi)).collect())
            .collect();
        let mut acc = CompensatedSum::default();
        for (k, block) in self.levels.members().iter().zip(&self.blocks) {
            let ranges: Vec<(i64, i64)> = k.iter().map(|&ki| (0, z_count(self.r, ki) as i64 - 1)).collect();
            let strides = strides_for(&ranges);
            let axes: Vec<&Vec<(usize, f64)>> = k.iter().enumerate().map(|(i, &ki)| &per_axis[i][ki as usize]).collect();
            tensor_walk(&axes, &strides, |offset, w, _| acc.add(block[offset] * w));
        }
        acc.value()
    }
}

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

/// Visit the tensor product of sparse per-axis lists as
/// `(offset, product, indices)`.
fn tensor_walk(axes: &[&Vec<(usize, f64)>], strides: &[usize], mut visit: impl FnMut(usize, f64, &[usize])) {
    if axes.iter().any(|a| a.is_empty()) {
        return;
    }
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut j = vec![0usize; d];
    loop {
        let mut offset = 0;
        let mut w = 1.0;
        for i in 0..d {
            let (ji, v) = axes[i][idx[i]];
            j[i] = ji;
            offset += ji * strides[i];
            w *= v;
        }
        visit(offset, w, &j);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
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

impl Integrand for FaberCoefficients {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }
}

/// Sample `f` on `G_r^d(m)` and compute all `lambda^r_{k,s}(f)`.
pub fn faber_coeffs<F>(f: &F, r: usize, d: usize, m: u32, cache: &EvalCache) -> Result<FaberCoefficients>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    check_variant(r)?;
    if d == 0 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }
    let levels = enumerate_levels(d, m);
    let rows: Vec<Vec<Vec<(usize, f64)>>> = (0..=m).map(|k| functional_rows(r, k)).collect();
    let blocks = levels
        .members()
        .par_iter()
        .map(|k| {
            let ranges: Vec<(i64, i64)> = k.iter().map(|&ki| (0, node_count(r, ki) as i64 - 1)).collect();
            let mut samples = Vec::new();
            let mut err = None;
            for_each_index(&ranges, |j| {
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
            let mut shape: Vec<usize> = k.iter().map(|&ki| node_count(r, ki)).collect();
            let mut data = samples;
            for (axis, &ki) in k.iter().enumerate() {
                data = apply_rows(&data, &mut shape, axis, &rows[ki as usize]);
            }
            Ok(data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FaberCoefficients {
        r,
        dim: d,
        budget: m,
        levels,
        blocks,
    })
}

/// Univariate sampling weights `psi^r_{k,j}` as combinations of
/// `phi^r_{k,s}`, following the printed case tables.
pub fn psi_univariate(r: usize, k: u32, j: usize) -> Result<Vec<(usize, f64)>> {
    check_variant(r)?;
    if j >= node_count(r, k) {
        return Err(Error::IndexOutOfRange { level: k, s: j as i64 });
    }
    let n = 1usize << k;
    Ok(match (r, k) {
        (_, 0) => vec![(j, 1.0)],
        (1, _) if j % 2 == 1 => vec![(j / 2, 1.0)],
        (1, _) => vec![(j / 2, -1.0)],
        (_, _) if j == 0 => vec![(0, -0.5)],
        (_, _) if j == n => vec![(n / 2 - 1, -0.5)],
        (_, _) if j % 2 == 1 => vec![(j / 2, 1.0)],
        _ => vec![(j / 2, -0.5), (j / 2 - 1, -0.5)],
    })
}

/// Sampling form of `R^r_m`: `sum_k sum_{j in I_r^d(k)} f(2^{-k}j) psi^r_{k,j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaberPsi {
    r: usize,
    dim: usize,
    budget: u32,
    /// `tables[k][j]`: `psi^r_{k,j}` as `(s, weight)` over `phi^r_{k,s}`.
    tables: Vec<Vec<Vec<(usize, f64)>>>,
}

impl FaberPsi {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn tables(&self) -> &[Vec<Vec<(usize, f64)>>] {
        &self.tables
    }

    /// `psi^r_{k,j}(x)` for one axis.
    pub fn eval_univariate(&self, k: u32, j: usize, x: f64) -> f64 {
        self.tables[k as usize][j]
            .iter()
            .map(|&(s, w)| w * basis_value(self.r, k, s, x))
            .sum()
    }

    /// Evaluate with samples supplied as `sample(k, j) = f(2^{-k} j)`.
    pub fn evaluate(&self, sample: impl Fn(&[u32], &[usize]) -> f64, x: &[f64]) -> Result<f64> {
        check_point(self.dim, x)?;
        let per_axis: Vec<Vec<Vec<(usize, f64)>>> = x
            .iter()
            .map(|&xi| {
                (0..=self.budget)
                    .map(|k| {
                        (0..node_count(self.r, k))
                            .map(|j| (j, self.eval_univariate(k, j, xi)))
                            .filter(|&(_, v)| v != 0.0)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut acc = CompensatedSum::default();
        let strides = vec![0usize; self.dim];
        for k in enumerate_levels(self.dim, self.budget).members() {
            let axes: Vec<&Vec<(usize, f64)>> = k.iter().enumerate().map(|(i, &ki)| &per_axis[i][ki as usize]).collect();
            tensor_walk(&axes, &strides, |_, w, j| acc.add(sample(k, j) * w));
        }
        Ok(acc.value())
    }
}

pub fn psi_weights_faber(r: usize, d: usize, m: u32) -> Result<FaberPsi> {
    check_variant(r)?;
    let tables = (0..=m)
        .map(|k| (0..node_count(r, k)).map(|j| psi_univariate(r, k, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(FaberPsi {
        r,
        dim: d,
        budget: m,
        tables,
    })
}

/// Lower-bound witness families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum WitnessCase {
    G1,
    G2,
    G3,
    G4,
}

impl std::str::FromStr for WitnessCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g1" => Ok(WitnessCase::G1),
            "g2" => Ok(WitnessCase::G2),
            "g3" => Ok(WitnessCase::G3),
            "g4" => Ok(WitnessCase::G4),
            other => Err(Error::UnknownFunction(format!("witness:{other}"))),
        }
    }
}

/// Levels of a witness with the indices it uses (`None`: all of `Z_2^d(k)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessLevel {
    pub level: Vec<u32>,
    pub index: Option<Vec<usize>>,
}

/// A witness `g = a * sum phi^2_{k,s}` normalized so that `B*(g) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub case: WitnessCase,
    pub dim: usize,
    pub budget: u32,
    /// Common coefficient value `a`.
    pub amplitude: f64,
    /// `C_i`, with `a = C_i 2^{-alpha m}` (g1, g2 also carry `m^{-(d-1)/theta}` for g2;
    /// g3, g4 use `2^{-(alpha - 1/p) m}`).
    pub constant: f64,
    pub support: Vec<WitnessLevel>,
}

/// The balanced multi-index with `|k|_1 = total` and every `k_i >= min`.
fn balanced_level(d: usize, total: u32, min: u32) -> Vec<u32> {
    let spare = total - min * d as u32;
    (0..d as u32)
        .map(|i| min + spare / d as u32 + u32::from(i < spare % d as u32))
        .collect()
}

/// `s(k)_i = 2^{k_i - 1} - 2`.
pub fn witness_index(k: &[u32]) -> Vec<usize> {
    k.iter().map(|&ki| (1usize << (ki - 1)) - 2).collect()
}

/// `{k >= min : |k|_1 = total}` in lexicographic order.
fn levels_with_sum(d: usize, total: u32, min: u32) -> Vec<Vec<u32>> {
    enumerate_levels(d, total)
        .members()
        .iter()
        .filter(|k| k.iter().sum::<u32>() == total && k.iter().all(|&ki| ki >= min))
        .cloned()
        .collect()
}

pub fn witness_functions(case: WitnessCase, d: usize, m: u32, alpha: f64, p: f64, theta: f64) -> Result<Witness> {
    if d == 0 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }
    if !(alpha > 0.0) || !(p > 0.0) || !(theta > 0.0) {
        return Err(Error::InvalidParams("alpha, p and theta must be positive".into()));
    }
    let total = m + 1;
    let (support, scale) = match case {
        WitnessCase::G1 | WitnessCase::G2 => {
            if total < d as u32 {
                return Err(Error::InvalidParams(format!(
                    "{case:?} needs m + 1 >= d, got m = {m}, d = {d}"
                )));
            }
            let scale = 2f64.powf(-alpha * m as f64);
            if case == WitnessCase::G1 {
                let level = balanced_level(d, total, 1);
                (vec![WitnessLevel { level, index: None }], scale)
            } else {
                let levels = levels_with_sum(d, total, 1)
                    .into_iter()
                    .map(|level| WitnessLevel { level, index: None })
                    .collect();
                (levels, scale * (m as f64).powf(-(d as f64 - 1.0) / theta))
            }
        }
        WitnessCase::G3 | WitnessCase::G4 => {
            if m < 2 || total < 2 * d as u32 {
                return Err(Error::InvalidParams(format!(
                    "{case:?} needs m >= 2 and m + 1 >= 2d, got m = {m}, d = {d}"
                )));
            }
            let scale = 2f64.powf(-(alpha - 1.0 / p) * m as f64);
            let with_index = |level: Vec<u32>| WitnessLevel {
                index: Some(witness_index(&level)),
                level,
            };
            if case == WitnessCase::G3 {
                (vec![with_index(balanced_level(d, total, 2))], scale)
            } else {
                let levels = levels_with_sum(d, total, 2).into_iter().map(with_index).collect();
                (levels, scale * (m as f64).powf(-(d as f64 - 1.0) / theta))
            }
        }
    };
    // B* with unit coefficients
    let unit = ell_theta(
        support.iter().map(|w| {
            let count: usize = match &w.index {
                Some(_) => 1,
                None => w.level.iter().map(|&k| z_count(2, k)).product(),
            };
            let weight = 2f64.powf((alpha - 1.0 / p) * w.level.iter().sum::<u32>() as f64);
            weight * sequence_norm(&vec![1.0; count], p)
        }),
        theta,
    );
    let amplitude = 1.0 / unit;
    Ok(Witness {
        case,
        dim: d,
        budget: m,
        amplitude,
        constant: amplitude / scale,
        support,
    })
}

impl Witness {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = CompensatedSum::default();
        for w in &self.support {
            let mut product = 1.0;
            for (i, (&k, &xi)) in w.level.iter().zip(x).enumerate() {
                let value: f64 = axis_basis(2, k, xi)
                    .into_iter()
                    .filter(|&(s, _)| w.index.as_ref().is_none_or(|idx| idx[i] == s))
                    .map(|(_, v)| v)
                    .sum();
                product *= value;
                if product == 0.0 {
                    break;
                }
            }
            acc.add(product);
        }
        self.amplitude * acc.value()
    }
}

impl Integrand for Witness {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        Witness::eval(self, x)
    }
}
