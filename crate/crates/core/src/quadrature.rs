//! `L_q` norms on the unit cube.
//!
//! Tensor rules are evaluated through `Integrand::eval_grid`, which spline
//! types implement by separable contraction, so a full tensor grid costs
//! little more than its size.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::recovery::{CoefficientTable, Recovery};
use crate::spline::LevelSpline;

/// Largest number of points a tensor rule may use before falling back to
/// coarser cells.
pub const TENSOR_POINT_BUDGET: usize = 1 << 22;

/// Default Halton sample count.
pub const QMC_SAMPLES: usize = 1 << 17;

/// A function on `[0,1]^d` that can be evaluated on tensor grids.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Values on `axes[0] x ... x axes[d-1]`, row-major, last axis fastest.
    fn eval_grid(&self, axes: &[Vec<f64>]) -> Vec<f64> {
        let dims: Vec<usize> = axes.iter().map(Vec::len).collect();
        let total: usize = dims.iter().product();
        (0..total)
            .into_par_iter()
            .with_min_len(1024)
            .map(|mut flat| {
                let mut x = vec![0.0; dims.len()];
                for i in (0..dims.len()).rev() {
                    x[i] = axes[i][flat % dims[i]];
                    flat /= dims[i];
                }
                self.eval(&x)
            })
            .collect()
    }
}

/// A plain closure as an integrand.
pub struct FnIntegrand<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnIntegrand<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Integrand for FnIntegrand<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// `a - b`.
pub struct Difference<'a>(pub &'a dyn Integrand, pub &'a dyn Integrand);

impl Integrand for Difference<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.0.eval(x) - self.1.eval(x)
    }
    fn eval_grid(&self, axes: &[Vec<f64>]) -> Vec<f64> {
        let mut a = self.0.eval_grid(axes);
        for (x, y) in a.iter_mut().zip(self.1.eval_grid(axes)) {
            *x -= y;
        }
        a
    }
}

/// Sum of several integrands.
pub struct Sum<'a>(pub Vec<&'a dyn Integrand>);

impl Integrand for Sum<'_> {
    fn dim(&self) -> usize {
        self.0.first().map(|g| g.dim()).unwrap_or(0)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|g| g.eval(x)).sum()
    }
    fn eval_grid(&self, axes: &[Vec<f64>]) -> Vec<f64> {
        let total = axes.iter().map(Vec::len).product();
        let mut out = vec![0.0; total];
        for g in &self.0 {
            for (o, v) in out.iter_mut().zip(g.eval_grid(axes)) {
                *o += v;
            }
        }
        out
    }
}

impl Integrand for LevelSpline {
    fn dim(&self) -> usize {
        LevelSpline::dim(self)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        LevelSpline::eval(self, x)
    }
    fn eval_grid(&self, axes: &[Vec<f64>]) -> Vec<f64> {
        LevelSpline::eval_grid(self, axes)
    }
}

impl Integrand for CoefficientTable {
    fn dim(&self) -> usize {
        CoefficientTable::dim(self)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_partial(x, self.budget())
    }
    fn eval_grid(&self, axes: &[Vec<f64>]) -> Vec<f64> {
        let total = axes.iter().map(Vec::len).product();
        let mut out = vec![0.0; total];
        for block in self.blocks() {
            for (o, v) in out.iter_mut().zip(block.eval_grid(axes)) {
                *o += v;
            }
        }
        out
    }
}

impl Integrand for Recovery {
    fn dim(&self) -> usize {
        Recovery::dim(self)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.table().eval_partial(x, self.budget())
    }
    fn eval_grid(&self, axes: &[Vec<f64>]) -> Vec<f64> {
        self.table().eval_grid(axes)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for j in 2..=n {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        if n > 1 {
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        }
        let w = if n == 1 { 2.0 } else { 2.0 / ((1.0 - x * x) * dp * dp) };
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut scale = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * scale;
        index /= base;
        scale /= base as f64;
    }
    result
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// The `index`-th Halton point in dimension `d`.
pub fn halton_point(index: u64, d: usize) -> Vec<f64> {
    assert!(d <= PRIMES.len(), "Halton points up to dimension {}", PRIMES.len());
    PRIMES[..d].iter().map(|&b| radical_inverse(index, b)).collect()
}

/// Per-axis nodes and the matching per-axis weights.
type TensorAxes = (Vec<Vec<f64>>, Vec<Vec<f64>>);

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureRule {
    /// `points` Gauss–Legendre nodes per axis on each cell of the dyadic
    /// partition with `2^{levels[i]}` cells along axis `i`.
    GaussLegendre { levels: Vec<u32>, points: usize },
    /// Maximum over the level-`levels[i]` dyadic grid and its cell midpoints.
    DyadicMax { levels: Vec<u32> },
    /// Equal-weight Halton points `1..=samples`.
    Halton { dim: usize, samples: usize },
}

fn capped_level(d: usize, level: u32, points_per_cell: usize) -> u32 {
    let per_axis = (TENSOR_POINT_BUDGET as f64).powf(1.0 / d as f64) / points_per_cell as f64;
    level.min(per_axis.log2().floor().max(0.0) as u32)
}

impl QuadratureRule {
    /// Cells at level `levels[i] + 1` per axis, enough to align with the knots
    /// of both integer and half-translated splines at `levels`.
    pub fn for_spline_levels(levels: &[u32], q: f64) -> Self {
        if q.is_infinite() {
            QuadratureRule::DyadicMax {
                levels: levels.iter().map(|&k| k + 3).collect(),
            }
        } else {
            QuadratureRule::GaussLegendre {
                levels: levels.iter().map(|&k| k + 1).collect(),
                points: 8,
            }
        }
    }

    /// Rule for error norms of a level-`m` recovery: cells at level `m + 2`
    /// when the tensor budget allows, coarser cells otherwise, Halton points
    /// for `d >= 4`.
    pub fn for_budget(d: usize, m: u32, q: f64) -> Self {
        Self::for_budget_with(d, m, q, 8, QMC_SAMPLES)
    }

    /// `for_budget` with `points` Gauss–Legendre nodes per cell and `samples`
    /// Halton points.
    pub fn for_budget_with(d: usize, m: u32, q: f64, points: usize, samples: usize) -> Self {
        let level = m + 2;
        if d >= 4 {
            return QuadratureRule::Halton { dim: d, samples };
        }
        if q.is_infinite() {
            // grid plus midpoints has 2^{level+1} + 1 points per axis
            let level = capped_level(d, level + 1, 1).saturating_sub(1);
            QuadratureRule::DyadicMax { levels: vec![level; d] }
        } else {
            let level = capped_level(d, level, points);
            QuadratureRule::GaussLegendre {
                levels: vec![level; d],
                points,
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            QuadratureRule::GaussLegendre { levels, .. } | QuadratureRule::DyadicMax { levels } => levels.len(),
            QuadratureRule::Halton { dim, .. } => *dim,
        }
    }

    /// The same rule at double resolution.
    pub fn refined(&self) -> Self {
        match self {
            QuadratureRule::GaussLegendre { levels, points } => QuadratureRule::GaussLegendre {
                levels: levels.clone(),
                points: points * 2,
            },
            QuadratureRule::DyadicMax { levels } => QuadratureRule::DyadicMax {
                levels: levels.iter().map(|l| l + 1).collect(),
            },
            QuadratureRule::Halton { dim, samples } => QuadratureRule::Halton {
                dim: *dim,
                samples: samples * 2,
            },
        }
    }

    /// Per-axis nodes and weights of a tensor rule.
    fn tensor_axes(&self) -> Option<TensorAxes> {
        match self {
            QuadratureRule::GaussLegendre { levels, points } => {
                let (nodes, weights) = gauss_legendre(*points);
                let axes = levels
                    .iter()
                    .map(|&l| {
                        let cells = 1u64 << l;
                        let h = 1.0 / cells as f64;
                        let mut xs = Vec::with_capacity(cells as usize * points);
                        let mut ws = Vec::with_capacity(cells as usize * points);
                        for c in 0..cells {
                            let left = c as f64 * h;
                            for (t, w) in nodes.iter().zip(&weights) {
                                xs.push(left + 0.5 * h * (t + 1.0));
                                ws.push(0.5 * h * w);
                            }
                        }
                        (xs, ws)
                    })
                    .unzip();
                Some(axes)
            }
            QuadratureRule::DyadicMax { levels } => {
                let axes = levels
                    .iter()
                    .map(|&l| {
                        let n = 1u64 << (l + 1);
                        let xs: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
                        let ws = vec![1.0; xs.len()];
                        (xs, ws)
                    })
                    .unzip();
                Some(axes)
            }
            QuadratureRule::Halton { .. } => None,
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if q.is_nan() || q <= 0.0 {
        return Err(Error::InvalidParams(format!("norm exponent must be positive, got {q}")));
    }
    Ok(())
}

fn accumulate(values: impl Iterator<Item = (f64, f64)>, q: f64) -> Result<f64> {
    if q.is_infinite() {
        let mut sup = 0.0f64;
        for (v, _) in values {
            if !v.is_finite() {
                return Err(Error::TaintedIntegrand(v));
            }
            sup = sup.max(v.abs());
        }
        return Ok(sup);
    }
    let mut acc = crate::spline::CompensatedSum::default();
    for (v, w) in values {
        if !v.is_finite() {
            return Err(Error::TaintedIntegrand(v));
        }
        if v != 0.0 {
            acc.add(w * v.abs().powf(q));
        }
    }
    Ok(acc.value().max(0.0).powf(1.0 / q))
}

/// `||g||_q` on `[0,1]^d`; `q = f64::INFINITY` gives the sup norm.
pub fn lq_norm(g: &dyn Integrand, q: f64, rule: &QuadratureRule) -> Result<f64> {
    check_q(q)?;
    if rule.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: rule.dim(),
        });
    }
    match rule.tensor_axes() {
        Some((axes, weights)) => {
            let values = g.eval_grid(&axes);
            let dims: Vec<usize> = axes.iter().map(Vec::len).collect();
            let iter = values.iter().enumerate().map(|(flat, &v)| {
                let mut rest = flat;
                let mut w = 1.0;
                for i in (0..dims.len()).rev() {
                    w *= weights[i][rest % dims[i]];
                    rest /= dims[i];
                }
                (v, w)
            });
            accumulate(iter, q)
        }
        None => {
            let QuadratureRule::Halton { dim, samples } = rule else {
                unreachable!("only Halton rules are not tensor rules")
            };
            let values: Vec<f64> = (1..*samples + 1)
                .into_par_iter()
                .with_min_len(1024)
                .map(|i| g.eval(&halton_point(i as u64, *dim)))
                .collect();
            let w = 1.0 / *samples as f64;
            accumulate(values.into_iter().map(|v| (v, w)), q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Value under the refined rule.
    pub refined: f64,
    /// `|refined - value| / max(|refined|, tiny)`.
    pub relative_delta: f64,
}

/// `lq_norm` together with its change under a doubled resolution.
pub fn lq_norm_estimate(g: &dyn Integrand, q: f64, rule: &QuadratureRule) -> Result<NormEstimate> {
    let value = lq_norm(g, q, rule)?;
    let refined = lq_norm(g, q, &rule.refined())?;
    let relative_delta = if refined == value {
        0.0
    } else {
        (refined - value).abs() / refined.abs().max(f64::MIN_POSITIVE)
    };
    Ok(NormEstimate {
        value,
        refined,
        relative_delta,
    })
}
