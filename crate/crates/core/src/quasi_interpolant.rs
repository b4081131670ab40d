//! Univariate quasi-interpolants on `[0,1]`.
//!
//! A mask `lambda(j)`, `|j| <= mu`, defines `Q(f) = sum_s (sum_j lambda(j) f(s-j)) M(. - s)`.
//! On the unit interval the operator at level `k` is applied to the
//! extension `f_k`, which continues `f` past both endpoints with Lagrange
//! polynomials through the extreme level-`k` nodes.
//!
//! Every coefficient functional here is assembled once as a sparse linear
//! combination of level-`k` node values (`LevelOperator`). Builtin masks have
//! rational weights, so their operators are assembled in exact rational
//! arithmetic and rounded once.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bspline::{binomial, spline_for, Translation};
use crate::error::{Error, Result};
use crate::sparse_grid::shift_range;
use crate::spline::LevelSpline;

type Rational = Ratio<i128>;

/// Scalar used while assembling node functionals.
pub(crate) trait Weight:
    Clone
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_int(i: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl Weight for f64 {
    fn from_int(i: i64) -> Self {
        i as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Weight for Rational {
    fn from_int(i: i64) -> Self {
        Ratio::from_integer(i as i128)
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn is_zero(&self) -> bool {
        *self.numer() == 0
    }
}

/// Finite even weight sequence `lambda(j)`, `j = -mu..=mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    order: usize,
    mu: usize,
    weights: Vec<f64>,
    exact: Option<Vec<Rational>>,
}

/// On-disk form of a mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskConfig {
    pub order: usize,
    pub mu: usize,
    /// `lambda(-mu), ..., lambda(mu)`
    pub weights: Vec<f64>,
}

impl Mask {
    pub fn new(order: usize, weights: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(0));
        }
        if weights.len().is_multiple_of(2) {
            return Err(Error::InvalidMask(format!(
                "expected an odd number of weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidMask("weights must be finite".into()));
        }
        let mu = weights.len() / 2;
        // mu >= r/2 - 1
        if 2 * mu + 2 < order {
            return Err(Error::InvalidMask(format!(
                "half-width {mu} is too small for order {order}"
            )));
        }
        let scale = weights.iter().fold(0.0f64, |a, w| a.max(w.abs())).max(1.0);
        for j in 0..mu {
            let (a, b) = (weights[j], weights[weights.len() - 1 - j]);
            if (a - b).abs() > 1e-12 * scale {
                return Err(Error::InvalidMask(format!(
                    "weights are not even: lambda({}) = {a} but lambda({}) = {b}",
                    j as i64 - mu as i64,
                    mu - j
                )));
            }
        }
        Ok(Self {
            order,
            mu,
            weights,
            exact: None,
        })
    }

    fn rational(order: usize, numerators: &[i128], denominator: i128) -> Self {
        let exact: Vec<Rational> = numerators
            .iter()
            .map(|&n| Ratio::new(n, denominator))
            .collect();
        Self {
            order,
            mu: numerators.len() / 2,
            weights: exact.iter().map(Weight::to_f64).collect(),
            exact: Some(exact),
        }
    }

    pub fn from_config(config: &MaskConfig) -> Result<Self> {
        if config.weights.len() != 2 * config.mu + 1 {
            return Err(Error::InvalidMask(format!(
                "mu = {} needs {} weights, got {}",
                config.mu,
                2 * config.mu + 1,
                config.weights.len()
            )));
        }
        Self::new(config.order, config.weights.clone())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: MaskConfig = serde_json::from_str(&text)?;
        Self::from_config(&config)
    }

    pub fn to_config(&self) -> MaskConfig {
        MaskConfig {
            order: self.order,
            mu: self.mu,
            weights: self.weights.clone(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn weight(&self, j: i64) -> f64 {
        let idx = j + self.mu as i64;
        if idx < 0 || idx as usize >= self.weights.len() {
            0.0
        } else {
            self.weights[idx as usize]
        }
    }

    /// `sum_j |lambda(j)|`
    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// `Q(f, x)` for a function on the whole real line.
    pub fn apply_on_line(&self, f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let spline = spline_for(self.order).expect("mask order is positive");
        let (lo, hi) = Translation::Integer.active_shifts(self.order, 0, x);
        (lo..=hi)
            .map(|s| {
                let b = spline.eval(x - s as f64);
                if b == 0.0 {
                    return 0.0;
                }
                let coeff: f64 = (-(self.mu as i64)..=self.mu as i64)
                    .map(|j| self.weight(j) * f((s - j) as f64))
                    .sum();
                coeff * b
            })
            .sum()
    }
}

/// Builtin masks for orders 1 to 4.
pub fn builtin_mask(r: usize) -> Result<Mask> {
    match r {
        1 | 2 => Ok(Mask::rational(r, &[1], 1)),
        3 => Ok(Mask::rational(3, &[-1, 10, -1], 8)),
        4 => Ok(Mask::rational(4, &[-1, 8, -1], 6)),
        other => Err(Error::UnsupportedBuiltin(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskReport {
    pub order: usize,
    /// `max |Q(x^nu) - x^nu|` for `nu = 0..r`.
    pub max_error: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Check polynomial reproduction of a mask on a dense grid of `[-1, 1]`.
pub fn validate_mask(mask: &Mask) -> MaskReport {
    const TOLERANCE: f64 = 1e-10;
    const POINTS: usize = 2001;
    let max_error: Vec<f64> = (0..mask.order())
        .map(|nu| {
            (0..POINTS)
                .map(|i| {
                    let x = -1.0 + 2.0 * i as f64 / (POINTS - 1) as f64;
                    let q = mask.apply_on_line(|y| y.powi(nu as i32), x);
                    (q - x.powi(nu as i32)).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let passed = max_error.iter().all(|&e| e <= TOLERANCE);
    MaskReport {
        order: mask.order(),
        max_error,
        tolerance: TOLERANCE,
        passed,
    }
}

/// Lagrange continuation of a function on `[0,1]` past the endpoints at
/// level `k`.
///
/// Uses `r' = min(r, 2^k + 1)` nodes at each end so that no node leaves the
/// unit interval; the extension reproduces polynomials of degree `< r'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryExtension {
    order: usize,
    level: u32,
    effective_order: usize,
}

impl BoundaryExtension {
    pub fn new(order: usize, level: u32) -> Self {
        let available = (1usize << level.min(62)) + 1;
        Self {
            order,
            level,
            effective_order: order.min(available),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of interpolation nodes at each end, `r'`.
    pub fn effective_order(&self) -> usize {
        self.effective_order
    }

    /// Left nodes as level-`k` indices `0..r'`.
    pub fn left_nodes(&self) -> Vec<i64> {
        (0..self.effective_order as i64).collect()
    }

    /// Right nodes as level-`k` indices `2^k - r' + 1 ..= 2^k`.
    pub fn right_nodes(&self) -> Vec<i64> {
        let n = 1i64 << self.level;
        ((n - self.effective_order as i64 + 1)..=n).collect()
    }

    /// `f_k(2^{-k} t)` as a combination of node values.
    pub(crate) fn node_weights<W: Weight>(&self, t: i64) -> Vec<(i64, W)> {
        let n = 1i64 << self.level;
        if (0..=n).contains(&t) {
            return vec![(t, W::from_int(1))];
        }
        let nodes = if t < 0 {
            self.left_nodes()
        } else {
            self.right_nodes()
        };
        nodes
            .iter()
            .map(|&ni| {
                let mut num = W::from_int(1);
                let mut den = W::from_int(1);
                for &nj in nodes.iter().filter(|&&nj| nj != ni) {
                    num = num * W::from_int(t - nj);
                    den = den * W::from_int(ni - nj);
                }
                (ni, num / den)
            })
            .collect()
    }

    /// Newton forward-difference coefficients `Delta^s f(x_0) / (s! h^s)`.
    fn newton_coefficients(&self, f: &impl Fn(f64) -> f64, nodes: &[i64]) -> Vec<f64> {
        let h = 1.0 / (1u64 << self.level) as f64;
        let mut diffs: Vec<f64> = nodes.iter().map(|&j| f(j as f64 * h)).collect();
        let mut coeffs = Vec::with_capacity(nodes.len());
        let mut scale = 1.0;
        for s in 0..nodes.len() {
            coeffs.push(diffs[0] / scale);
            for i in 0..diffs.len() - 1 - s {
                diffs[i] = diffs[i + 1] - diffs[i];
            }
            scale *= (s + 1) as f64 * h;
        }
        coeffs
    }
}

/// `f_k`: `f` on `[0,1]`, Lagrange continuation outside.
pub struct ExtendedFunction<F> {
    f: F,
    extension: BoundaryExtension,
    left: (Vec<f64>, Vec<f64>),
    right: (Vec<f64>, Vec<f64>),
}

impl<F: Fn(f64) -> f64> ExtendedFunction<F> {
    pub fn extension(&self) -> &BoundaryExtension {
        &self.extension
    }

    pub fn eval(&self, x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            return (self.f)(x);
        }
        let (coeffs, nodes) = if x < 0.0 { &self.left } else { &self.right };
        // nested Newton form
        let mut acc = coeffs[coeffs.len() - 1];
        for i in (0..coeffs.len() - 1).rev() {
            acc = acc * (x - nodes[i]) + coeffs[i];
        }
        acc
    }
}

/// Extend `f` from `[0,1]` to the real line for level `k`.
pub fn extend<F: Fn(f64) -> f64>(f: F, r: usize, k: u32) -> ExtendedFunction<F> {
    let extension = BoundaryExtension::new(r, k);
    let h = 1.0 / (1u64 << k) as f64;
    let side = |nodes: Vec<i64>| {
        let coeffs = extension.newton_coefficients(&f, &nodes);
        let xs = nodes.iter().map(|&j| j as f64 * h).collect();
        (coeffs, xs)
    };
    let left = side(extension.left_nodes());
    let right = side(extension.right_nodes());
    ExtendedFunction {
        f,
        extension,
        left,
        right,
    }
}

/// Sparse map from level-`k` node values (`0..=2^k`) to one coefficient per
/// row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelOperator {
    level: u32,
    first_row: i64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl LevelOperator {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Shift index of the first row.
    pub fn first_row(&self) -> i64 {
        self.first_row
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, shift: i64) -> Option<&[(usize, f64)]> {
        let idx = shift - self.first_row;
        if idx < 0 {
            return None;
        }
        self.rows.get(idx as usize).map(Vec::as_slice)
    }

    /// Number of node values consumed, `2^k + 1`.
    pub fn input_len(&self) -> usize {
        (1usize << self.level) + 1
    }

    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        debug_assert_eq!(samples.len(), self.input_len());
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * samples[j]).sum())
            .collect()
    }

    /// Transpose: for every node, the rows it enters with their weights.
    pub fn columns(&self) -> Vec<Vec<(i64, f64)>> {
        let mut cols = vec![Vec::new(); self.input_len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                cols[j].push((self.first_row + r as i64, w));
            }
        }
        cols
    }
}

fn finish<W: Weight>(acc: BTreeMap<i64, W>) -> Vec<(usize, f64)> {
    acc.into_iter()
        .filter(|(_, w)| !w.is_zero())
        .map(|(j, w)| (j as usize, w.to_f64()))
        .collect()
}

fn add_into<W: Weight>(acc: &mut BTreeMap<i64, W>, node: i64, w: W) {
    match acc.remove(&node) {
        Some(prev) => {
            acc.insert(node, prev + w);
        }
        None => {
            acc.insert(node, w);
        }
    }
}

/// `a_{k,s}` for all `s in J(k)`, as node combinations.
fn a_functionals<W: Weight>(weights: &[W], order: usize, level: u32) -> (i64, Vec<BTreeMap<i64, W>>) {
    let mu = (weights.len() / 2) as i64;
    let extension = BoundaryExtension::new(order, level);
    let (lo, hi) = shift_range(order, level, Translation::Integer);
    let rows = (lo..=hi)
        .map(|s| {
            let mut acc = BTreeMap::new();
            for j in -mu..=mu {
                let lambda = weights[(j + mu) as usize].clone();
                if lambda.is_zero() {
                    continue;
                }
                for (node, w) in extension.node_weights::<W>(s - j) {
                    add_into(&mut acc, node, lambda.clone() * w);
                }
            }
            acc
        })
        .collect();
    (lo, rows)
}

/// `c^r_{k,s}` for all `s in J_r(k)`, as node combinations.
///
/// The coarse level enters through the refinement equation. For even `r`,
/// `M_{k-1,m} = 2^{1-r} sum_j C(r,j) M_{k, 2m + j - r/2}`; for odd `r` the
/// refined splines are half-translated, `M_{k-1,m} = 2^{1-r} sum_j C(r,j) M*_{k, 4m + 2j - r}`,
/// and `M_{k,s} = M*_{k,2s}`.
fn c_functionals<W: Weight>(weights: &[W], order: usize, level: u32) -> (i64, Vec<BTreeMap<i64, W>>) {
    let (a_lo, fine) = a_functionals(weights, order, level);
    let translation = Translation::for_order(order);
    let (lo, hi) = shift_range(order, level, translation);
    let mut rows: Vec<BTreeMap<i64, W>> = vec![BTreeMap::new(); (hi - lo + 1) as usize];
    let mut put = |row: i64, acc: &BTreeMap<i64, W>, scale: W, node_mul: i64| {
        if row < lo || row > hi {
            return;
        }
        let target = &mut rows[(row - lo) as usize];
        for (&node, w) in acc {
            add_into(target, node * node_mul, scale.clone() * w.clone());
        }
    };
    let one = W::from_int(1);
    for (i, acc) in fine.iter().enumerate() {
        let s = a_lo + i as i64;
        let row = match translation {
            Translation::Integer => s,
            Translation::Half => 2 * s,
        };
        put(row, acc, one.clone(), 1);
    }
    if level > 0 {
        let (m_lo, coarse) = a_functionals(weights, order, level - 1);
        let r = order as i64;
        let refine = W::from_int(1) / W::from_int(1i64 << (order - 1));
        for (i, acc) in coarse.iter().enumerate() {
            let m = m_lo + i as i64;
            for j in 0..=r {
                let row = match translation {
                    Translation::Integer => 2 * m + j - r / 2,
                    Translation::Half => 4 * m + 2 * j - r,
                };
                let scale = -(refine.clone() * W::from_int(binomial(order, j as usize) as i64));
                put(row, acc, scale, 2);
            }
        }
    }
    (lo, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FunctionalKind {
    A,
    C,
}

fn build_operator(mask: &Mask, level: u32, kind: FunctionalKind) -> LevelOperator {
    fn run<W: Weight>(weights: &[W], order: usize, level: u32, kind: FunctionalKind) -> LevelOperator {
        let (first_row, rows) = match kind {
            FunctionalKind::A => a_functionals(weights, order, level),
            FunctionalKind::C => c_functionals(weights, order, level),
        };
        LevelOperator {
            level,
            first_row,
            rows: rows.into_iter().map(finish).collect(),
        }
    }
    match &mask.exact {
        Some(exact) => run(exact, mask.order, level, kind),
        None => run(&mask.weights, mask.order, level, kind),
    }
}

/// Operators for `a_{k,.}` (integer-translated `M_{k,s}`, rows `J(k)`) and
/// `c^r_{k,.}` (basis `M^r_{k,s}`, rows `J_r(k)`) at levels `0..=max_level`.
#[derive(Debug, Clone)]
pub struct LevelOperators {
    mask: Mask,
    a: Vec<LevelOperator>,
    c: Vec<LevelOperator>,
}

impl LevelOperators {
    pub fn new(mask: &Mask, max_level: u32) -> Self {
        let a = (0..=max_level)
            .map(|k| build_operator(mask, k, FunctionalKind::A))
            .collect();
        let c = (0..=max_level)
            .map(|k| build_operator(mask, k, FunctionalKind::C))
            .collect();
        Self {
            mask: mask.clone(),
            a,
            c,
        }
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn max_level(&self) -> u32 {
        self.a.len() as u32 - 1
    }

    pub fn a(&self, level: u32) -> &LevelOperator {
        &self.a[level as usize]
    }

    pub fn c(&self, level: u32) -> &LevelOperator {
        &self.c[level as usize]
    }
}

/// Which functional a coefficient vector holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoefficientKind {
    /// `a_{k,s}`, coefficients of `Q_k` against `M_{k,s}`.
    A,
    /// `c^r_{k,s}`, coefficients of `q_k` against `M^r_{k,s}`.
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnivariateCoefficients {
    pub kind: CoefficientKind,
    pub level: u32,
    pub first_shift: i64,
    pub values: Vec<f64>,
}

impl UnivariateCoefficients {
    pub fn get(&self, s: i64) -> Option<f64> {
        let idx = s - self.first_shift;
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied()
    }

    /// The univariate series these coefficients define.
    pub fn to_spline(&self, order: usize) -> LevelSpline {
        let translation = match self.kind {
            CoefficientKind::A => Translation::Integer,
            CoefficientKind::C => Translation::for_order(order),
        };
        LevelSpline::new(
            order,
            translation,
            vec![self.level],
            vec![(self.first_shift, self.first_shift + self.values.len() as i64 - 1)],
            self.values.clone(),
        )
    }
}

fn level_samples(f: &impl Fn(f64) -> f64, level: u32) -> Vec<f64> {
    let n = 1u64 << level;
    (0..=n).map(|j| f(j as f64 / n as f64)).collect()
}

/// `a_{k,s}(f)` for all `s in J(k)`.
pub fn a_coeffs(f: impl Fn(f64) -> f64, mask: &Mask, k: u32) -> UnivariateCoefficients {
    let op = build_operator(mask, k, FunctionalKind::A);
    UnivariateCoefficients {
        kind: CoefficientKind::A,
        level: k,
        first_shift: op.first_row,
        values: op.apply(&level_samples(&f, k)),
    }
}

/// `c^r_{k,s}(f)` for all `s in J_r(k)`.
pub fn c_coeffs(f: impl Fn(f64) -> f64, mask: &Mask, k: u32) -> UnivariateCoefficients {
    let op = build_operator(mask, k, FunctionalKind::C);
    UnivariateCoefficients {
        kind: CoefficientKind::C,
        level: k,
        first_shift: op.first_row,
        values: op.apply(&level_samples(&f, k)),
    }
}

/// The univariate operator `Q_k(f)` as a spline series; `Q_{-1} = 0` is not
/// represented.
pub fn quasi_interpolant(f: impl Fn(f64) -> f64, mask: &Mask, k: u32) -> LevelSpline {
    a_coeffs(f, mask, k).to_spline(mask.order())
}
