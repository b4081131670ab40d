//! Discrete mixed-Besov quasi-norms, moduli of smoothness and the
//! inequality probes that relate spline norms to coefficient norms.

use rayon::prelude::*;
use serde::Serialize;

use crate::bspline::binomial;
use crate::error::{Error, Result};
use crate::faber::FaberCoefficients;
use crate::quadrature::{gauss_legendre, lq_norm, lq_norm_estimate, Integrand, QuadratureRule};
use crate::recovery::CoefficientTable;
use crate::spline::{CompensatedSum, LevelSpline};

/// Relative change under refinement above which a quadrature norm is
/// flagged as under-resolved.
pub const RESOLUTION_TOLERANCE: f64 = 0.01;

/// `(sum |a_s|^p)^{1/p}`, or `max |a_s|` for `p = inf`.
pub fn sequence_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mut acc = CompensatedSum::default();
    for v in values {
        if *v != 0.0 {
            acc.add(v.abs().powf(p));
        }
    }
    acc.value().powf(1.0 / p)
}

/// `l_theta` aggregate of nonnegative terms.
pub fn ell_theta(terms: impl IntoIterator<Item = f64>, theta: f64) -> f64 {
    if theta.is_infinite() {
        return terms.into_iter().fold(0.0, f64::max);
    }
    let mut acc = CompensatedSum::default();
    for t in terms {
        if t != 0.0 {
            acc.add(t.powf(theta));
        }
    }
    acc.value().powf(1.0 / theta)
}

/// Smoothness `alpha`, integrability `p`, summability `theta`, dimension and
/// spline order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovParams {
    pub alpha: f64,
    pub p: f64,
    pub theta: f64,
    pub dim: usize,
    pub order: usize,
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, theta: f64, dim: usize, order: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !(p > 0.0) {
            return Err(Error::InvalidParams(format!("p must be in (0, inf], got {p}")));
        }
        if !(theta > 0.0) {
            return Err(Error::InvalidParams(format!("theta must be in (0, inf], got {theta}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        if order == 0 {
            return Err(Error::InvalidOrder(0));
        }
        Ok(Self {
            alpha,
            p,
            theta,
            dim,
            order,
        })
    }

    /// Whether `1/p < alpha < r`, the range where the discrete norms are
    /// equivalent to the Besov norm.
    pub fn in_equivalence_range(&self) -> bool {
        1.0 / self.p < self.alpha && self.alpha < self.order as f64
    }

    pub fn require_equivalence_range(&self) -> Result<()> {
        if self.in_equivalence_range() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "norm equivalence needs 1/p < alpha < r, got alpha = {}, p = {}, r = {}",
                self.alpha, self.p, self.order
            )))
        }
    }
}

/// Level weight used by the coefficient norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum B3Variant {
    /// `2^{(alpha - 1/p)|k|_1}`.
    #[default]
    Mixed,
    /// `2^{(alpha - d/p)|k|_1}`.
    Scalar,
}

impl std::str::FromStr for B3Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(B3Variant::Mixed),
            "scalar" => Ok(B3Variant::Scalar),
            other => Err(Error::InvalidParams(format!("unknown B3 variant {other:?}"))),
        }
    }
}

/// Per-level coefficient arrays of a sparse representation.
pub trait LevelCoefficients {
    fn dim(&self) -> usize;

    fn budget(&self) -> u32;

    fn for_each_level(&self, visit: &mut dyn FnMut(&[u32], &[f64]));
}

impl LevelCoefficients for CoefficientTable {
    fn dim(&self) -> usize {
        CoefficientTable::dim(self)
    }
    fn budget(&self) -> u32 {
        CoefficientTable::budget(self)
    }
    fn for_each_level(&self, visit: &mut dyn FnMut(&[u32], &[f64])) {
        for (k, block) in self.levels().members().iter().zip(self.blocks()) {
            visit(k, block.coefficients());
        }
    }
}

impl LevelCoefficients for FaberCoefficients {
    fn dim(&self) -> usize {
        FaberCoefficients::dim(self)
    }
    fn budget(&self) -> u32 {
        FaberCoefficients::budget(self)
    }
    fn for_each_level(&self, visit: &mut dyn FnMut(&[u32], &[f64])) {
        for (k, block) in self.levels().members().iter().zip(self.blocks()) {
            visit(k, block);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTerm {
    pub level: Vec<u32>,
    /// `2^{w |k|_1}`.
    pub weight: f64,
    /// Coefficient or function norm at this level.
    pub norm: f64,
    /// `weight * norm`.
    pub term: f64,
}

/// Weighted per-level terms and their `l_theta` aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormLadder {
    pub per_level: Vec<LevelTerm>,
    pub theta: f64,
    pub value: f64,
}

impl NormLadder {
    fn new(per_level: Vec<LevelTerm>, theta: f64) -> Self {
        let value = ell_theta(per_level.iter().map(|t| t.term), theta);
        Self {
            per_level,
            theta,
            value,
        }
    }

    /// Aggregate over levels with `|k|_1 <= m`.
    pub fn truncated(&self, m: u32) -> f64 {
        ell_theta(
            self.per_level
                .iter()
                .filter(|t| t.level.iter().sum::<u32>() <= m)
                .map(|t| t.term),
            self.theta,
        )
    }
}

fn level_weight(exponent: f64, k: &[u32]) -> f64 {
    2f64.powf(exponent * k.iter().sum::<u32>() as f64)
}

fn check_dim(params: &BesovParams, dim: usize) -> Result<()> {
    if params.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            got: dim,
        });
    }
    Ok(())
}

/// Coefficient quasi-norm `(sum_k (2^{(alpha - 1/p)|k|_1} ||c_k||_p)^theta)^{1/theta}`.
pub fn discrete_b3_norm(table: &dyn LevelCoefficients, params: &BesovParams) -> Result<NormLadder> {
    discrete_b3_norm_with(table, params, B3Variant::Mixed)
}

pub fn discrete_b3_norm_with(
    table: &dyn LevelCoefficients,
    params: &BesovParams,
    variant: B3Variant,
) -> Result<NormLadder> {
    check_dim(params, table.dim())?;
    let exponent = match variant {
        B3Variant::Mixed => params.alpha - 1.0 / params.p,
        B3Variant::Scalar => params.alpha - params.dim as f64 / params.p,
    };
    let mut per_level = Vec::new();
    table.for_each_level(&mut |k, coeffs| {
        let weight = level_weight(exponent, k);
        let norm = sequence_norm(coeffs, params.p);
        per_level.push(LevelTerm {
            level: k.to_vec(),
            weight,
            norm,
            term: weight * norm,
        });
    });
    Ok(NormLadder::new(per_level, params.theta))
}

/// Function quasi-norm `l_theta` of `2^{alpha |k|_1} ||q_k||_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct B2Norm {
    pub ladder: NormLadder,
    /// Largest relative change of a level norm under a refined rule.
    pub max_relative_delta: f64,
    /// Set when `max_relative_delta` exceeds `RESOLUTION_TOLERANCE`.
    pub under_resolved: bool,
}

impl B2Norm {
    pub fn value(&self) -> f64 {
        self.ladder.value
    }
}

pub fn b2_norm_via_quadrature(table: &CoefficientTable, params: &BesovParams) -> Result<B2Norm> {
    check_dim(params, table.dim())?;
    let terms = table
        .levels()
        .members()
        .par_iter()
        .zip(table.blocks().par_iter())
        .map(|(k, block)| {
            let weight = level_weight(params.alpha, k);
            if block.max_abs_coefficient() == 0.0 {
                return Ok((LevelTerm { level: k.clone(), weight, norm: 0.0, term: 0.0 }, 0.0));
            }
            let rule = QuadratureRule::for_spline_levels(k, params.p);
            let estimate = lq_norm_estimate(block, params.p, &rule)?;
            let norm = estimate.value;
            Ok((
                LevelTerm {
                    level: k.clone(),
                    weight,
                    norm,
                    term: weight * norm,
                },
                estimate.relative_delta,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative_delta = terms.iter().fold(0.0f64, |m, (_, d)| m.max(*d));
    let ladder = NormLadder::new(terms.into_iter().map(|(t, _)| t).collect(), params.theta);
    Ok(B2Norm {
        ladder,
        max_relative_delta,
        under_resolved: max_relative_delta > RESOLUTION_TOLERANCE,
    })
}

/// Search and quadrature resolution of `modulus_estimate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusOptions {
    /// Ladder points per halving of `h`.
    pub per_octave: u32,
    /// Number of octaves below 1 covered by the ladder.
    pub octaves: u32,
    /// Quadrature cells per axis are `2^cells`.
    pub cells: u32,
    /// Gauss–Legendre points per cell; `p = inf` uses a dyadic grid at
    /// level `cells + 2` instead.
    pub gauss: usize,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        Self {
            per_octave: 32,
            octaves: 8,
            cells: 4,
            gauss: 4,
        }
    }
}

impl ModulusOptions {
    /// Ladder `h_j = 2^{-j / per_octave}`, descending; shared by every `t` so
    /// the estimate is monotone in `t`.
    fn ladder(&self) -> Vec<f64> {
        (0..=self.per_octave * self.octaves)
            .map(|j| 2f64.powf(-(j as f64) / self.per_octave as f64))
            .collect()
    }
}

/// `Delta^{l,e}_h f(x)`: the `l`th forward difference with step `h_i` along
/// every axis `i` in `e`.
pub fn mixed_difference(f: &dyn Fn(&[f64]) -> f64, l: u32, e: &[usize], h: &[f64], x: &[f64]) -> f64 {
    let weights: Vec<f64> = (0..=l)
        .map(|j| {
            let sign = if (l - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(l as usize, j as usize)
        })
        .collect();
    let mut point = x.to_vec();
    let mut acc = CompensatedSum::default();
    let mut j = vec![0u32; e.len()];
    loop {
        let mut w = 1.0;
        for (slot, &axis) in e.iter().enumerate() {
            point[axis] = x[axis] + j[slot] as f64 * h[axis];
            w *= weights[j[slot] as usize];
        }
        acc.add(w * f(&point));
        let mut slot = e.len();
        loop {
            if slot == 0 {
                return acc.value();
            }
            slot -= 1;
            j[slot] += 1;
            if j[slot] <= l {
                break;
            }
            j[slot] = 0;
        }
    }
}

/// Lower estimate of `omega^e_l(f, t)_p = sup_{0 < h_i < t_i} ||Delta^{l,e}_h f||_p`
/// over `{x : x_i + l h_i <= 1}`. The supremum runs over the fixed ladder of
/// `options` (negative steps mirror positive ones) and the norm uses tensor
/// quadrature.
pub fn modulus_estimate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dim: usize,
    l: u32,
    e: &[usize],
    t: &[f64],
    p: f64,
    options: &ModulusOptions,
) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParams("difference order must be at least 1".into()));
    }
    if t.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: t.len() });
    }
    if e.is_empty() || e.iter().any(|&i| i >= dim) {
        return Err(Error::InvalidParams(format!("axis set {e:?} is not a nonempty subset of 0..{dim}")));
    }
    if t.iter().any(|&ti| !(ti > 0.0 && ti <= 1.0)) {
        return Err(Error::InvalidParams("steps must lie in (0, 1]".into()));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParams(format!("p must be in (0, inf], got {p}")));
    }
    let ladder = options.ladder();
    // admissible steps per axis: h < t_i and l h < 1
    let steps: Vec<Vec<f64>> = e
        .iter()
        .map(|&i| {
            ladder
                .iter()
                .copied()
                .filter(|&h| h <= t[i] && (l as f64) * h < 1.0)
                .collect()
        })
        .collect();
    if steps.iter().any(Vec::is_empty) {
        return Ok(0.0);
    }
    // unit-cube nodes, mapped onto the shrunken domain per step
    let (nodes, weights) = if p.is_infinite() {
        let n = 1usize << (options.cells + 2);
        ((0..=n).map(|i| i as f64 / n as f64).collect::<Vec<_>>(), vec![1.0; n + 1])
    } else {
        let (gx, gw) = gauss_legendre(options.gauss);
        let cells = 1usize << options.cells;
        let mut x = Vec::with_capacity(cells * gx.len());
        let mut w = Vec::with_capacity(cells * gx.len());
        for c in 0..cells {
            for (xi, wi) in gx.iter().zip(&gw) {
                x.push((c as f64 + xi) / cells as f64);
                w.push(wi / cells as f64);
            }
        }
        (x, w)
    };
    let total: usize = nodes.len().pow(dim as u32);
    let combos: usize = steps.iter().map(Vec::len).product();
    let best = (0..combos)
        .into_par_iter()
        .map(|mut c| {
            let mut h = vec![0.0; dim];
            for (slot, &axis) in e.iter().enumerate().rev() {
                h[axis] = steps[slot][c % steps[slot].len()];
                c /= steps[slot].len();
            }
            let scale: Vec<f64> = (0..dim).map(|i| 1.0 - l as f64 * h[i]).collect();
            let mut x = vec![0.0; dim];
            let mut sup = 0.0f64;
            let mut acc = CompensatedSum::default();
            for flat in 0..total {
                let mut rest = flat;
                let mut w = 1.0;
                for i in (0..dim).rev() {
                    let n = rest % nodes.len();
                    rest /= nodes.len();
                    x[i] = nodes[n] * scale[i];
                    w *= weights[n];
                }
                let v = mixed_difference(f, l, e, &h, &x).abs();
                if p.is_infinite() {
                    sup = sup.max(v);
                } else if v != 0.0 {
                    acc.add(w * v.powf(p));
                }
            }
            if p.is_infinite() {
                sup
            } else {
                let measure: f64 = scale.iter().product();
                (acc.value() * measure).powf(1.0 / p)
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// `||sum_k g_k||_q / (sum_k ||2^{(1/p - 1/q)|k|_1} g_k||_p^q)^{1/q}`.
pub fn embedding_inequality_check(levels: &[LevelSpline], p: f64, q: f64) -> Result<f64> {
    if !(0.0 < p && p < q && q.is_finite()) {
        return Err(Error::InvalidParams(format!("need 0 < p < q < inf, got p = {p}, q = {q}")));
    }
    let Some(first) = levels.first() else {
        return Err(Error::InvalidParams("no levels given".into()));
    };
    let d = first.dim();
    if let Some(bad) = levels.iter().find(|g| g.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.dim() });
    }
    let finest: Vec<u32> = (0..d)
        .map(|i| levels.iter().map(|g| g.levels()[i]).max().unwrap_or(0))
        .collect();
    let parts: Vec<&dyn Integrand> = levels.iter().map(|g| g as &dyn Integrand).collect();
    let sum = crate::quadrature::Sum(parts);
    let lhs = lq_norm(&sum, q, &QuadratureRule::for_spline_levels(&finest, q))?;
    let mut acc = CompensatedSum::default();
    for g in levels {
        let norm = lq_norm(g, p, &QuadratureRule::for_spline_levels(g.levels(), p))?;
        acc.add((level_weight(1.0 / p - 1.0 / q, g.levels()) * norm).powf(q));
    }
    let rhs = acc.value().powf(1.0 / q);
    Ok(if lhs == 0.0 { 0.0 } else { lhs / rhs })
}

/// `||g||_q 2^{-(1/p - 1/q)|k|_1} / ||g||_p` for a single-level spline.
pub fn nikolskii_ratio(g: &LevelSpline, p: f64, q: f64) -> Result<f64> {
    if !(0.0 < p && p < q) {
        return Err(Error::InvalidParams(format!("need 0 < p < q, got p = {p}, q = {q}")));
    }
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let norm_q = lq_norm(g, q, &QuadratureRule::for_spline_levels(g.levels(), q))?;
    let norm_p = lq_norm(g, p, &QuadratureRule::for_spline_levels(g.levels(), p))?;
    Ok(norm_q * level_weight(-(1.0 / p - inv_q), g.levels()) / norm_p)
}

/// `||g||_p / (2^{-|k|_1/p} ||a||_p)` for `g = sum_s a_s M_{k,s}`.
pub fn stability_ratio(g: &LevelSpline, p: f64) -> Result<f64> {
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let norm = lq_norm(g, p, &QuadratureRule::for_spline_levels(g.levels(), p))?;
    Ok(norm / (level_weight(-inv_p, g.levels()) * sequence_norm(g.coefficients(), p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::Translation;
    use crate::faber::{faber_coeffs, FaberBasisFn};
    use crate::quasi_interpolant::builtin_mask;
    use crate::recovery::build_coefficients;
    use crate::sparse_grid::EvalCache;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(rng: &mut ChaCha8Rng, d: usize, r: usize, m: u32) -> CoefficientTable {
        CoefficientTable::from_blocks(d, r, m, |_, n| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
    }

    fn random_level(rng: &mut ChaCha8Rng, r: usize, k: Vec<u32>) -> LevelSpline {
        let mut g = LevelSpline::zeros(r, Translation::for_order(r), k);
        g.coefficients_mut().iter_mut().for_each(|c| *c = rng.gen_range(-1.0..=1.0));
        g
    }

    #[test]
    fn params_validation() {
        assert!(BesovParams::new(1.5, 2.0, 2.0, 2, 2).is_ok());
        assert!(BesovParams::new(0.0, 2.0, 2.0, 2, 2).is_err());
        assert!(BesovParams::new(1.0, 0.0, 2.0, 2, 2).is_err());
        assert!(BesovParams::new(1.0, f64::INFINITY, f64::INFINITY, 2, 2).is_ok());
        assert!(BesovParams::new(1.0, 2.0, -1.0, 2, 2).is_err());
        let p = BesovParams::new(0.4, 2.0, 2.0, 1, 2).unwrap();
        assert!(!p.in_equivalence_range());
        assert!(p.require_equivalence_range().is_err());
        assert!(BesovParams::new(1.5, 1.0, 1.0, 1, 2).unwrap().in_equivalence_range());
    }

    #[test]
    fn single_faber_function() {
        let (alpha, p) = (1.3, 2.0);
        let phi = [FaberBasisFn::new(2, 3, 2).unwrap(), FaberBasisFn::new(2, 1, 0).unwrap()];
        let f = |x: &[f64]| phi[0].eval(x[0]) * phi[1].eval(x[1]);
        let c = faber_coeffs(&f, 2, 2, 5, &EvalCache::new()).unwrap();
        let params = BesovParams::new(alpha, p, 1.0, 2, 2).unwrap();
        let norm = discrete_b3_norm(&c, &params).unwrap().value;
        assert!((norm - 2f64.powf((alpha - 1.0 / p) * 4.0)).abs() < 1e-12);
        // the general r = 2 table sees the same coefficient
        let table = build_coefficients(&f, 2, &builtin_mask(2).unwrap(), 5, &EvalCache::new()).unwrap();
        let general = discrete_b3_norm(&table, &params).unwrap().value;
        assert!((general - norm).abs() < 1e-12);
    }

    #[test]
    fn zero_and_polynomials() {
        let params = BesovParams::new(1.5, 2.0, 2.0, 2, 2).unwrap();
        let zero = build_coefficients(&|_: &[f64]| 0.0, 2, &builtin_mask(2).unwrap(), 4, &EvalCache::new()).unwrap();
        assert_eq!(discrete_b3_norm(&zero, &params).unwrap().value, 0.0);
        assert_eq!(b2_norm_via_quadrature(&zero, &params).unwrap().value(), 0.0);
        let linear = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
        let table = build_coefficients(&linear, 2, &builtin_mask(2).unwrap(), 4, &EvalCache::new()).unwrap();
        let ladder = discrete_b3_norm(&table, &params).unwrap();
        for t in &ladder.per_level {
            if t.level != [0, 0] {
                assert!(t.term.abs() < 1e-12, "{:?}", t.level);
            }
        }
        assert!((ladder.value - ladder.per_level[0].term).abs() < 1e-12);
    }

    #[test]
    fn scalar_variant_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let table = random_table(&mut rng, 2, 2, 3);
        let params = BesovParams::new(1.5, 2.0, f64::INFINITY, 2, 2).unwrap();
        let mixed = discrete_b3_norm(&table, &params).unwrap();
        let scalar = discrete_b3_norm_with(&table, &params, B3Variant::Scalar).unwrap();
        for (a, b) in mixed.per_level.iter().zip(&scalar.per_level) {
            let k: u32 = a.level.iter().sum();
            assert!((b.weight - a.weight * 2f64.powf(-0.5 * k as f64)).abs() < 1e-12);
        }
        assert_eq!("scalar".parse::<B3Variant>().unwrap(), B3Variant::Scalar);
    }

    #[test]
    fn truncation_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table = random_table(&mut rng, 2, 2, 5);
        let params = BesovParams::new(1.5, 1.0, 2.0, 2, 2).unwrap();
        let ladder = discrete_b3_norm(&table, &params).unwrap();
        let mut last = 0.0;
        for m in 0..=5 {
            let v = ladder.truncated(m);
            assert!(v >= last);
            last = v;
        }
        assert!((last - ladder.value).abs() < 1e-12);
    }

    #[test]
    fn b2_of_single_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = BesovParams::new(1.5, 2.0, 2.0, 2, 2).unwrap();
        let k = vec![2u32, 1];
        let g = random_level(&mut rng, 2, k.clone());
        let table = CoefficientTable::from_blocks(2, 2, 3, |level, n| {
            if level == &k[..] {
                g.coefficients().to_vec()
            } else {
                vec![0.0; n]
            }
        });
        let b2 = b2_norm_via_quadrature(&table, &params).unwrap();
        let norm = lq_norm(&g, 2.0, &QuadratureRule::for_spline_levels(&k, 2.0)).unwrap();
        assert!((b2.value() - 2f64.powf(1.5 * 3.0) * norm).abs() < 1e-9);
        assert!(!b2.under_resolved);
    }

    #[test]
    fn stability_ratio_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [1.0, 2.0, f64::INFINITY] {
            let ratios: Vec<f64> = (0..20)
                .map(|i| {
                    let k = vec![i % 5, (i / 5) % 4];
                    stability_ratio(&random_level(&mut rng, 2, k), p).unwrap()
                })
                .collect();
            let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
            assert!(lo > 0.0 && hi / lo < 20.0, "p={p}: {lo} {hi}");
        }
    }

    #[test]
    fn nikolskii_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ratios = Vec::new();
        for k in 0..=6u32 {
            ratios.push(nikolskii_ratio(&random_level(&mut rng, 2, vec![k]), 1.0, 2.0).unwrap());
        }
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi < 4.0 && lo > 0.05, "{ratios:?}");
    }

    #[test]
    fn embedding_constant_level() {
        let mut g = LevelSpline::zeros(2, Translation::Integer, vec![0, 0]);
        g.coefficients_mut().iter_mut().for_each(|c| *c = -3.0);
        let ratio = embedding_inequality_check(&[g], 1.0, 2.0).unwrap();
        assert!((ratio - 1.0).abs() < 1e-12);
        assert!(embedding_inequality_check(&[], 1.0, 2.0).is_err());
    }

    #[test]
    fn modulus_examples() {
        let opts = ModulusOptions::default();
        let sq = |x: &[f64]| x[0] * x[0];
        for t in [0.05, 0.1, 0.3] {
            let w = modulus_estimate(&sq, 1, 2, &[0], &[t], f64::INFINITY, &opts).unwrap();
            let exact = 2.0 * t * t;
            assert!(w <= exact * (1.0 + 1e-12) && w >= 0.95 * exact, "t={t}: {w}");
        }
        let bilinear = |x: &[f64]| 3.0 + x[0] - 2.0 * x[1] + x[0] * x[1];
        let small = ModulusOptions { per_octave: 4, octaves: 3, cells: 2, gauss: 2 };
        for p in [1.0, 2.0, f64::INFINITY] {
            let w = modulus_estimate(&bilinear, 2, 2, &[0, 1], &[0.4, 0.4], p, &small).unwrap();
            assert!(w < 1e-12);
        }
        assert!(modulus_estimate(&sq, 1, 0, &[0], &[0.1], 1.0, &opts).is_err());
        assert!(modulus_estimate(&sq, 1, 1, &[1], &[0.1], 1.0, &opts).is_err());
    }

    #[test]
    fn mixed_difference_of_product() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() * x[1].exp();
        let h = [0.1, 0.2];
        let x = [0.3, 0.4];
        let want = ((3.0 * 0.4f64).sin() - (3.0 * 0.3f64).sin()) * (0.6f64.exp() - 0.4f64.exp());
        assert!((mixed_difference(&f, 1, &[0, 1], &h, &x) - want).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn homogeneity(seed in 0u64..1000, scale in -5.0f64..5.0, p in prop::sample::select(vec![1.0, 2.0, 3.5, f64::INFINITY])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = random_table(&mut rng, 2, 2, 3);
            let scaled = CoefficientTable::from_blocks(2, 2, 3, |k, _| {
                table.block(k).unwrap().coefficients().iter().map(|c| c * scale).collect()
            });
            let params = BesovParams::new(1.5, p, 2.0, 2, 2).unwrap();
            let a = discrete_b3_norm(&table, &params).unwrap().value;
            let b = discrete_b3_norm(&scaled, &params).unwrap().value;
            prop_assert!((b - scale.abs() * a).abs() <= 1e-12 * b.abs().max(1.0));
            let a2 = b2_norm_via_quadrature(&table, &params).unwrap().value();
            let b2 = b2_norm_via_quadrature(&scaled, &params).unwrap().value();
            prop_assert!((b2 - scale.abs() * a2).abs() <= 1e-12 * b2.abs().max(1.0));
        }

        #[test]
        fn theta_monotone(seed in 0u64..1000, t1 in 0.3f64..4.0, t2 in 0.3f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = random_table(&mut rng, 2, 2, 4);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = discrete_b3_norm(&table, &BesovParams::new(1.2, 2.0, lo, 2, 2).unwrap()).unwrap().value;
            let b = discrete_b3_norm(&table, &BesovParams::new(1.2, 2.0, hi, 2, 2).unwrap()).unwrap().value;
            let c = discrete_b3_norm(&table, &BesovParams::new(1.2, 2.0, f64::INFINITY, 2, 2).unwrap()).unwrap().value;
            prop_assert!(b <= a * (1.0 + 1e-12));
            prop_assert!(c <= b * (1.0 + 1e-12));
        }

        #[test]
        fn modulus_monotone(t1 in 0.01f64..1.0, t2 in 0.01f64..1.0, p in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
            let f = |x: &[f64]| (6.0 * x[0]).sin() + x[0].abs().sqrt();
            let opts = ModulusOptions { per_octave: 8, octaves: 8, cells: 3, gauss: 3 };
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = modulus_estimate(&f, 1, 1, &[0], &[lo], p, &opts).unwrap();
            let b = modulus_estimate(&f, 1, 1, &[0], &[hi], p, &opts).unwrap();
            prop_assert!(a <= b + 1e-12);
        }
    }
}
