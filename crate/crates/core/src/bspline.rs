//! Centered B-splines of order `r`, their dyadic dilations and tensor products.
//!
//! The centered B-spline `M` of order `r` is the `r`-fold convolution of the
//! characteristic function of `[-1/2, 1/2)`. It is a piecewise polynomial of
//! degree `r - 1` with support `[-r/2, r/2]` and knots at `-r/2, -r/2 + 1, ..., r/2`.
//!
//! Evaluation uses the explicit per-piece polynomial coefficients, computed once
//! at construction from the truncated-power representation in exact integer
//! arithmetic. For `r >= 2` the spline is evaluated as `M(|x|)`, so symmetry is
//! exact. The order-1 spline is right-open: `M(-1/2) = 1`, `M(1/2) = 0`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Number of orders kept in the shared evaluation table.
const CACHED_ORDERS: usize = 8;

/// `n choose k` as a float. Exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

fn binomial_i128(n: usize, k: usize) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

/// Centered B-spline of a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredBSpline {
    order: usize,
    /// `pieces[i]` holds ascending-power coefficients of the polynomial on
    /// `[-r/2 + i, -r/2 + i + 1)` in the local variable `u = x + r/2 - i`.
    pieces: Vec<Vec<f64>>,
}

impl CenteredBSpline {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(0));
        }
        let r = order;
        let n = r - 1;
        let mut factorial: i128 = 1;
        for i in 2..=n {
            factorial *= i as i128;
        }
        let mut pieces = Vec::with_capacity(r);
        for i in 0..r {
            // piece_i(u) = 1/(r-1)! * sum_{l<=i} (-1)^l C(r,l) (u + i - l)^(r-1)
            let mut coeffs = vec![0i128; n + 1];
            for l in 0..=i {
                let sign: i128 = if l % 2 == 0 { 1 } else { -1 };
                let c = (i - l) as i128;
                let outer = sign * binomial_i128(r, l);
                let mut c_pow: i128 = 1;
                // (u + c)^n = sum_p C(n,p) c^(n-p) u^p, accumulate from p = n downwards
                for p in (0..=n).rev() {
                    coeffs[p] += outer * binomial_i128(n, p) * c_pow;
                    c_pow *= c;
                }
            }
            pieces.push(
                coeffs
                    .into_iter()
                    .map(|c| c as f64 / factorial as f64)
                    .collect(),
            );
        }
        Ok(Self { order, pieces })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Half-width of the support, `r/2`.
    pub fn half_width(&self) -> f64 {
        self.order as f64 / 2.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let half = self.half_width();
        if self.order == 1 {
            return if (-0.5..0.5).contains(&x) { 1.0 } else { 0.0 };
        }
        let y = x.abs();
        if y >= half {
            return 0.0;
        }
        let shifted = y + half;
        let i = (shifted.floor() as usize).min(self.order - 1);
        let u = shifted - i as f64;
        self.pieces[i]
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc.mul_add(u, c))
    }

    /// `M(x) - 2^{1-r} sum_{j=0}^{r} C(r,j) M(2x - j + r/2)`.
    pub fn refinement_residual(&self, x: f64) -> f64 {
        let r = self.order;
        let half = self.half_width();
        let rhs: f64 = (0..=r)
            .map(|j| binomial(r, j) * self.eval(2.0 * x - j as f64 + half))
            .sum::<f64>()
            * 2f64.powi(1 - r as i32);
        self.eval(x) - rhs
    }
}

fn shared_table() -> &'static [CenteredBSpline] {
    static TABLE: OnceLock<Vec<CenteredBSpline>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (1..=CACHED_ORDERS)
            .map(|r| CenteredBSpline::new(r).expect("positive order"))
            .collect()
    })
}

/// Shared spline for small orders, freshly built otherwise.
pub(crate) fn spline_for(order: usize) -> Result<std::borrow::Cow<'static, CenteredBSpline>> {
    if order == 0 {
        return Err(Error::InvalidOrder(0));
    }
    if order <= CACHED_ORDERS {
        Ok(std::borrow::Cow::Borrowed(&shared_table()[order - 1]))
    } else {
        Ok(std::borrow::Cow::Owned(CenteredBSpline::new(order)?))
    }
}

/// Value of the order-`r` centered B-spline at `x`.
pub fn eval_centered(r: i64, x: f64) -> Result<f64> {
    if r < 1 {
        return Err(Error::InvalidOrder(r));
    }
    Ok(spline_for(r as usize)?.eval(x))
}

/// Refinement-equation residual for the order-`r` spline at `x`.
pub fn refinement_residual(r: i64, x: f64) -> Result<f64> {
    if r < 1 {
        return Err(Error::InvalidOrder(r));
    }
    Ok(spline_for(r as usize)?.refinement_residual(x))
}

/// How a dilated spline is translated at its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Translation {
    /// `M(2^k x - s)`
    Integer,
    /// `M(2^k x - s/2)`
    Half,
}

impl Translation {
    /// Translation used by the representation basis of order `r`: integer
    /// shifts for even orders, half-integer shifts for odd orders.
    pub fn for_order(order: usize) -> Self {
        if order.is_multiple_of(2) {
            Translation::Integer
        } else {
            Translation::Half
        }
    }

    /// Argument `2^k x - shift` for this translation.
    #[inline]
    pub fn argument(self, level: u32, shift: i64, x: f64) -> f64 {
        let scaled = x * (1u64 << level) as f64;
        match self {
            Translation::Integer => scaled - shift as f64,
            Translation::Half => scaled - shift as f64 / 2.0,
        }
    }

    /// Shifts whose spline may be nonzero at `x`, as an inclusive range.
    pub fn active_shifts(self, order: usize, level: u32, x: f64) -> (i64, i64) {
        let scaled = x * (1u64 << level) as f64;
        let half = order as f64 / 2.0;
        match self {
            Translation::Integer => ((scaled - half).floor() as i64, (scaled + half).ceil() as i64),
            Translation::Half => (
                (2.0 * scaled - order as f64).floor() as i64,
                (2.0 * scaled + order as f64).ceil() as i64,
            ),
        }
    }
}

/// `M(2^k x - s)` or `M(2^k x - s/2)`.
#[derive(Debug, Clone)]
pub struct DilatedBSpline {
    base: CenteredBSpline,
    level: u32,
    shift: i64,
    translation: Translation,
}

impl DilatedBSpline {
    pub fn new(order: usize, level: u32, shift: i64, translation: Translation) -> Result<Self> {
        Ok(Self {
            base: spline_for(order)?.into_owned(),
            level,
            shift,
            translation,
        })
    }

    /// The basis element `M^r_{k,s}` of the representation: integer
    /// translated for even `r`, half-integer translated for odd `r`.
    pub fn representation(order: usize, level: u32, shift: i64) -> Result<Self> {
        Self::new(order, level, shift, Translation::for_order(order))
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn translation(&self) -> Translation {
        self.translation
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.base
            .eval(self.translation.argument(self.level, self.shift, x))
    }
}

/// Tensor product of dilated splines, one factor per axis.
#[derive(Debug, Clone)]
pub struct MixedBSpline {
    factors: Vec<DilatedBSpline>,
}

impl MixedBSpline {
    pub fn new(factors: Vec<DilatedBSpline>) -> Self {
        Self { factors }
    }

    pub fn representation(order: usize, levels: &[u32], shifts: &[i64]) -> Result<Self> {
        if levels.len() != shifts.len() {
            return Err(Error::DimensionMismatch {
                expected: levels.len(),
                got: shifts.len(),
            });
        }
        let factors = levels
            .iter()
            .zip(shifts)
            .map(|(&k, &s)| DilatedBSpline::representation(order, k, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[DilatedBSpline] {
        &self.factors
    }
}

/// Value of a mixed B-spline at `x`.
pub fn eval_mixed(spline: &MixedBSpline, x: &[f64]) -> Result<f64> {
    if x.len() != spline.dim() {
        return Err(Error::DimensionMismatch {
            expected: spline.dim(),
            got: x.len(),
        });
    }
    let mut value = 1.0;
    for (factor, &xi) in spline.factors.iter().zip(x) {
        value *= factor.eval(xi);
        if value == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Cox-de Boor recursion on the uniform knots -r/2, ..., r/2.
    fn cox_de_boor(r: usize, x: f64) -> f64 {
        let knots: Vec<f64> = (0..=r).map(|i| i as f64 - r as f64 / 2.0).collect();
        let mut basis: Vec<f64> = (0..r)
            .map(|i| {
                if knots[i] <= x && x < knots[i + 1] {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        for p in 1..r {
            for i in 0..(r - p) {
                let left = (x - knots[i]) / (knots[i + p] - knots[i]) * basis[i];
                let right = (knots[i + p + 1] - x) / (knots[i + p + 1] - knots[i + 1]) * basis[i + 1];
                basis[i] = left + right;
            }
        }
        basis[0]
    }

    #[test]
    fn cox_de_boor_oracle_values() {
        assert!((cox_de_boor(4, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((cox_de_boor(4, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((cox_de_boor(2, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn named_values() {
        assert_eq!(eval_centered(2, 0.0).unwrap(), 1.0);
        assert_eq!(eval_centered(1, 0.49).unwrap(), 1.0);
        assert_eq!(eval_centered(1, 0.51).unwrap(), 0.0);
        assert!((eval_centered(4, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((eval_centered(4, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(eval_centered(3, 1.5).unwrap(), 0.0);
        assert_eq!(eval_centered(3, -1.5).unwrap(), 0.0);
    }

    #[test]
    fn order_one_is_right_open() {
        assert_eq!(eval_centered(1, -0.5).unwrap(), 1.0);
        assert_eq!(eval_centered(1, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn invalid_order() {
        assert!(matches!(eval_centered(0, 0.0), Err(Error::InvalidOrder(0))));
        assert!(matches!(eval_centered(-3, 0.0), Err(Error::InvalidOrder(-3))));
        assert!(refinement_residual(0, 0.0).is_err());
    }

    #[test]
    fn closed_form_matches_cox_de_boor() {
        for r in 1..=8 {
            let spline = CenteredBSpline::new(r).unwrap();
            for i in 0..=4000 {
                let x = -5.0 + 10.0 * i as f64 / 4000.0;
                let diff = (spline.eval(x) - cox_de_boor(r, x)).abs();
                assert!(diff < 1e-13, "r={r} x={x} diff={diff}");
            }
        }
    }

    #[test]
    fn refinement_examples() {
        assert!(refinement_residual(2, 0.5).unwrap().abs() <= 1e-12);
        assert!(refinement_residual(1, 0.0).unwrap().abs() <= 1e-12);
        let spline = CenteredBSpline::new(4).unwrap();
        for i in 0..1000 {
            let x = -3.0 + 6.0 * i as f64 / 999.0;
            assert!(spline.refinement_residual(x).abs() <= 1e-12);
            // the right-hand side also agrees with the recursion oracle
            let rhs: f64 = (0..=4)
                .map(|j| binomial(4, j) * cox_de_boor(4, 2.0 * x - j as f64 + 2.0))
                .sum::<f64>()
                / 8.0;
            assert!((rhs - cox_de_boor(4, x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn symmetry_on_dense_grid() {
        for r in 2..=8 {
            let spline = CenteredBSpline::new(r).unwrap();
            for i in 0..=10_000 {
                let x = -(r as f64) / 2.0 - 0.5 + (r as f64 + 1.0) * i as f64 / 10_000.0;
                assert!((spline.eval(x) - spline.eval(-x)).abs() <= 1e-15);
            }
        }
        // order 1 away from the jump points
        let spline = CenteredBSpline::new(1).unwrap();
        for x in [0.1, 0.3, 0.49, 0.7, 2.0] {
            assert_eq!(spline.eval(x), spline.eval(-x));
        }
    }

    #[test]
    fn mixed_examples() {
        let hat = MixedBSpline::representation(2, &[0, 0], &[0, 0]).unwrap();
        assert_eq!(eval_mixed(&hat, &[0.0, 0.0]).unwrap(), 1.0);
        let spline = MixedBSpline::representation(2, &[1, 0], &[1, 1]).unwrap();
        assert_eq!(eval_mixed(&spline, &[0.5, 1.0]).unwrap(), 1.0);
        assert_eq!(eval_mixed(&spline, &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            eval_mixed(&spline, &[0.5]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn half_translation_for_odd_orders() {
        let s = DilatedBSpline::representation(3, 1, 3).unwrap();
        assert_eq!(s.translation(), Translation::Half);
        // centered at 2^{-1} * 3/2 = 0.75
        assert!((s.eval(0.75) - 0.75).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn partition_of_unity(r in 1usize..=4, x in -50.0f64..50.0) {
            let spline = CenteredBSpline::new(r).unwrap();
            let lo = (x - r as f64).floor() as i64;
            let hi = (x + r as f64).ceil() as i64;
            let total: f64 = (lo..=hi).map(|s| spline.eval(x - s as f64)).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn nonnegative(r in 1usize..=8, x in -6.0f64..6.0) {
            prop_assert!(CenteredBSpline::new(r).unwrap().eval(x) >= 0.0);
        }

        #[test]
        fn mixed_is_product(
            r in 1usize..=4,
            k1 in 0u32..6, k2 in 0u32..6,
            s1 in -3i64..70, s2 in -3i64..70,
            x1 in 0.0f64..=1.0, x2 in 0.0f64..=1.0,
        ) {
            let spline = MixedBSpline::representation(r, &[k1, k2], &[s1, s2]).unwrap();
            let tr = Translation::for_order(r);
            let expected = eval_centered(r as i64, tr.argument(k1, s1, x1)).unwrap()
                * eval_centered(r as i64, tr.argument(k2, s2, x2)).unwrap();
            prop_assert_eq!(eval_mixed(&spline, &[x1, x2]).unwrap(), expected);
        }
    }
}
