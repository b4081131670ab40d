//! Tensor spline series at a single level `k`.

use serde::Serialize;

use crate::bspline::{spline_for, CenteredBSpline, Translation};
use crate::sparse_grid::shift_range;

/// Largest number of splines of one axis that can be nonzero at a point.
const MAX_ACTIVE: usize = 40;

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Nonzero spline values of one axis at one coordinate.
#[derive(Clone, Copy)]
pub(crate) struct AxisTerms {
    len: usize,
    offset: [usize; MAX_ACTIVE],
    value: [f64; MAX_ACTIVE],
}

impl AxisTerms {
    pub(crate) fn new(
        base: &CenteredBSpline,
        translation: Translation,
        level: u32,
        range: (i64, i64),
        x: f64,
    ) -> Self {
        let mut terms = Self {
            len: 0,
            offset: [0; MAX_ACTIVE],
            value: [0.0; MAX_ACTIVE],
        };
        let (lo, hi) = translation.active_shifts(base.order(), level, x);
        for s in lo.max(range.0)..=hi.min(range.1) {
            let v = base.eval(translation.argument(level, s, x));
            if v != 0.0 {
                terms.offset[terms.len] = (s - range.0) as usize;
                terms.value[terms.len] = v;
                terms.len += 1;
            }
        }
        terms
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn get(&self, i: usize) -> (usize, f64) {
        (self.offset[i], self.value[i])
    }
}

/// Visit every combination of per-axis terms as `(flat offset, product)`,
/// last axis fastest. `strides` belong to the coefficient array.
pub(crate) fn for_each_product(
    axes: &[AxisTerms],
    strides: &[usize],
    mut visit: impl FnMut(usize, f64),
) {
    if axes.iter().any(|a| a.len == 0) {
        return;
    }
    let d = axes.len();
    let mut idx = vec![0usize; d];
    loop {
        let mut offset = 0;
        let mut product = 1.0;
        for i in 0..d {
            let (o, v) = axes[i].get(idx[i]);
            offset += o * strides[i];
            product *= v;
        }
        visit(offset, product);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < axes[axis].len {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Contract axis `axis` of a row-major array: output slot `r` along that
/// axis is `sum_{(j, w) in rows[r]} w * input[j]`.
pub(crate) fn apply_rows(data: &[f64], shape: &mut [usize], axis: usize, rows: &[Vec<(usize, f64)>]) -> Vec<f64> {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let len_in = shape[axis];
    let mut out = vec![0.0; outer * rows.len() * inner];
    for o in 0..outer {
        let src = &data[o * len_in * inner..(o + 1) * len_in * inner];
        let dst = &mut out[o * rows.len() * inner..(o + 1) * rows.len() * inner];
        for (r, row) in rows.iter().enumerate() {
            let target = &mut dst[r * inner..(r + 1) * inner];
            for &(j, w) in row {
                let source = &src[j * inner..(j + 1) * inner];
                for (t, s) in target.iter_mut().zip(source) {
                    *t += w * s;
                }
            }
        }
    }
    shape[axis] = rows.len();
    out
}

pub(crate) fn strides_for(ranges: &[(i64, i64)]) -> Vec<usize> {
    let mut strides = vec![1usize; ranges.len()];
    for i in (0..ranges.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * (ranges[i + 1].1 - ranges[i + 1].0 + 1) as usize;
    }
    strides
}

/// `sum_s coeff(s) prod_i M(2^{k_i} x_i - s_i)` (or half-translated) over a
/// box of shifts.
///
/// Coefficients are row-major over the box with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSpline {
    order: usize,
    translation: Translation,
    levels: Vec<u32>,
    ranges: Vec<(i64, i64)>,
    coeffs: Vec<f64>,
}

impl LevelSpline {
    pub fn new(
        order: usize,
        translation: Translation,
        levels: Vec<u32>,
        ranges: Vec<(i64, i64)>,
        coeffs: Vec<f64>,
    ) -> Self {
        assert_eq!(levels.len(), ranges.len());
        let expected: usize = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).product();
        assert_eq!(coeffs.len(), expected, "coefficient count does not match shift box");
        assert!(order * 2 + 2 <= MAX_ACTIVE, "order {order} is too large for evaluation");
        Self {
            order,
            translation,
            levels,
            ranges,
            coeffs,
        }
    }

    /// Zero series over the natural shift box of `levels`.
    pub fn zeros(order: usize, translation: Translation, levels: Vec<u32>) -> Self {
        let ranges: Vec<(i64, i64)> = levels
            .iter()
            .map(|&k| shift_range(order, k, translation))
            .collect();
        let len = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).product();
        Self::new(order, translation, levels, ranges, vec![0.0; len])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn translation(&self) -> Translation {
        self.translation
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coefficient(&self, shift: &[i64]) -> Option<f64> {
        let strides = strides_for(&self.ranges);
        let mut offset = 0;
        for ((s, (lo, hi)), stride) in shift.iter().zip(&self.ranges).zip(strides) {
            if s < lo || s > hi {
                return None;
            }
            offset += (s - lo) as usize * stride;
        }
        self.coeffs.get(offset).copied()
    }

    pub(crate) fn axis_terms(&self, x: &[f64]) -> Vec<AxisTerms> {
        let base = spline_for(self.order).expect("order checked at construction");
        self.levels
            .iter()
            .zip(&self.ranges)
            .zip(x)
            .map(|((&k, &range), &xi)| AxisTerms::new(&base, self.translation, k, range, xi))
            .collect()
    }

    /// Add this series at `x` into a compensated accumulator.
    pub(crate) fn accumulate(&self, x: &[f64], acc: &mut CompensatedSum) {
        let axes = self.axis_terms(x);
        let strides = strides_for(&self.ranges);
        for_each_product(&axes, &strides, |offset, product| {
            acc.add(self.coeffs[offset] * product)
        });
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension");
        let mut acc = CompensatedSum::default();
        self.accumulate(x, &mut acc);
        acc.value()
    }

    /// Values on the tensor grid `axes[0] x ... x axes[d-1]`, row-major with
    /// the last axis fastest.
    pub fn eval_grid(&self, axes: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(axes.len(), self.dim(), "grid dimension");
        let base = spline_for(self.order).expect("order checked at construction");
        let mut shape: Vec<usize> = self.ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect();
        let mut data = self.coeffs.clone();
        for (axis, points) in axes.iter().enumerate() {
            let rows: Vec<Vec<(usize, f64)>> = points
                .iter()
                .map(|&x| {
                    let terms = AxisTerms::new(&base, self.translation, self.levels[axis], self.ranges[axis], x);
                    (0..terms.len).map(|i| terms.get(i)).collect()
                })
                .collect();
            data = apply_rows(&data, &mut shape, axis, &rows);
        }
        data
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::{eval_mixed, MixedBSpline};

    #[test]
    fn single_coefficient_is_mixed_bspline() {
        for order in 1..=5 {
            let translation = Translation::for_order(order);
            let levels = vec![2, 1];
            let mut spline = LevelSpline::zeros(order, translation, levels.clone());
            let shift = [1i64, 0];
            let strides = strides_for(spline.ranges());
            let offset: usize = shift
                .iter()
                .zip(spline.ranges())
                .zip(&strides)
                .map(|((s, (lo, _)), st)| (s - lo) as usize * st)
                .sum();
            spline.coefficients_mut()[offset] = 1.0;
            let basis = MixedBSpline::representation(order, &levels, &shift).unwrap();
            for i in 0..=20 {
                for j in 0..=20 {
                    let x = [i as f64 / 20.0, j as f64 / 20.0];
                    let want = eval_mixed(&basis, &x).unwrap();
                    assert!((spline.eval(&x) - want).abs() < 1e-15);
                }
            }
            assert_eq!(spline.coefficient(&shift), Some(1.0));
        }
    }

    #[test]
    fn unit_coefficients_sum_to_one() {
        for order in 1..=6 {
            let translation = Translation::Integer;
            let mut spline = LevelSpline::zeros(order, translation, vec![3, 0, 2]);
            spline.coefficients_mut().iter_mut().for_each(|c| *c = 1.0);
            for t in 0..=10 {
                let x = [t as f64 / 10.0, 1.0 - t as f64 / 10.0, 0.37];
                assert!((spline.eval(&x) - 1.0).abs() < 1e-14, "order {order}");
            }
        }
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        for order in 1..=4 {
            let translation = Translation::for_order(order);
            let mut spline = LevelSpline::zeros(order, translation, vec![2, 3]);
            for (i, c) in spline.coefficients_mut().iter_mut().enumerate() {
                *c = ((i * 37 % 11) as f64 - 5.0) / 3.0;
            }
            let axes = vec![vec![0.0, 0.13, 0.5, 0.77, 1.0], vec![0.0, 0.31, 0.9, 1.0]];
            let grid = spline.eval_grid(&axes);
            let mut n = 0;
            for &x in &axes[0] {
                for &y in &axes[1] {
                    assert!((grid[n] - spline.eval(&[x, y])).abs() < 1e-13);
                    n += 1;
                }
            }
        }
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut acc = CompensatedSum::default();
        for v in [1e16, 1.0, -1e16, 1.0] {
            acc.add(v);
        }
        assert_eq!(acc.value(), 2.0);
    }
}
