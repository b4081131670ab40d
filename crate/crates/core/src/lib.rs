//! Sampling recovery on sparse grids with mixed B-spline quasi-interpolants.
//!
//! A function on `[0,1]^d` is sampled on the sparse grid `G^d(m)` and
//! reconstructed as `R_m f = sum_{|k|_1 <= m} q_k(f)`, where each `q_k` is a
//! difference of tensor-product quasi-interpolants. The same coefficients
//! give discrete mixed Besov norms. The `bench` module measures recovery
//! errors and fits convergence rates.

// Parameter checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod besov;
pub mod bspline;
pub mod cli;
pub mod error;
pub mod faber;
pub mod quadrature;
pub mod quasi_interpolant;
pub mod recovery;
pub mod sparse_grid;
pub mod spline;

pub use error::{Error, Result};
