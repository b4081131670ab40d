//! Recovery-error sweeps and convergence-rate fits.

pub mod functions;
mod report;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature::{lq_norm, Difference, QuadratureRule, QMC_SAMPLES};
use crate::quasi_interpolant::builtin_mask;
use crate::recovery::Recovery;

pub use functions::{FunctionSpec, Smoothness, SmoothnessTag, TestFunction};
pub use report::{BenchReport, Environment, FitRow, Row, RunStamp};

/// A norm exponent in `(0, inf]`, written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(pub f64);

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let value = match Raw::deserialize(d)? {
            Raw::Number(v) => v,
            Raw::Text(t) => t
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("`{t}` is not a norm exponent")))?,
        };
        if !(value > 0.0) {
            return Err(serde::de::Error::custom(format!("norm exponent must be positive, got {value}")));
        }
        Ok(Exponent(value))
    }
}

/// `||f - R_m f||_q` with the sample counts of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub error: f64,
    /// Samples the sampling form uses, with repetition across levels.
    pub n_multiset: u64,
    /// Distinct function evaluations.
    pub n_distinct: u64,
}

/// Recover `f` at budget `m` with the builtin mask of order `r` and measure
/// the error under `rule`.
pub fn estimate_error(f: &TestFunction, r: usize, m: u32, q: f64, rule: &QuadratureRule) -> Result<ErrorEstimate> {
    let mask = builtin_mask(r)?;
    let rec = Recovery::from_function(&|x: &[f64]| f.eval(x), f.dim(), m, &mask)?;
    let error = lq_norm(&Difference(f, &rec), q, rule)?;
    let stats = rec.cache_stats().unwrap_or_default();
    Ok(ErrorEstimate {
        error,
        n_multiset: stats.hits + stats.misses,
        n_distinct: stats.misses,
    })
}

/// Least-squares fit of `log2 e_m = a + slope m (+ c log2 m)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub levels: Vec<u32>,
    pub errors: Vec<f64>,
    pub intercept: f64,
    pub slope: f64,
    pub log_coefficient: Option<f64>,
    /// Euclidean norm of the residual in `log2` units.
    pub residual: f64,
}

pub fn fit_rate(points: &[(u32, f64)], polylog: bool) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::TooFewLevels(points.len()));
    }
    if let Some(&(m, e)) = points.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParams(format!("error at m = {m} is {e}; rates need positive errors")));
    }
    if polylog && points.iter().any(|&(m, _)| m == 0) {
        return Err(Error::InvalidParams("the polylog term needs m >= 1".into()));
    }
    let cols = if polylog { 3 } else { 2 };
    let design = DMatrix::from_fn(points.len(), cols, |i, j| {
        let m = points[i].0 as f64;
        match j {
            0 => 1.0,
            1 => m,
            _ => m.log2(),
        }
    });
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|&(_, e)| e.log2()));
    let solution = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidParams(format!("rate fit failed: {e}")))?;
    let residual = (&design * &solution - &rhs).norm();
    Ok(RateFit {
        levels: points.iter().map(|p| p.0).collect(),
        errors: points.iter().map(|p| p.1).collect(),
        intercept: solution[0],
        slope: solution[1],
        log_coefficient: polylog.then(|| solution[2]),
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRange {
    pub lo: u32,
    pub hi: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Gauss–Legendre points per cell.
    pub g: usize,
    /// Halton samples for `d >= 4`.
    pub qmc_n: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            g: 8,
            qmc_n: QMC_SAMPLES,
        }
    }
}

/// Sweep definition, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    pub levels: LevelRange,
    #[serde(default = "default_q")]
    pub q_values: Vec<Exponent>,
    pub functions: Vec<String>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub seed: u64,
    /// Fit the `c log2 m` term as well.
    #[serde(default)]
    pub polylog: bool,
    /// Fit over every level instead of `m >= 3`.
    #[serde(default)]
    pub include_preasymptotic: bool,
}

fn default_orders() -> Vec<usize> {
    vec![2]
}

fn default_q() -> Vec<Exponent> {
    vec![Exponent(f64::INFINITY)]
}

/// Smallest level used by fits unless preasymptotic levels are included.
pub const FIT_MIN_LEVEL: u32 = 3;

impl Default for SuiteConfig {
    /// Three functions, `d` in `{1, 2}`, `m = 2..=8`, `r = 2`, sup norm.
    fn default() -> Self {
        Self {
            dims: vec![1, 2],
            orders: default_orders(),
            levels: LevelRange { lo: 2, hi: 8 },
            q_values: default_q(),
            functions: vec!["sine".into(), "quad".into(), "kink:beta=1.5".into()],
            quadrature: QuadratureConfig::default(),
            seed: 0,
            polylog: false,
            include_preasymptotic: false,
        }
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.lo > self.levels.hi {
            return Err(Error::Config(format!(
                "levels.lo = {} exceeds levels.hi = {}",
                self.levels.lo, self.levels.hi
            )));
        }
        if self.dims.contains(&0) {
            return Err(Error::Config("dimensions must be at least 1".into()));
        }
        for &r in &self.orders {
            builtin_mask(r).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.quadrature.g == 0 || self.quadrature.qmc_n == 0 {
            return Err(Error::Config("quadrature sizes must be positive".into()));
        }
        for f in &self.functions {
            f.parse::<FunctionSpec>().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Run every `(function, d, r, m, q)` row. Failing rows are recorded with
/// their error and do not stop the sweep.
pub fn run_suite(config: &SuiteConfig) -> Result<BenchReport> {
    config.validate()?;
    let specs: Vec<FunctionSpec> = config.functions.iter().map(|f| f.parse()).collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for &d in &config.dims {
        for &r in &config.orders {
            for m in config.levels.lo..=config.levels.hi {
                for (fi, spec) in specs.iter().enumerate() {
                    jobs.push((d, r, m, fi, spec));
                }
            }
        }
    }
    jobs.sort_by_key(|&(d, r, m, fi, _)| (d, r, m, fi));
    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|&(d, r, m, _, spec)| {
            let function = spec.instantiate(d, m, config.seed);
            config
                .q_values
                .iter()
                .map(|&q| {
                    let result = function.as_ref().map_err(clone_error).and_then(|f| {
                        let rule =
                            QuadratureRule::for_budget_with(d, m, q.0, config.quadrature.g, config.quadrature.qmc_n);
                        estimate_error(f, r, m, q.0, &rule)
                    });
                    Row::new(spec.to_string(), d, r, m, q, result)
                })
                .collect()
        })
        .collect();
    let rows: Vec<Row> = rows.into_iter().flatten().collect();

    let min_level = if config.include_preasymptotic { 0 } else { FIT_MIN_LEVEL };
    let mut fits = Vec::new();
    for spec in &specs {
        for &d in &config.dims {
            for &r in &config.orders {
                for &q in &config.q_values {
                    let points: Vec<(u32, f64)> = rows
                        .iter()
                        .filter(|row| row.function == spec.to_string() && row.d == d && row.r == r && row.q == q)
                        .filter(|row| row.m >= min_level)
                        .filter_map(|row| row.e_m.map(|e| (row.m, e)))
                        .collect();
                    fits.push(FitRow::new(spec.to_string(), d, r, q, fit_rate(&points, config.polylog)));
                }
            }
        }
    }
    Ok(BenchReport {
        config: config.clone(),
        environment: Environment::current(),
        rows,
        fits,
    })
}

fn clone_error(e: &Error) -> Error {
    Error::InvalidParams(e.to_string())
}
