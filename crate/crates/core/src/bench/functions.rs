//! Named test functions on `[0,1]^d`.
//!
//! A function is written `name[:arg[,arg]*]` where each argument is either
//! `key=value` or a bare word, e.g. `kink:beta=1.5` or `witness:g3,alpha=2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::faber::{witness_functions, Witness, WitnessCase};
use crate::quadrature::Integrand;

/// Registered function names.
pub const FUNCTION_NAMES: [&str; 6] = ["sine", "quad", "poly", "kink", "trig", "witness"];

/// A parsed, not yet instantiated function name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    raw: String,
    name: String,
    word: Option<String>,
    params: BTreeMap<String, String>,
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((name, args)) => (name, Some(args)),
            None => (s, None),
        };
        if !FUNCTION_NAMES.contains(&name) {
            return Err(Error::UnknownFunction(s.to_string()));
        }
        let mut word = None;
        let mut params = BTreeMap::new();
        for arg in args.into_iter().flat_map(|a| a.split(',')) {
            match arg.split_once('=') {
                Some((k, v)) => {
                    if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                        return Err(Error::InvalidParams(format!("repeated parameter `{k}` in `{s}`")));
                    }
                }
                None if word.is_none() && !arg.is_empty() => word = Some(arg.trim().to_string()),
                None => return Err(Error::InvalidParams(format!("malformed argument `{arg}` in `{s}`"))),
            }
        }
        Ok(Self {
            raw: s.to_string(),
            name: name.to_string(),
            word,
            params,
        })
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FunctionSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    fn allow(&self, keys: &[&str], word: bool) -> Result<()> {
        if let Some(k) = self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(Error::InvalidParams(format!("`{}` takes no parameter `{k}`", self.name)));
        }
        if !word && self.word.is_some() {
            return Err(Error::InvalidParams(format!("`{}` takes no bare argument", self.name)));
        }
        Ok(())
    }

    fn number(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidParams(format!("`{key}={v}` is not a number"))),
        }
    }

    fn integer(&self, key: &str, default: u64) -> Result<u64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidParams(format!("`{key}={v}` is not a nonnegative integer"))),
        }
    }

    /// Build the function for dimension `d`. Witnesses default to budget `m`;
    /// `trig` defaults to `seed`.
    pub fn instantiate(&self, d: usize, m: u32, seed: u64) -> Result<TestFunction> {
        if d == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        let (kind, smoothness) = match self.name.as_str() {
            "sine" => {
                self.allow(&[], false)?;
                (Kind::Sine, Smoothness::analytic())
            }
            "quad" => {
                self.allow(&[], false)?;
                (Kind::Quad, Smoothness::analytic())
            }
            "poly" => {
                self.allow(&["degree"], false)?;
                let degree = self.integer("degree", 1)?;
                (Kind::Poly(degree as i32), Smoothness::analytic())
            }
            "kink" => {
                self.allow(&["beta"], false)?;
                let beta = self.number("beta", 1.5)?;
                if !(beta > 0.0) {
                    return Err(Error::InvalidParams(format!("kink exponent must be positive, got {beta}")));
                }
                (
                    Kind::Kink(beta),
                    Smoothness {
                        alpha_nominal: beta,
                        tag: SmoothnessTag::KinkExponent,
                    },
                )
            }
            "trig" => {
                self.allow(&["seed", "terms"], false)?;
                let seed = self.integer("seed", seed)?;
                let terms = self.integer("terms", 4)? as usize;
                (Kind::Trig(TrigPolynomial::random(seed, d, terms)), Smoothness::analytic())
            }
            "witness" => {
                self.allow(&["alpha", "p", "theta", "m"], true)?;
                let case: WitnessCase = self
                    .word
                    .as_deref()
                    .ok_or_else(|| Error::InvalidParams("witness needs a case, e.g. witness:g1".into()))?
                    .parse()?;
                let alpha = self.number("alpha", 1.5)?;
                let p = self.number("p", f64::INFINITY)?;
                let theta = self.number("theta", 2.0)?;
                let m = self.integer("m", m as u64)? as u32;
                (
                    Kind::Witness(witness_functions(case, d, m, alpha, p, theta)?),
                    Smoothness {
                        alpha_nominal: alpha,
                        tag: SmoothnessTag::Witness,
                    },
                )
            }
            _ => return Err(Error::UnknownFunction(self.raw.clone())),
        };
        Ok(TestFunction {
            label: self.raw.clone(),
            dim: d,
            kind,
            smoothness,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothnessTag {
    /// Smooth; effective smoothness is capped by the spline order.
    Analytic,
    /// Set by the kink exponent.
    KinkExponent,
    /// Set by the witness construction.
    Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smoothness {
    /// Mixed smoothness in the sup norm; infinite for analytic functions.
    pub alpha_nominal: f64,
    pub tag: SmoothnessTag,
}

impl Smoothness {
    fn analytic() -> Self {
        Self {
            alpha_nominal: f64::INFINITY,
            tag: SmoothnessTag::Analytic,
        }
    }
}

/// `sum_j a_j prod_i cos(2 pi n_ji x_i + phase_ji)` with frequencies in `0..=3`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    amplitude: Vec<f64>,
    frequency: Vec<Vec<f64>>,
    phase: Vec<Vec<f64>>,
}

impl TrigPolynomial {
    pub fn random(seed: u64, d: usize, terms: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amplitude = Vec::with_capacity(terms);
        let mut frequency = Vec::with_capacity(terms);
        let mut phase = Vec::with_capacity(terms);
        for _ in 0..terms {
            amplitude.push(rng.gen_range(-1.0..=1.0));
            frequency.push((0..d).map(|_| rng.gen_range(0..=3) as f64).collect());
            phase.push((0..d).map(|_| rng.gen_range(0.0..2.0 * PI)).collect());
        }
        Self {
            amplitude,
            frequency,
            phase,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.amplitude
            .iter()
            .zip(&self.frequency)
            .zip(&self.phase)
            .map(|((a, n), phi)| {
                a * x
                    .iter()
                    .zip(n)
                    .zip(phi)
                    .map(|((xi, ni), pi)| (2.0 * PI * ni * xi + pi).cos())
                    .product::<f64>()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Sine,
    Quad,
    Poly(i32),
    Kink(f64),
    Trig(TrigPolynomial),
    Witness(Witness),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    label: String,
    dim: usize,
    kind: Kind,
    smoothness: Smoothness,
}

impl TestFunction {
    /// Instantiate a function name with defaults (`m = 4`, seed 0 unless given).
    pub fn parse(spec: &str, d: usize) -> Result<Self> {
        spec.parse::<FunctionSpec>()?.instantiate(d, 4, 0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.kind {
            Kind::Witness(w) => Some(w),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Sine => x.iter().map(|xi| (PI * xi).sin()).product(),
            Kind::Quad => x.iter().map(|xi| xi * (1.0 - xi)).product(),
            Kind::Poly(n) => x.iter().map(|xi| xi.powi(*n)).product(),
            Kind::Kink(beta) => x.iter().map(|xi| (xi - 0.5).abs().powf(*beta)).product(),
            Kind::Trig(t) => t.eval(x),
            Kind::Witness(w) => w.eval(x),
        }
    }
}

impl Integrand for TestFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        TestFunction::eval(self, x)
    }
}
