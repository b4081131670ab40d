//! Report rows and their CSV, JSON and gnuplot renderings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{ErrorEstimate, Exponent, RateFit, SuiteConfig};
use crate::error::Result;

/// One `(function, d, r, m, q)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub function: String,
    pub d: usize,
    pub r: usize,
    pub m: u32,
    pub q: Exponent,
    pub n_multiset: Option<u64>,
    pub n_distinct: Option<u64>,
    /// `2^m max(m, 1)^{d-1}`.
    pub n_nominal: f64,
    /// `n_multiset / n_nominal`.
    pub n_ratio: Option<f64>,
    pub e_m: Option<f64>,
    /// `ok` or the error message.
    pub status: String,
}

impl Row {
    pub(super) fn new(function: String, d: usize, r: usize, m: u32, q: Exponent, result: Result<ErrorEstimate>) -> Self {
        let n_nominal = 2f64.powi(m as i32) * (m.max(1) as f64).powi(d as i32 - 1);
        let (estimate, status) = match result {
            Ok(e) => (Some(e), "ok".to_string()),
            Err(e) => (None, e.to_string()),
        };
        Self {
            function,
            d,
            r,
            m,
            q,
            n_multiset: estimate.map(|e| e.n_multiset),
            n_distinct: estimate.map(|e| e.n_distinct),
            n_nominal,
            n_ratio: estimate.map(|e| e.n_multiset as f64 / n_nominal),
            e_m: estimate.map(|e| e.error),
            status,
        }
    }
}

/// Rate fit of one `(function, d, r, q)` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub function: String,
    pub d: usize,
    pub r: usize,
    pub q: Exponent,
    pub levels: Vec<u32>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub log_coefficient: Option<f64>,
    pub residual: Option<f64>,
    pub status: String,
}

impl FitRow {
    pub(super) fn new(function: String, d: usize, r: usize, q: Exponent, fit: Result<RateFit>) -> Self {
        match fit {
            Ok(fit) => Self {
                function,
                d,
                r,
                q,
                levels: fit.levels,
                slope: Some(fit.slope),
                intercept: Some(fit.intercept),
                log_coefficient: fit.log_coefficient,
                residual: Some(fit.residual),
                status: "ok".into(),
            },
            Err(e) => Self {
                function,
                d,
                r,
                q,
                levels: Vec::new(),
                slope: None,
                intercept: None,
                log_coefficient: None,
                residual: None,
                status: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

/// Timing of one run, kept out of the report so reports stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStamp {
    pub elapsed_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: SuiteConfig,
    pub environment: Environment,
    pub rows: Vec<Row>,
    pub fits: Vec<FitRow>,
}

const CSV_HEADER: [&str; 11] = [
    "function",
    "d",
    "r",
    "m",
    "q",
    "n_multiset",
    "n_distinct",
    "n_nominal",
    "n_ratio",
    "e_m",
    "status",
];

impl BenchReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One gnuplot data block per fitted series: `m e_m` lines under a
    /// comment naming the series, blocks separated by two blank lines.
    pub fn write_rates<W: Write>(&self, mut out: W) -> Result<()> {
        for fit in &self.fits {
            writeln!(
                out,
                "# function={} d={} r={} q={} slope={}",
                fit.function,
                fit.d,
                fit.r,
                fit.q,
                fit.slope.map_or("nan".to_string(), |s| s.to_string())
            )?;
            for row in &self.rows {
                if row.function == fit.function && row.d == fit.d && row.r == fit.r && row.q == fit.q {
                    if let Some(e) = row.e_m {
                        writeln!(out, "{} {}", row.m, e)?;
                    }
                }
            }
            writeln!(out)?;
            writeln!(out)?;
        }
        Ok(())
    }

    /// Write `report.csv`, `report.json` and `rates.dat` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.write_csv(fs::File::create(dir.join("report.csv"))?)?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        let mut rates = Vec::new();
        self.write_rates(&mut rates)?;
        fs::write(dir.join("rates.dat"), rates)?;
        Ok(())
    }
}

impl RunStamp {
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        fs::write(dir.as_ref().join("run.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{run_suite, SuiteConfig};

    #[test]
    fn reports_are_reproducible() {
        let c = SuiteConfig::from_toml(
            "dims = [1, 2]\nlevels = { lo = 2, hi = 5 }\nfunctions = [\"trig\", \"quad\"]\nq_values = [2.0, inf]\nseed = 11",
        )
        .unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_suite(&c).unwrap().write_to_dir(a.path()).unwrap();
        run_suite(&c).unwrap().write_to_dir(b.path()).unwrap();
        for name in ["report.csv", "report.json", "rates.dat"] {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let csv = std::fs::read_to_string(a.path().join("report.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 4 * 2 * 2);
        let first = csv.lines().nth(1).unwrap();
        assert!(first.starts_with("trig,1,2,2,2.0,"), "{first}");
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(a.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json["config"]["q_values"][1], "inf");
        assert_eq!(json["rows"].as_array().unwrap().len(), 32);
    }

    #[test]
    fn rows_are_sorted() {
        let c = SuiteConfig::from_toml("dims = [2, 1]\norders = [2, 1]\nlevels = { lo = 1, hi = 2 }\nfunctions = [\"quad\"]")
            .unwrap();
        let report = run_suite(&c).unwrap();
        let keys: Vec<(usize, usize, u32)> = report.rows.iter().map(|r| (r.d, r.r, r.m)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
