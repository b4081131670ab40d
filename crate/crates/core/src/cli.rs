//! The `ssr` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, unknown
//! functions, unreadable inputs), 2 when a computation fails.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{run_suite, FunctionSpec, RunStamp, SuiteConfig, TestFunction};
use crate::besov::{b2_norm_via_quadrature, discrete_b3_norm_with, B3Variant, BesovParams};
use crate::error::Error;
use crate::quasi_interpolant::{builtin_mask, Mask};
use crate::recovery::{build_coefficients, PsiWeights, Recovery, SampledGrid};
use crate::sparse_grid::{grid_nodes, EvalCache, NodeSet};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SSR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ssr", version, about = "Sparse-grid recovery with mixed B-spline quasi-interpolants")]
pub struct Cli {
    /// Output format of tabular results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Seed for randomized test functions.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Print progress details to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Nodes {
    /// `0..=2^k` per axis, the nodes every sampling pipeline reads.
    Closed,
    /// `0..2^k` per axis, the nodes of the step interpolant.
    LeftClosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Mixed,
    Scalar,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the sparse grid nodes, one row per (level, index).
    Grid(GridArgs),
    /// Recover a function from its sparse grid samples and evaluate it.
    Recover(RecoverArgs),
    /// Discrete Besov norms of a function's coefficient table.
    Norm(NormArgs),
    /// Run an error and rate sweep.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Dimension d.
    #[arg(long)]
    pub dim: usize,
    /// Level budget m of the sparse grid.
    #[arg(long)]
    pub level: u32,
    #[arg(long, value_enum, default_value_t = Nodes::Closed)]
    pub nodes: Nodes,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Dimension d.
    #[arg(long)]
    pub dim: usize,
    /// Spline order r.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Level budget m of the sparse grid.
    #[arg(long)]
    pub level: u32,
    /// Builtin function to sample, e.g. `quad` or `kink:beta=1.5`.
    #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
    pub func: Option<String>,
    /// CSV of `x_1..x_d,value` rows covering the sparse grid.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// CSV of evaluation points; defaults to the distinct grid nodes.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// JSON mask `{order, mu, weights}` replacing the builtin one.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Write the sampling weights as JSON to this file.
    #[arg(long)]
    pub emit_psi: Option<PathBuf>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Smoothness alpha.
    #[arg(long)]
    pub alpha: f64,
    /// Integrability exponent; `inf` allowed.
    #[arg(long)]
    pub p: f64,
    /// Summability exponent; `inf` allowed.
    #[arg(long)]
    pub theta: f64,
    /// Spline order r.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Dimension d.
    #[arg(long)]
    pub dim: usize,
    /// Level budget m of the sparse grid.
    #[arg(long)]
    pub level: u32,
    /// Builtin function, e.g. `sine` or `witness:g1`.
    #[arg(long)]
    pub func: String,
    /// Level weight of the coefficient norm.
    #[arg(long, value_enum, default_value_t = Variant::Mixed)]
    pub b3_variant: Variant,
    /// Reject parameters outside `1/p < alpha < r`.
    #[arg(long)]
    pub strict: bool,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML sweep definition; the default suite when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "bench-out")]
    pub out_dir: PathBuf,
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        return report(e);
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => report(e),
    }
}

fn report(failure: Failure) -> i32 {
    match failure {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            eprintln!("run `ssr --help` for usage");
            1
        }
        Failure::Compute(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    // a pool built earlier in this process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Grid(args) => grid(cli, args),
        Command::Recover(args) => recover(cli, args),
        Command::Norm(args) => norm(cli, args),
        Command::Bench(args) => bench(cli, args),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Compute(e.into())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Compute(e.into()))
        }
    }
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Compute(e.into()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| Failure::Compute(e.into()))?;
    w.into_inner().map_err(|e| Failure::Compute(Error::Io(e.into_error())))
}

fn axis_names(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}{i}"))
}

fn check_dim(d: usize) -> Result<(), Failure> {
    if d == 0 {
        return Err(usage("--dim must be at least 1"));
    }
    Ok(())
}

fn load_mask(order: usize, path: Option<&Path>) -> Result<Mask, Failure> {
    let mask = match path {
        Some(path) => Mask::from_json_file(path).map_err(usage)?,
        None => builtin_mask(order).map_err(usage)?,
    };
    if mask.order() != order {
        return Err(usage(format!(
            "mask order {} does not match --order {order}",
            mask.order()
        )));
    }
    Ok(mask)
}

fn load_function(spec: &str, d: usize, m: u32, seed: Option<u64>) -> Result<TestFunction, Failure> {
    spec.parse::<FunctionSpec>()
        .and_then(|s| s.instantiate(d, m, seed.unwrap_or(0)))
        .map_err(usage)
}

#[derive(Serialize)]
struct GridRow {
    level: Vec<u32>,
    index: Vec<i64>,
    point: Vec<f64>,
}

fn grid(cli: &Cli, args: &GridArgs) -> Result<(), Failure> {
    check_dim(args.dim)?;
    let nodes = match args.nodes {
        Nodes::Closed => NodeSet::Closed,
        Nodes::LeftClosed => NodeSet::LeftClosed,
    };
    let rows: Vec<GridRow> = grid_nodes(args.dim, args.level, nodes)
        .into_iter()
        .map(|n| GridRow {
            point: n.coords(),
            level: n.level,
            index: n.index,
        })
        .collect();
    if cli.verbose {
        eprintln!("{} nodes", rows.len());
    }
    let bytes = match cli.format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let d = args.dim;
            let header: Vec<String> = axis_names("k", d).chain(axis_names("s", d)).chain(axis_names("x", d)).collect();
            csv_bytes(
                &header,
                rows.iter().map(|r| {
                    r.level
                        .iter()
                        .map(u32::to_string)
                        .chain(r.index.iter().map(i64::to_string))
                        .chain(r.point.iter().map(f64::to_string))
                        .collect()
                }),
            )?
        }
    };
    emit(args.out.as_deref(), &bytes)
}

/// Rows of `d` numbers, with an optional header line.
fn read_points(path: &Path, d: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(usage)?;
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(usage)?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(x) if x.len() == d => points.push(x),
            Ok(x) => {
                return Err(usage(format!(
                    "{}: line {} has {} values, expected {d}",
                    path.display(),
                    line + 1,
                    x.len()
                )))
            }
            Err(_) if line == 0 => continue,
            Err(_) => return Err(usage(format!("{}: line {} is not numeric", path.display(), line + 1))),
        }
    }
    Ok(points)
}

#[derive(Serialize)]
struct ValueRow {
    x: Vec<f64>,
    value: f64,
}

fn recover(cli: &Cli, args: &RecoverArgs) -> Result<(), Failure> {
    check_dim(args.dim)?;
    let (d, m) = (args.dim, args.level);
    let mask = load_mask(args.order, args.mask.as_deref())?;
    let function = args
        .func
        .as_deref()
        .map(|f| load_function(f, d, m, cli.seed))
        .transpose()?;
    let points = match &args.points {
        Some(path) => read_points(path, d)?,
        None => {
            let mut seen = std::collections::HashSet::new();
            grid_nodes(d, m, NodeSet::Closed)
                .into_iter()
                .filter_map(|n| {
                    let p = n.point().ok()?;
                    seen.insert(p.clone()).then(|| p.to_coords())
                })
                .collect()
        }
    };
    let samples = match (&function, &args.samples) {
        (Some(f), _) => SampledGrid::sample(&|x: &[f64]| f.eval(x), d, m, &EvalCache::new())?,
        (None, Some(path)) => SampledGrid::from_csv(path, d, m).map_err(usage)?,
        (None, None) => return Err(usage("one of --func or --samples is required")),
    };
    let rec = Recovery::from_samples(&samples, &mask);
    if let Some(path) = &args.emit_psi {
        let psi = PsiWeights::new(d, &mask, m);
        fs::write(path, psi.to_json()? + "\n").map_err(|e| Failure::Compute(e.into()))?;
    }
    let rows = points
        .into_iter()
        .map(|x| Ok(ValueRow { value: rec.evaluate(&x)?, x }))
        .collect::<Result<Vec<_>, Error>>()?;
    if cli.verbose {
        eprintln!("evaluated {} points from {} sample blocks", rows.len(), samples.blocks().len());
    }
    let bytes = match cli.format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let header: Vec<String> = axis_names("x", d).chain(["value".to_string()]).collect();
            csv_bytes(
                &header,
                rows.iter()
                    .map(|r| r.x.iter().chain([&r.value]).map(f64::to_string).collect()),
            )?
        }
    };
    emit(args.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct LevelNorms {
    level: Vec<u32>,
    b3_term: f64,
    b2_term: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    b3_scalar_term: Option<f64>,
}

#[derive(Serialize)]
struct NormOutput {
    params: BesovParams,
    in_equivalence_range: bool,
    b3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    b3_scalar: Option<f64>,
    b2: f64,
    b2_max_relative_delta: f64,
    b2_under_resolved: bool,
    per_level: Vec<LevelNorms>,
}

/// Infinite exponents serialize as the string `"inf"`.
fn finite_or_inf(value: f64) -> serde_json::Value {
    if value.is_infinite() {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::json!(value)
    }
}

fn norm(cli: &Cli, args: &NormArgs) -> Result<(), Failure> {
    check_dim(args.dim)?;
    let params = BesovParams::new(args.alpha, args.p, args.theta, args.dim, args.order).map_err(usage)?;
    if args.strict {
        params.require_equivalence_range().map_err(usage)?;
    }
    let mask = load_mask(args.order, None)?;
    let f = load_function(&args.func, args.dim, args.level, cli.seed)?;
    let table = build_coefficients(&|x: &[f64]| f.eval(x), args.dim, &mask, args.level, &EvalCache::new())?;
    let b3 = discrete_b3_norm_with(&table, &params, B3Variant::Mixed)?;
    let scalar = match args.b3_variant {
        Variant::Scalar => Some(discrete_b3_norm_with(&table, &params, B3Variant::Scalar)?),
        Variant::Mixed => None,
    };
    let b2 = b2_norm_via_quadrature(&table, &params)?;
    if b2.under_resolved {
        eprintln!(
            "warning: B2 quadrature changed by {:.2}% under refinement",
            100.0 * b2.max_relative_delta
        );
    }
    let per_level: Vec<LevelNorms> = b3
        .per_level
        .iter()
        .enumerate()
        .map(|(i, t)| LevelNorms {
            level: t.level.clone(),
            b3_term: t.term,
            b2_term: b2.ladder.per_level[i].term,
            b3_scalar_term: scalar.as_ref().map(|s| s.per_level[i].term),
        })
        .collect();
    let output = NormOutput {
        params,
        in_equivalence_range: params.in_equivalence_range(),
        b3: b3.value,
        b3_scalar: scalar.as_ref().map(|s| s.value),
        b2: b2.value(),
        b2_max_relative_delta: b2.max_relative_delta,
        b2_under_resolved: b2.under_resolved,
        per_level,
    };
    let bytes = match cli.format {
        Format::Json => {
            let mut value = serde_json::to_value(&output).map_err(|e| Failure::Compute(e.into()))?;
            value["params"]["p"] = finite_or_inf(params.p);
            value["params"]["theta"] = finite_or_inf(params.theta);
            json_bytes(&value)?
        }
        Format::Csv => {
            let d = args.dim;
            let mut header: Vec<String> = axis_names("k", d).collect();
            header.extend(["b3_term".into(), "b2_term".into()]);
            if scalar.is_some() {
                header.push("b3_scalar_term".into());
            }
            csv_bytes(
                &header,
                output.per_level.iter().map(|t| {
                    let mut row: Vec<String> = t.level.iter().map(u32::to_string).collect();
                    row.push(t.b3_term.to_string());
                    row.push(t.b2_term.to_string());
                    if let Some(s) = t.b3_scalar_term {
                        row.push(s.to_string());
                    }
                    row
                }),
            )?
        }
    };
    emit(args.out.as_deref(), &bytes)
}

fn bench(cli: &Cli, args: &BenchArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => SuiteConfig::from_file(path).map_err(usage)?,
        None => SuiteConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let start = Instant::now();
    let report = run_suite(&config)?;
    report.write_to_dir(&args.out_dir)?;
    RunStamp {
        elapsed_seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    }
    .write_to_dir(&args.out_dir)?;
    let failed = report.rows.iter().filter(|r| r.status != "ok").count();
    if cli.verbose || failed > 0 {
        eprintln!("{} rows, {failed} failed", report.rows.len());
    }
    let summary: BTreeMap<&str, String> = [
        ("rows", report.rows.len().to_string()),
        ("failed", failed.to_string()),
        ("out_dir", args.out_dir.display().to_string()),
    ]
    .into_iter()
    .collect();
    let bytes = match cli.format {
        Format::Json => json_bytes(&summary)?,
        Format::Csv => csv_bytes(
            &summary.keys().map(|k| k.to_string()).collect::<Vec<_>>(),
            [summary.values().cloned().collect()],
        )?,
    };
    emit(None, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["ssr", "grid", "--dim", "1", "--level", "2", "--bogus"]), 1);
        assert_eq!(run(["ssr", "frobnicate"]), 1);
        assert_eq!(run(["ssr", "grid", "--dim", "0", "--level", "2"]), 1);
        assert_eq!(
            run(["ssr", "norm", "--alpha", "1", "--p", "2", "--theta", "2", "--dim", "1", "--level", "2", "--func", "nope"]),
            1
        );
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["ssr", "--help"]), 0);
    }

    #[test]
    fn parses_infinite_exponents() {
        let cli = Cli::try_parse_from([
            "ssr", "norm", "--alpha", "1.5", "--p", "inf", "--theta", "inf", "--dim", "2", "--level", "3", "--func", "sine",
        ])
        .unwrap();
        let Command::Norm(args) = cli.command else { panic!("norm expected") };
        assert!(args.p.is_infinite() && args.theta.is_infinite());
    }

    #[test]
    fn reads_points_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        fs::write(&path, "x1,x2\n0.5,0.25\n1,0\n").unwrap();
        assert_eq!(read_points(&path, 2).ok().unwrap(), vec![vec![0.5, 0.25], vec![1.0, 0.0]]);
        fs::write(&path, "0.5,0.25\n").unwrap();
        assert_eq!(read_points(&path, 2).ok().unwrap().len(), 1);
        fs::write(&path, "0.5\n").unwrap();
        assert!(read_points(&path, 2).is_err());
    }
}
