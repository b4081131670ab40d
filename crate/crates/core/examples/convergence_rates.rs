//! A small convergence study: recovery errors over a range of budgets and
//! the fitted rate for each function.

use ssr::bench::{run_suite, SuiteConfig};

fn main() -> ssr::Result<()> {
    let config = SuiteConfig::from_toml(
        r#"
dims = [1, 2]
orders = [2]
levels = { lo = 2, hi = 7 }
functions = ["sine", "kink:beta=1.5"]
q_values = [2.0, inf]
"#,
    )?;
    let report = run_suite(&config)?;
    for row in &report.rows {
        println!(
            "{:<14} d={} m={} q={:<3} N={:>6} e_m={:.3e}",
            row.function,
            row.d,
            row.m,
            row.q.to_string(),
            row.n_multiset.unwrap_or(0),
            row.e_m.unwrap_or(f64::NAN)
        );
    }
    for fit in &report.fits {
        println!(
            "fit {:<14} d={} q={:<3} slope {:.3}",
            fit.function,
            fit.d,
            fit.q.to_string(),
            fit.slope.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
