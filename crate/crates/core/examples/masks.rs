//! Quasi-interpolation masks: the builtin ones, a user mask, and the
//! univariate operator `Q_k` applied to a smooth function.

use ssr::quasi_interpolant::{builtin_mask, quasi_interpolant, validate_mask, Mask};

fn main() -> ssr::Result<()> {
    for r in 1..=4 {
        let mask = builtin_mask(r)?;
        let report = validate_mask(&mask);
        println!(
            "r = {r}: mu = {}, weights = {:?}, reproduction errors {:?}, passed = {}",
            mask.mu(),
            mask.weights(),
            report.max_error,
            report.passed
        );
    }

    // Order 4 needs a half-width of at least 1; point evaluation padded to
    // that width is accepted by construction but fails reproduction.
    if let Err(e) = Mask::new(4, vec![1.0]) {
        println!("rejected: {e}");
    }
    let padded = Mask::new(4, vec![0.0, 1.0, 0.0])?;
    let report = validate_mask(&padded);
    println!("padded point evaluation at r = 4: passed = {}, errors {:?}", report.passed, report.max_error);

    let f = |x: f64| (3.0 * x).sin();
    let mask = builtin_mask(4)?;
    for k in [2, 4, 6] {
        let q = quasi_interpolant(f, &mask, k);
        let err = (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                (q.eval(&[x]) - f(x)).abs()
            })
            .fold(0.0, f64::max);
        println!("Q_{k} sin(3x), r = 4: sup error {err:.3e}");
    }
    Ok(())
}
