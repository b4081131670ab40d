//! Faber–Schauder coefficients and the lower-bound witnesses that vanish on
//! the sparse grid.

use ssr::faber::{faber_coeffs, pi_k, psi_weights_faber, witness_functions, WitnessCase};
use ssr::quadrature::{lq_norm, QuadratureRule};
use ssr::recovery::Recovery;
use ssr::quasi_interpolant::builtin_mask;
use ssr::sparse_grid::EvalCache;

fn main() -> ssr::Result<()> {
    let f = |x: &[f64]| x[0] * x[0] + x[0] * x[1];
    let (d, m) = (2, 3);
    let coeffs = faber_coeffs(&f, 2, d, m, &EvalCache::new())?;
    for (k, block) in coeffs.levels().members().iter().zip(coeffs.blocks()) {
        println!("k = {k:?}: {block:?}");
    }
    let x = [0.3, 0.8];
    println!("expansion at {x:?}: {} (f = {})", coeffs.evaluate(&x)?, f(&x));

    let psi = psi_weights_faber(2, d, m)?;
    let sampled = psi.evaluate(
        |k, j| f(&[j[0] as f64 / (1u64 << k[0]) as f64, j[1] as f64 / (1u64 << k[1]) as f64]),
        &x,
    )?;
    println!("sampling form at {x:?}: {sampled}");

    let step = pi_k(|t| t * t, 2)?;
    println!("pi_2(t^2) cell values: {:?}", step.values());

    let mask = builtin_mask(2)?;
    for case in [WitnessCase::G1, WitnessCase::G2, WitnessCase::G3, WitnessCase::G4] {
        let w = witness_functions(case, 2, 4, 1.5, f64::INFINITY, 2.0)?;
        let rec = Recovery::from_function(&|x: &[f64]| w.eval(x), 2, 4, &mask)?;
        let recovered = lq_norm(&rec, f64::INFINITY, &QuadratureRule::for_budget(2, 4, f64::INFINITY))?;
        let norm = lq_norm(&w, f64::INFINITY, &QuadratureRule::for_budget(2, 4, f64::INFINITY))?;
        println!(
            "{case:?}: amplitude {:.3e}, ||g||_inf = {norm:.3e}, ||R_4 g||_inf = {recovered:.1e}",
            w.amplitude
        );
    }
    Ok(())
}
