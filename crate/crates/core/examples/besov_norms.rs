//! Mixed Besov norms from recovered coefficients, and a direct estimate of
//! the mixed modulus of smoothness.

use ssr::besov::{b2_norm_via_quadrature, discrete_b3_norm, modulus_estimate, BesovParams, ModulusOptions};
use ssr::quasi_interpolant::builtin_mask;
use ssr::recovery::build_coefficients;
use ssr::sparse_grid::EvalCache;

fn main() -> ssr::Result<()> {
    let beta = 1.5;
    let kink = move |x: &[f64]| x.iter().map(|xi| (xi - 0.5).abs().powf(beta)).product::<f64>();
    let mask = builtin_mask(2)?;
    let table = build_coefficients(&kink, 2, &mask, 7, &EvalCache::new())?;

    for alpha in [1.0, 1.4, 1.6] {
        let params = BesovParams::new(alpha, f64::INFINITY, f64::INFINITY, 2, 2)?;
        let b3 = discrete_b3_norm(&table, &params)?;
        let b2 = b2_norm_via_quadrature(&table, &params)?;
        // Largest weighted term on each layer |k|_1 = n: bounded for alpha <= beta.
        let layers: Vec<String> = (1..=7u32)
            .map(|n| {
                let top = b3
                    .per_level
                    .iter()
                    .filter(|t| t.level.iter().sum::<u32>() == n)
                    .map(|t| t.term)
                    .fold(0.0, f64::max);
                format!("{top:.3}")
            })
            .collect();
        println!(
            "alpha = {alpha}: B3 = {:.4}, B2 = {:.4}, layer maxima n = 1..7: [{}]",
            b3.value,
            b2.value(),
            layers.join(", ")
        );
    }

    // The second-order modulus of the kink decays like t^beta along each axis.
    let options = ModulusOptions::default();
    for t in [0.25, 0.125, 0.0625] {
        let w = modulus_estimate(&kink, 2, 2, &[0], &[t, t], f64::INFINITY, &options)?;
        println!("omega_2^{{1}}(f, {t})_inf = {w:.4e}, ratio to t^beta {:.3}", w / f64::powf(t, beta));
    }
    Ok(())
}
