//! The sampling form `R_m f = sum f(2^{-k} j) psi_{k,j}`: build the weights
//! once, then recover from stored samples without touching `f` again.

use ssr::quasi_interpolant::builtin_mask;
use ssr::recovery::{PsiWeights, Recovery, SampledGrid};
use ssr::sparse_grid::EvalCache;

fn main() -> ssr::Result<()> {
    let (d, m) = (2, 5);
    let f = |x: &[f64]| (x[0] - x[1]).cos() * x[0];
    for r in 2..=4 {
        let mask = builtin_mask(r)?;
        let samples = SampledGrid::sample(&f, d, m, &EvalCache::new())?;
        let psi = PsiWeights::new(d, &mask, m);
        let direct = Recovery::from_samples(&samples, &mask);
        let mut gap = 0.0f64;
        for i in 0..=20 {
            for j in 0..=20 {
                let x = [i as f64 / 20.0, j as f64 / 20.0];
                gap = gap.max((psi.evaluate(&samples, &x)? - direct.evaluate(&x)?).abs());
            }
        }
        println!(
            "r = {r}: widest psi support {} nodes per axis, sampling form vs coefficients max gap {gap:.2e}",
            psi.max_support()
        );
    }

    let psi = PsiWeights::new(1, &builtin_mask(2)?, 2);
    println!("psi weights for d = 1, r = 2, m = 2:\n{}", psi.to_json()?);
    Ok(())
}
