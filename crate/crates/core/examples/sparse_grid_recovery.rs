//! Recover a function of three variables from its values on the sparse grid
//! `G^3(m)` and report the sup error on random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssr::quasi_interpolant::builtin_mask;
use ssr::recovery::Recovery;
use ssr::sparse_grid::grid_cardinality;

fn main() -> ssr::Result<()> {
    let d = 3;
    let f = |x: &[f64]| x.iter().map(|xi| (1.0 + xi * xi).recip()).product::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let probes: Vec<Vec<f64>> = (0..2000).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();

    for r in [2, 4] {
        let mask = builtin_mask(r)?;
        for m in [2, 4, 6, 8] {
            let rec = Recovery::from_function(&f, d, m, &mask)?;
            let mut err = 0.0f64;
            for x in &probes {
                err = err.max((rec.evaluate(x)? - f(x)).abs());
            }
            let stats = rec.cache_stats().unwrap_or_default();
            println!(
                "r = {r}, m = {m}: {} evaluations of f ({} grid points), sup error {err:.3e}",
                stats.misses,
                grid_cardinality(d, m, r).distinct_count
            );
        }
    }
    Ok(())
}
