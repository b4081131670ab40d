//! Centered B-splines and their two-scale refinement identity.
//!
//! Prints `M_r` at a few points and the largest refinement residual on a
//! dense grid for each order.

use ssr::bspline::{CenteredBSpline, DilatedBSpline, Translation};

fn main() -> ssr::Result<()> {
    for r in 1..=4 {
        let m = CenteredBSpline::new(r)?;
        let samples: Vec<String> = [-0.5, 0.0, 0.25, 1.0].iter().map(|&x| format!("{:.6}", m.eval(x))).collect();
        let residual = (0..=2000)
            .map(|i| {
                let x = -m.half_width() - 0.5 + (2.0 * m.half_width() + 1.0) * i as f64 / 2000.0;
                m.refinement_residual(x).abs()
            })
            .fold(0.0, f64::max);
        println!(
            "r = {r}: support half-width {}, M_r(-0.5, 0, 0.25, 1) = [{}], max refinement residual {residual:.2e}",
            m.half_width(),
            samples.join(", ")
        );
    }

    // Dilated and translated copies on the unit interval.
    let even = DilatedBSpline::new(2, 3, 4, Translation::Integer)?;
    let odd = DilatedBSpline::new(3, 3, 4, Translation::Half)?;
    println!("M_2(2^3 x - 4) at x = 0.5: {}", even.eval(0.5));
    println!("M_3(2^3 x - 4/2) at x = 0.25: {}", odd.eval(0.25));
    Ok(())
}
