//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssr::bench::functions::TrigPolynomial;
use ssr::bench::{estimate_error, fit_rate, TestFunction};
use ssr::besov::{
    b2_norm_via_quadrature, discrete_b3_norm, embedding_inequality_check, nikolskii_ratio, stability_ratio,
    BesovParams,
};
use ssr::bspline::{refinement_residual, Translation};
use ssr::faber::{faber_coeffs, witness_functions, z_count, WitnessCase};
use ssr::quadrature::{lq_norm, Difference, QuadratureRule};
use ssr::quasi_interpolant::{builtin_mask, validate_mask};
use ssr::recovery::{CoefficientTable, PsiWeights, Recovery, SampledGrid};
use ssr::sparse_grid::{grid_cardinality, grid_nodes, EvalCache, NodeSet};
use ssr::spline::LevelSpline;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn spread(values: &[f64]) -> (f64, f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    (lo, hi, hi / lo)
}

fn random_points(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..=1.0)).collect()).collect()
}

fn distinct_nodes(d: usize, m: u32) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    grid_nodes(d, m, NodeSet::Closed)
        .into_iter()
        .filter_map(|n| {
            let p = n.point().unwrap();
            seen.insert(p.clone()).then(|| p.to_coords())
        })
        .collect()
}

fn refinement_identity() -> Outcome {
    let mut worst = 0.0f64;
    for r in 1..=4i64 {
        let half = r as f64 / 2.0 + 1.0;
        for i in 0..10_000 {
            let x = -half + 2.0 * half * i as f64 / 9_999.0;
            worst = worst.max(refinement_residual(r, x).unwrap().abs());
        }
    }
    outcome(worst <= 1e-12, format!("max residual {worst:.2e} over r = 1..4, 10^4 points each"))
}

fn mask_reproduction() -> Outcome {
    let mut worst = 0.0f64;
    let mut all = true;
    for r in 1..=4 {
        let report = validate_mask(&builtin_mask(r).unwrap());
        all &= report.passed && report.tolerance <= 1e-10;
        worst = report.max_error.iter().copied().fold(worst, f64::max);
    }
    outcome(all, format!("max reproduction error {worst:.2e} for degrees < r, r = 1..4"))
}

fn interpolation_at_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for r in [1usize, 2] {
        let mask = builtin_mask(r).unwrap();
        for d in 1..=3 {
            for i in 0..50u32 {
                let m = i % 7;
                let f = TrigPolynomial::random(rng.gen(), d, 4);
                let rec = Recovery::from_function(&|x: &[f64]| f.eval(x), d, m, &mask).unwrap();
                for x in distinct_nodes(d, m) {
                    worst = worst.max((rec.evaluate(&x).unwrap() - f.eval(&x)).abs());
                }
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max node error {worst:.2e} over {cases} random trigonometric f, r in {{1, 2}}, d = 1..3, m = 0..6"),
    )
}

fn exact_error_law() -> Outcome {
    let f = TestFunction::parse("quad", 1).unwrap();
    let mut worst = 0.0f64;
    for m in 1..=10u32 {
        let rule = QuadratureRule::for_budget(1, m, f64::INFINITY);
        let e = estimate_error(&f, 2, m, f64::INFINITY, &rule).unwrap().error;
        worst = worst.max((e - 2f64.powi(-2 * m as i32 - 2)).abs());
    }
    outcome(worst <= 1e-12, format!("max |e_m - 2^(-2m-2)| = {worst:.2e} for m = 1..10"))
}

fn sampling_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, m) = (2, 3);
    let mut worst = 0.0f64;
    let mut supports_ok = true;
    let mut supports = Vec::new();
    for r in [2usize, 3, 4] {
        let mask = builtin_mask(r).unwrap();
        let psi = PsiWeights::new(d, &mask, m);
        let mu = mask.mu();
        let bound = if r % 2 == 0 { 4 * mu + r + 5 } else { 12 * mu + 2 * r + 13 };
        supports_ok &= psi.max_support() <= bound;
        supports.push(format!("r={r}: {}/{bound}", psi.max_support()));
        for _ in 0..20 {
            let f = TrigPolynomial::random(rng.gen(), d, 4);
            let samples = SampledGrid::sample(&|x: &[f64]| f.eval(x), d, m, &EvalCache::new()).unwrap();
            let rec = Recovery::from_samples(&samples, &mask);
            for x in random_points(&mut rng, d, 100) {
                let a = psi.evaluate(&samples, &x).unwrap();
                let b = rec.evaluate(&x).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(
        worst <= 1e-9 && supports_ok,
        format!(
            "max discrepancy {worst:.2e} over 3 x 20 f x 100 x; per-axis support {}",
            supports.join(", ")
        ),
    )
}

/// `sum_{|k|_1 <= m} prod_i (2^{k_i} + 1)` by recursion on the dimension.
fn multiset_closed_form(d: usize, m: u32) -> u64 {
    if d == 0 {
        return 1;
    }
    (0..=m).map(|k| ((1u64 << k) + 1) * multiset_closed_form(d - 1, m - k)).sum()
}

/// Recorded brackets of `n / (2^m m^{d-1})` for `m = 4..=14`.
const CARDINALITY_BRACKETS: [(usize, f64, f64); 3] = [(1, 1.95, 2.3), (2, 2.45, 4.2), (3, 1.9, 5.3)];

fn grid_cardinality_audit() -> Outcome {
    let mut exact = true;
    for d in 1..=3 {
        for m in 0..=10 {
            let count = grid_cardinality(d, m, 2).multiset_count;
            exact &= count == multiset_closed_form(d, m);
            exact &= count == grid_nodes(d, m, NodeSet::Closed).len() as u64;
        }
    }
    let mut in_bracket = true;
    let mut seen = Vec::new();
    for &(d, lo, hi) in &CARDINALITY_BRACKETS {
        let ratios: Vec<f64> = (4..=14u32)
            .map(|m| grid_cardinality(d, m, 2).multiset_count as f64 / (2f64.powi(m as i32) * (m as f64).powi(d as i32 - 1)))
            .collect();
        let (rmin, rmax, _) = spread(&ratios);
        in_bracket &= lo <= rmin && rmax <= hi;
        seen.push(format!("d={d}: [{rmin:.3}, {rmax:.3}] in [{lo}, {hi}]"));
    }
    outcome(
        exact && in_bracket,
        format!("counts exact for d <= 3, m <= 10: {exact}; ratios {}", seen.join("; ")),
    )
}

fn rate_check() -> Outcome {
    let f = TestFunction::parse("sine", 2).unwrap();
    let mut points = Vec::new();
    for m in 4..=9u32 {
        let rule = QuadratureRule::for_budget(2, m, f64::INFINITY);
        points.push((m, estimate_error(&f, 2, m, f64::INFINITY, &rule).unwrap().error));
    }
    let fit = fit_rate(&points, false).unwrap();
    outcome(
        (-2.3..=-1.7).contains(&fit.slope),
        format!("fitted slope {:.4} (residual {:.2e}) for m = 4..9", fit.slope, fit.residual),
    )
}

fn witness_annihilation() -> Outcome {
    let mask = builtin_mask(2).unwrap();
    let mut worst = 0.0f64;
    for case in [WitnessCase::G1, WitnessCase::G3] {
        let g = witness_functions(case, 2, 4, 1.5, f64::INFINITY, 2.0).unwrap();
        let rec = Recovery::from_function(&|x: &[f64]| g.eval(x), 2, 4, &mask).unwrap();
        for q in [1.0, 2.0, f64::INFINITY] {
            let rule = QuadratureRule::for_budget(2, 4, q);
            let err = lq_norm(&Difference(&g, &rec), q, &rule).unwrap();
            let norm = lq_norm(&g, q, &rule).unwrap();
            worst = worst.max((err / norm - 1.0).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |ratio - 1| = {worst:.2e} for g1, g3 at d = 2, m = 4, q in {{1, 2, inf}}"))
}

fn norm_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_spread = 0.0f64;
    let mut lines = Vec::new();
    let mut all = Vec::new();
    for p in [1.0, 2.0, f64::INFINITY] {
        let params = BesovParams::new(1.5, p, 2.0, 2, 2).unwrap();
        let mut ratios = Vec::new();
        for i in 0..100u32 {
            let m = i % 7;
            let table = CoefficientTable::from_blocks(2, 2, m, |_, n| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect());
            let b2 = b2_norm_via_quadrature(&table, &params).unwrap().value();
            let b3 = discrete_b3_norm(&table, &params).unwrap().value;
            ratios.push(b2 / b3);
        }
        let (lo, hi, s) = spread(&ratios);
        worst_spread = worst_spread.max(s);
        lines.push(format!("p={p}: [{lo:.4}, {hi:.4}] spread {s:.3}"));
        all.extend(ratios);
    }
    let (_, _, overall) = spread(&all);
    outcome(
        worst_spread <= 20.0,
        format!("B2/B3 over 100 tables per p; {}; across all p {overall:.3}", lines.join("; ")),
    )
}

fn faber_cross_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mask = builtin_mask(2).unwrap();
    let mut worst = 0.0f64;
    for i in 0..20u32 {
        let d = 1 + (i as usize % 2);
        let m = i % 6;
        let f = TrigPolynomial::random(rng.gen(), d, 4);
        let faber = faber_coeffs(&|x: &[f64]| f.eval(x), 2, d, m, &EvalCache::new()).unwrap();
        let rec = Recovery::from_function(&|x: &[f64]| f.eval(x), d, m, &mask).unwrap();
        for (k, block) in faber.levels().members().iter().zip(faber.blocks()) {
            let q = rec.level_component(k).unwrap();
            let mut expected = vec![0.0; q.coefficients().len()];
            let strides: Vec<usize> = (0..d)
                .map(|i| q.ranges()[i + 1..].iter().map(|(lo, hi)| (hi - lo + 1) as usize).product())
                .collect();
            let z: Vec<usize> = k.iter().map(|&ki| z_count(2, ki)).collect();
            for (n, &lambda) in block.iter().enumerate() {
                let mut rest = n;
                let mut offset = 0;
                for i in (0..d).rev() {
                    let s = rest % z[i];
                    rest /= z[i];
                    let shift = if k[i] == 0 { s as i64 } else { 2 * s as i64 + 1 };
                    offset += (shift - q.ranges()[i].0) as usize * strides[i];
                }
                expected[offset] = lambda;
            }
            for (a, b) in q.coefficients().iter().zip(&expected) {
                worst = worst.max((a - b).abs());
            }
        }
        for x in random_points(&mut rng, d, 50) {
            worst = worst.max((faber.evaluate(&x).unwrap() - rec.evaluate(&x).unwrap()).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max coefficient or value gap {worst:.2e} over 20 f, d <= 2, m <= 5"))
}

/// Recorded regression bounds for the inequality probes. Nikol'skii and the
/// embedding are one-sided, so only their maxima are bounded; stability is
/// two-sided, so its spread is.
const NIKOLSKII_MAX: f64 = 5.0;
const STABILITY_SPREAD: f64 = 10.0;
const EMBEDDING_MAX: f64 = 2.0;

fn random_level(rng: &mut ChaCha8Rng, k: Vec<u32>) -> LevelSpline {
    let shape = LevelSpline::zeros(2, Translation::Integer, k);
    let values = (0..shape.coefficients().len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    LevelSpline::new(2, Translation::Integer, shape.levels().to_vec(), shape.ranges().to_vec(), values)
}

/// A single unit coefficient at a random shift.
fn spike_level(rng: &mut ChaCha8Rng, k: Vec<u32>) -> LevelSpline {
    let shape = LevelSpline::zeros(2, Translation::Integer, k);
    let n = shape.coefficients().len();
    let hit = rng.gen_range(0..n);
    let values = (0..n).map(|i| if i == hit { 1.0 } else { 0.0 }).collect();
    LevelSpline::new(2, Translation::Integer, shape.levels().to_vec(), shape.ranges().to_vec(), values)
}

fn inequality_probes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut nikolskii = Vec::new();
    let mut stability = Vec::new();
    for (p, q) in [(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)] {
        for k in 0..=6u32 {
            for level in [vec![k], vec![k - k / 2, k / 2]] {
                for g in [random_level(&mut rng, level.clone()), spike_level(&mut rng, level)] {
                    nikolskii.push(nikolskii_ratio(&g, p, q).unwrap());
                    stability.push(stability_ratio(&g, p).unwrap());
                }
            }
        }
    }
    let mut embedding = Vec::new();
    for _ in 0..200 {
        let levels: Vec<LevelSpline> = (0..2)
            .map(|_| {
                let k1 = rng.gen_range(0..=4);
                let k2 = rng.gen_range(0..=4);
                random_level(&mut rng, vec![k1, k2])
            })
            .collect();
        embedding.push(embedding_inequality_check(&levels, 1.0, 2.0).unwrap());
    }
    let (nlo, nhi, _) = spread(&nikolskii);
    let (slo, shi, ss) = spread(&stability);
    let (elo, ehi, _) = spread(&embedding);
    outcome(
        nhi <= NIKOLSKII_MAX && ss <= STABILITY_SPREAD && ehi <= EMBEDDING_MAX && nlo > 0.0 && slo > 0.0,
        format!(
            "Nikol'skii [{nlo:.3}, {nhi:.3}] (max bound {NIKOLSKII_MAX}); \
             stability [{slo:.3}, {shi:.3}] spread {ss:.2} (bound {STABILITY_SPREAD}); \
             embedding p=1 q=2 [{elo:.3}, {ehi:.3}] (bound {EMBEDDING_MAX})"
        ),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "refinement identity", Duration::from_secs(1), refinement_identity),
        (2, "mask reproduction", Duration::from_secs(1), mask_reproduction),
        (3, "interpolation at the sparse grid", Duration::from_secs(30), interpolation_at_grid),
        (4, "exact d=1 error law", Duration::from_secs(5), exact_error_law),
        (5, "sampling-form equivalence", Duration::from_secs(60), sampling_form),
        (6, "grid cardinality audit", Duration::from_secs(1), grid_cardinality_audit),
        (7, "rate check, smooth regime", Duration::from_secs(120), rate_check),
        (8, "witness annihilation", Duration::from_secs(10), witness_annihilation),
        (9, "B2/B3 norm equivalence", Duration::from_secs(60), norm_equivalence),
        (10, "Faber cross-pipeline equality", Duration::from_secs(30), faber_cross_pipeline),
        (11, "inequality probes", Duration::from_secs(60), inequality_probes),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let passed = result.passed && elapsed <= budget;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {}  {name}: {} ({:.2} s, budget {} s)",
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 11 criteria passed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
