use proptest::prelude::*;
use ssr::quasi_interpolant::builtin_mask;
use ssr::recovery::Recovery;
use ssr::sparse_grid::{grid_nodes, NodeSet};

fn trig(c: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |x: &[f64]| c[0] + c[1] * (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + c[2] * x[0] * x[1] * x[1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recovery_is_linear(
        a in prop::collection::vec(-2.0..2.0f64, 3),
        b in prop::collection::vec(-2.0..2.0f64, 3),
        s in -3.0..3.0f64,
        r in 1usize..=4,
        m in 0u32..=4,
        x in prop::collection::vec(0.0..=1.0f64, 2),
    ) {
        let mask = builtin_mask(r).unwrap();
        let (f, g) = (trig(&a), trig(&b));
        let h = |y: &[f64]| f(y) + s * g(y);
        let rf = Recovery::from_function(&f, 2, m, &mask).unwrap().evaluate(&x).unwrap();
        let rg = Recovery::from_function(&g, 2, m, &mask).unwrap().evaluate(&x).unwrap();
        let rh = Recovery::from_function(&h, 2, m, &mask).unwrap().evaluate(&x).unwrap();
        prop_assert!((rh - rf - s * rg).abs() < 1e-11 * (1.0 + rh.abs()));
    }

    #[test]
    fn order_two_interpolates_on_the_grid(c in prop::collection::vec(-2.0..2.0f64, 3), m in 0u32..=5) {
        let f = trig(&c);
        let rec = Recovery::from_function(&f, 2, m, &builtin_mask(2).unwrap()).unwrap();
        for node in grid_nodes(2, m, NodeSet::Closed) {
            let x = node.coords();
            prop_assert!((rec.evaluate(&x).unwrap() - f(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_reproduced(c in -5.0..5.0f64, r in 1usize..=4, m in 0u32..=4, x in prop::collection::vec(0.0..=1.0f64, 3)) {
        let f = |_: &[f64]| c;
        let rec = Recovery::from_function(&f, 3, m, &builtin_mask(r).unwrap()).unwrap();
        prop_assert!((rec.evaluate(&x).unwrap() - c).abs() < 1e-12 * (1.0 + c.abs()));
    }
}
