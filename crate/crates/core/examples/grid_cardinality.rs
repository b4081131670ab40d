//! Sizes of the sparse grid `G^d(m)` against the nominal `2^m m^{d-1}`.

use ssr::sparse_grid::{grid_cardinality, grid_nodes, NodeSet};

fn main() {
    println!("{:>2} {:>3} {:>10} {:>10} {:>8}", "d", "m", "multiset", "distinct", "ratio");
    for d in 1..=4 {
        for m in (2..=12).step_by(2) {
            let c = grid_cardinality(d, m, 2);
            let nominal = 2f64.powi(m as i32) * (m as f64).powi(d as i32 - 1);
            println!(
                "{d:>2} {m:>3} {:>10} {:>10} {:>8.3}",
                c.multiset_count,
                c.distinct_count,
                c.multiset_count as f64 / nominal
            );
        }
    }
    let nodes = grid_nodes(2, 2, NodeSet::Closed);
    let mut coords: Vec<Vec<f64>> = nodes.iter().map(|n| n.coords()).collect();
    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
    coords.dedup();
    println!("G^2(2) has {} distinct nodes: {coords:?}", coords.len());
}
