//! Shared fixtures for the benchmarks.

use limhodge::strata::{fixture_cycle_of_p1, fixture_product_p1, fixture_projective_space, StrataDatum};

/// Named data sets of increasing size.
pub fn datasets() -> Vec<(String, StrataDatum)> {
    let mut v = Vec::new();
    for n in [1, 3] {
        v.push((format!("P{n}"), fixture_projective_space(n).expect("projective space")));
    }
    for len in [3, 6, 12] {
        v.push((format!("cycle{len}"), fixture_cycle_of_p1(len).expect("cycle")));
    }
    v.push(("cycle3xP1".into(), fixture_product_p1(&fixture_cycle_of_p1(3).expect("cycle"))));
    v
}
