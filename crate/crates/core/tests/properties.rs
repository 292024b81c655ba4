mod common;

use common::*;
use limhodge::limitpage::{analyze, build_e1_a, build_e1_k};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructions_square_to_zero(f in chain_map(3)) {
        prop_assert_eq!(check_constructions(&f), Ok(()));
    }

    #[test]
    fn zeta_diagram_commutes(f in chain_map(2), m in -3i64..=3) {
        prop_assert_eq!(check_zeta(&f, m), Ok(()));
    }

    #[test]
    fn connecting_shift_rule((f, g) in short_exact(2), m in -3i64..=3) {
        prop_assert_eq!(check_connecting_shift(&f, &g, m), Ok(()));
    }

    #[test]
    fn tau_is_filtered_chain_map(k in cocubical(3, 2), l in cocubical(3, 2)) {
        prop_assert_eq!(check_tau_chain_map(&k, &l), Ok(()));
        prop_assert_eq!(check_tau_filtration(&k, &l), Ok(()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tau_associative(k in cocubical(2, 1), l in cocubical(2, 1), m in cocubical(2, 1)) {
        prop_assert_eq!(check_tau_associative(&k, &l, &m), Ok(()));
    }

    #[test]
    fn pipeline_on_valid_data(s in strata_datum()) {
        let a = build_e1_a(&s).unwrap();
        let k = build_e1_k(&s).unwrap();
        prop_assert!(a.d1_squared_witness().is_none());
        prop_assert!(k.d1_squared_witness().is_none());
        let an = analyze(&s).unwrap();
        let failed: Vec<_> = an.all_checks().iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        prop_assert!(failed.is_empty(), "{:?}", failed);
    }

    #[test]
    fn verdicts_invariant_under_relabeling_and_rescaling(s in strata_datum(), seed in any::<u64>(), c in 2i64..=3) {
        let base = analyze(&s).unwrap();
        let moved = relabel(&scale_ample(&s, c), &permutation(s.index.len(), seed));
        let other = analyze(&moved).unwrap();
        let weights = |a: &limhodge::Analysis| a.limit.degrees.iter().map(|d| d.weights.clone()).collect::<Vec<_>>();
        prop_assert_eq!(weights(&base), weights(&other));
        let verdicts = |a: &limhodge::Analysis| a.polarization.as_ref().unwrap().pieces.iter().map(|p| (p.q, p.i, p.positive)).collect::<Vec<_>>();
        prop_assert_eq!(verdicts(&base), verdicts(&other));
        prop_assert!(other.passed());
    }
}
