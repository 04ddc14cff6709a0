use std::sync::OnceLock;

use opetope::checks::{facet_parity, is_rigid, sphere_op_is_sound, sphere_ops, suspension_commutes};
use opetope::enumerate::tower;
use opetope::opetope::Opetope;
use proptest::prelude::*;

/// Every enumerated opetope of dimension at most five, small enough to sample.
fn pool() -> &'static Vec<Opetope> {
    static POOL: OnceLock<Vec<Opetope>> = OnceLock::new();
    POOL.get_or_init(|| tower(5, 2).into_iter().flat_map(|l| l.into_values()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sphere_operations_stay_valid(pick in any::<prop::sample::Index>(), level in any::<prop::sample::Index>(), op in any::<prop::sample::Index>()) {
        let x = pick.get(pool());
        let i = level.index(x.dim() + 1);
        let ops = sphere_ops(x.complex(), i);
        let op = op.get(&ops);
        prop_assert!(sphere_op_is_sound(x.complex(), i, op).is_ok(), "{:?}", sphere_op_is_sound(x.complex(), i, op));
    }

    #[test]
    fn suspension_commutes_with_faces(pick in any::<prop::sample::Index>()) {
        let x = pick.get(pool());
        prop_assert_eq!(suspension_commutes(x), Ok(()));
    }
}

#[test]
fn facet_parity_up_to_dimension_four() {
    for level in tower(4, 3) {
        for x in level.values() {
            facet_parity(x).unwrap();
        }
    }
}

#[test]
fn enumerated_opetopes_are_rigid() {
    for x in pool() {
        assert!(is_rigid(x.complex()), "{x}");
    }
    assert!(!is_rigid(&opetope::fixtures::two_branch()));
}

#[test]
fn faces_of_enumerated_opetopes_are_enumerated() {
    let t = tower(4, 3);
    for n in 1..t.len() {
        for x in t[n].values() {
            assert!(t[n - 1].contains_key(&x.target().unwrap().canonical_key()));
            for (_, s) in x.sources() {
                assert!(t[n - 1].contains_key(&s.canonical_key()));
            }
        }
    }
}
