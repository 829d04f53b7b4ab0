//! Execution views on random process DAGs.

mod support;

use std::collections::BTreeSet;

use knowhow_core::execution::{compute_view, ready_transitions, ViewOptions};
use knowhow_core::rdf::{Graph, Iri};
use proptest::prelude::*;
use support::dag::{build, check_view, dag, exec, n, oracle, view};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn derived_success_is_the_least_fixpoint(d in dag()) {
        let v = view(&build(&d));
        prop_assert_eq!(v.succeeded_derived.clone(), oracle(&d));
        prop_assert_eq!(v.check(), Ok(()));
        prop_assert_eq!(check_view(&d, &v), Ok(()));
    }

    #[test]
    fn more_success_never_hurts(d in dag(), extra in any::<prop::sample::Index>()) {
        let g = build(&d);
        let before = view(&g);
        let mut more = d.clone();
        more.succeeded.push(extra.index(d.nodes));
        let after = view(&build(&more));
        prop_assert!(after.succeeded_derived.is_superset(&before.succeeded_derived));
        for t in &before.ready {
            prop_assert!(!after.blocked.contains_key(t), "{} moved from ready to blocked", t);
        }
        prop_assert_eq!(after.check(), Ok(()));
        prop_assert_eq!(check_view(&more, &after), Ok(()));
        for e in ready_transitions(&before, &after) {
            prop_assert!(!before.ready.contains(&e.task));
            prop_assert!(after.ready.contains(&e.task));
        }
    }

    #[test]
    fn view_depends_only_on_triples(d in dag()) {
        let g = build(&d);
        let mut reversed = Graph::new();
        let mut triples: Vec<_> = g.iter().collect();
        triples.reverse();
        reversed.extend(triples);
        prop_assert_eq!(view(&g), view(&reversed));
    }

    #[test]
    fn without_derivation_only_assertions_count(d in dag()) {
        let v = compute_view(&build(&d), &exec(), None, ViewOptions { derive: false }).unwrap();
        let asserted: BTreeSet<Iri> = d.succeeded.iter().map(|&i| n(i)).collect();
        prop_assert_eq!(&v.succeeded_derived, &asserted);
        prop_assert_eq!(v.check(), Ok(()));
    }
}
