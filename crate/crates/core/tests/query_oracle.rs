//! The query engine against the brute-force evaluator.

mod support;

use knowhow_core::query::{evaluate, parse_query};
use proptest::prelude::*;
use support::query::{brute_force, graph, query};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn evaluate_matches_brute_force(g in graph(200), q in query()) {
        let got = evaluate(&q, &g);
        prop_assert_eq!(&got.vars, &q.result_variables());
        prop_assert_eq!(got.rows, brute_force(&q, &g), "query: {}", q);
    }

    #[test]
    fn sparql_text_round_trips(q in query()) {
        let text = q.to_sparql();
        prop_assert_eq!(parse_query(&text).unwrap(), q, "{}", text);
    }

    #[test]
    fn adding_triples_never_removes_rows(g in graph(60), extra in graph(30), mut q in query()) {
        q.filters.clear();
        q.limit = None;
        q.offset = None;
        let before = evaluate(&q, &g);
        let mut bigger = g.clone();
        bigger.extend_from(&extra);
        let after = evaluate(&q, &bigger);
        let mut pool = after.rows.clone();
        for row in before.rows {
            let at = pool.iter().position(|r| *r == row);
            prop_assert!(at.is_some(), "lost row {:?}", row);
            pool.swap_remove(at.unwrap());
        }
    }
}
