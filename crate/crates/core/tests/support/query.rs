//! Random graphs and queries, and a brute-force evaluator that tries every
//! assignment of graph terms to variables.

use std::collections::{BTreeMap, BTreeSet};

use knowhow_core::query::{ContainsFilter, PatternTerm, Query, Solution, TriplePattern};
use knowhow_core::rdf::{BlankNode, Graph, Iri, Literal, Term, Triple};
use proptest::prelude::*;

pub const VARS: [&str; 4] = ["x", "y", "z", "w"];

pub fn node(i: usize) -> Term {
    Term::iri(format!("http://example.ex/n{i}")).unwrap()
}

pub fn pred(i: usize) -> Iri {
    Iri::new(format!("http://example.ex/p{i}")).unwrap()
}

pub fn object_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        4 => (0..6usize).prop_map(node),
        1 => prop::sample::select(vec!["Alpha", "beta", "N1 label", "ALPHA beta"]).prop_map(|s| Term::Literal(Literal::simple(s))),
        1 => Just(Term::Literal(Literal::with_language("alpha", "en").unwrap())),
        1 => Just(Term::BlankNode(BlankNode::new("b0").unwrap())),
    ]
}

pub fn subject_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        5 => (0..6usize).prop_map(node),
        1 => Just(Term::BlankNode(BlankNode::new("b0").unwrap())),
    ]
}

pub fn graph(max: usize) -> impl Strategy<Value = Graph> {
    prop::collection::vec((subject_term(), 0..3usize, object_term()), 0..=max).prop_map(|ts| {
        ts.into_iter()
            .map(|(s, p, o)| Triple::with_predicate(s, pred(p), o).unwrap())
            .collect()
    })
}

pub fn var() -> impl Strategy<Value = PatternTerm> {
    prop::sample::select(VARS.to_vec()).prop_map(PatternTerm::var)
}

pub fn pattern() -> impl Strategy<Value = TriplePattern> {
    let s = prop_oneof![2 => var(), 1 => (0..6usize).prop_map(|i| PatternTerm::Term(node(i)))];
    let p = prop_oneof![1 => var(), 2 => (0..3usize).prop_map(|i| PatternTerm::from(pred(i)))];
    let o = prop_oneof![
        2 => var(),
        1 => object_term()
            .prop_filter("no blank nodes in patterns", |t| !matches!(t, Term::BlankNode(_)))
            .prop_map(PatternTerm::Term),
    ];
    (s, p, o).prop_map(|(s, p, o)| TriplePattern::new(s, p, o).unwrap())
}

pub fn query() -> impl Strategy<Value = Query> {
    (
        prop::collection::vec(pattern(), 1..=3),
        any::<bool>(),
        prop::collection::vec(any::<prop::sample::Index>(), 0..=2),
        prop::option::of(prop::sample::select(vec!["alpha", "N1", "a", "zzz"])),
        any::<prop::sample::Index>(),
        prop::option::of(0..5usize),
        prop::option::of(0..5usize),
    )
        .prop_map(|(patterns, distinct, picks, needle, filter_var, limit, offset)| {
            let mut q = Query::select_all(patterns);
            let bound = q.pattern_variables();
            if !bound.is_empty() && !picks.is_empty() {
                let mut chosen: Vec<String> = Vec::new();
                for p in picks {
                    let v = p.get(&bound).clone();
                    if !chosen.contains(&v) {
                        chosen.push(v);
                    }
                }
                q = Query::select(chosen, q.patterns);
            }
            if let (Some(n), false) = (needle, bound.is_empty()) {
                q = q.filter(ContainsFilter::new(filter_var.get(&bound).clone(), n));
            }
            if distinct {
                q = q.distinct();
            }
            q.limit = limit;
            q.offset = offset;
            q
        })
}

fn instantiate(t: &PatternTerm, env: &BTreeMap<&str, &Term>) -> Term {
    match t {
        PatternTerm::Term(t) => t.clone(),
        PatternTerm::Var(v) => env[v.as_str()].clone(),
    }
}

fn text_of(t: &Term) -> Option<String> {
    match t {
        Term::Iri(i) => Some(i.as_str().to_string()),
        Term::Literal(l) => Some(l.lexical().to_string()),
        Term::BlankNode(_) => None,
    }
}

/// Every assignment of the graph's terms (plus the query's constants) to
/// the query variables, kept when all patterns hold.
pub fn brute_force(q: &Query, g: &Graph) -> Vec<Solution> {
    let triples: BTreeSet<(Term, Term, Term)> = g
        .iter()
        .map(|t| (t.subject().clone(), Term::Iri(t.predicate().clone()), t.object().clone()))
        .collect();
    let mut domain: BTreeSet<Term> = BTreeSet::new();
    for (s, p, o) in &triples {
        domain.extend([s.clone(), p.clone(), o.clone()]);
    }
    for p in &q.patterns {
        for t in p.positions() {
            if let PatternTerm::Term(t) = t {
                domain.insert(t.clone());
            }
        }
    }
    let domain: Vec<Term> = domain.into_iter().collect();
    let vars = q.pattern_variables();

    let mut rows = Vec::new();
    let mut counter = vec![0usize; vars.len()];
    if vars.is_empty() || !domain.is_empty() {
        loop {
            let env: BTreeMap<&str, &Term> = vars.iter().map(String::as_str).zip(counter.iter().map(|&i| &domain[i])).collect();
            let holds = q.patterns.iter().all(|p| {
                triples.contains(&(
                    instantiate(&p.subject, &env),
                    instantiate(&p.predicate, &env),
                    instantiate(&p.object, &env),
                ))
            });
            let kept = q.filters.iter().all(|f| {
                text_of(env[f.var.as_str()]).is_some_and(|s| s.to_lowercase().contains(&f.needle.to_lowercase()))
            });
            if holds && kept {
                rows.push(env.iter().map(|(k, v)| (k.to_string(), (*v).clone())).collect::<Solution>());
            }
            // odometer over domain^vars
            let mut i = 0;
            while i < counter.len() {
                counter[i] += 1;
                if counter[i] < domain.len() {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
            if i == counter.len() {
                break;
            }
        }
    }

    let out_vars = q.result_variables();
    let mut projected: Vec<(Vec<String>, Solution)> = rows
        .into_iter()
        .map(|r| {
            let row: Solution = out_vars.iter().map(|v| (v.clone(), r[v].clone())).collect();
            let key = out_vars.iter().map(|v| row[v].canonical()).collect();
            (key, row)
        })
        .collect();
    projected.sort_by(|a, b| a.0.cmp(&b.0));
    if q.distinct {
        projected.dedup_by(|a, b| a.0 == b.0);
    }
    projected
        .into_iter()
        .map(|(_, r)| r)
        .skip(q.offset.unwrap_or(0))
        .take(q.limit.unwrap_or(usize::MAX))
        .collect()
}

