//! Random process DAGs for execution views, with a recursive definition
//! of derived success.

use std::collections::{BTreeMap, BTreeSet};

use knowhow_core::execution::{compute_view, ExecutionView, ViewOptions};
use knowhow_core::rdf::{Graph, Iri};
use knowhow_core::vocab::{self, Outcome};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Step,
    Method,
    Requires,
}

#[derive(Debug, Clone)]
pub struct Dag {
    pub nodes: usize,
    pub edges: Vec<(usize, Rel, usize)>,
    pub goals: Vec<usize>,
    pub succeeded: Vec<usize>,
    pub failed: Vec<usize>,
}

pub fn n(i: usize) -> Iri {
    Iri::new(format!("http://example.ex/t{i}")).unwrap()
}

pub fn exec() -> Iri {
    Iri::new("http://example.ex/run").unwrap()
}

pub fn dag() -> impl Strategy<Value = Dag> {
    (2..=50usize).prop_flat_map(|nodes| {
        let edge = (0..nodes, 0..nodes, prop::sample::select(vec![Rel::Step, Rel::Step, Rel::Method, Rel::Requires]))
            .prop_filter_map("edges point forward", |(a, b, r)| (a < b).then_some((a, r, b)));
        (
            Just(nodes),
            prop::collection::vec(edge, 0..nodes * 2),
            prop::collection::vec(0..nodes.min(4), 1..3),
            prop::collection::vec(0..nodes, 0..nodes),
            prop::collection::vec(0..nodes, 0..nodes / 4 + 1),
        )
            .prop_map(|(nodes, edges, goals, succeeded, failed)| Dag {
                nodes,
                edges,
                goals,
                succeeded,
                failed,
            })
    })
}

pub fn build(d: &Dag) -> Graph {
    let mut g = Graph::new();
    for &(a, r, b) in &d.edges {
        match r {
            Rel::Step => vocab::add_step(&mut g, &n(a), &n(b)),
            Rel::Method => vocab::add_method(&mut g, &n(a), &n(b)),
            Rel::Requires => vocab::add_requirement(&mut g, &n(a), &n(b)),
        };
    }
    for &goal in &d.goals {
        vocab::add_goal(&mut g, &exec(), &n(goal));
    }
    for &s in &d.succeeded {
        vocab::add_outcome(&mut g, &n(s), &exec(), Outcome::Succeeded);
    }
    for &f in &d.failed {
        vocab::add_outcome(&mut g, &n(f), &exec(), Outcome::Failed);
    }
    g
}

/// Derived success by structural recursion; edges point forward so the
/// recursion terminates and yields the least fixpoint.
pub fn oracle(d: &Dag) -> BTreeSet<Iri> {
    let out = |rel: Rel, a: usize| -> Vec<usize> {
        d.edges.iter().filter(|e| e.0 == a && e.1 == rel).map(|e| e.2).collect()
    };
    let mut relevant = vec![false; d.nodes];
    let mut stack: Vec<usize> = d.goals.clone();
    while let Some(t) = stack.pop() {
        if !std::mem::replace(&mut relevant[t], true) {
            for e in d.edges.iter().filter(|e| e.0 == t) {
                stack.push(e.2);
            }
        }
    }
    let asserted: BTreeSet<usize> = d.succeeded.iter().copied().collect();
    let mut memo: BTreeMap<usize, bool> = BTreeMap::new();
    fn done(
        t: usize,
        relevant: &[bool],
        asserted: &BTreeSet<usize>,
        out: &dyn Fn(Rel, usize) -> Vec<usize>,
        memo: &mut BTreeMap<usize, bool>,
    ) -> bool {
        if let Some(&v) = memo.get(&t) {
            return v;
        }
        let mut v = asserted.contains(&t);
        if !v && relevant[t] {
            let methods = out(Rel::Method, t);
            let steps = out(Rel::Step, t);
            v = methods.iter().any(|&m| done(m, relevant, asserted, out, memo))
                || (!steps.is_empty() && steps.iter().all(|&s| done(s, relevant, asserted, out, memo)));
        }
        memo.insert(t, v);
        v
    }
    (0..d.nodes)
        .filter(|&t| done(t, &relevant, &asserted, &out, &mut memo))
        .map(n)
        .collect()
}

pub fn view(g: &Graph) -> ExecutionView {
    compute_view(g, &exec(), None, ViewOptions::default()).expect("forward edges cannot form a cycle")
}


/// Goals plus everything reachable from them along any edge.
pub fn relevant(d: &Dag) -> BTreeSet<Iri> {
    let mut seen = vec![false; d.nodes];
    let mut stack: Vec<usize> = d.goals.clone();
    while let Some(t) = stack.pop() {
        if !std::mem::replace(&mut seen[t], true) {
            stack.extend(d.edges.iter().filter(|e| e.0 == t).map(|e| e.2));
        }
    }
    (0..d.nodes).filter(|&t| seen[t]).map(n).collect()
}

/// Checks the view's sets against the definitions, worked out from the
/// DAG rather than from the graph.
pub fn check_view(d: &Dag, v: &ExecutionView) -> Result<(), String> {
    let derived = oracle(d);
    if v.succeeded_derived != derived {
        return Err(format!("derived {:?}, expected {:?}", v.succeeded_derived, derived));
    }
    let asserted: BTreeSet<Iri> = d.succeeded.iter().map(|&i| n(i)).collect();
    let failed: BTreeSet<Iri> = d.failed.iter().map(|&i| n(i)).collect();
    if v.succeeded_asserted != asserted || v.failed_asserted != failed {
        return Err("asserted sets differ from the assertions made".into());
    }
    if !asserted.is_subset(&v.succeeded_derived) {
        return Err("an asserted success is not derived".into());
    }
    let requires = |t: &Iri| -> BTreeSet<Iri> {
        d.edges
            .iter()
            .filter(|e| n(e.0) == *t && e.1 == Rel::Requires)
            .map(|e| n(e.2))
            .collect()
    };
    let mut ready = BTreeSet::new();
    let mut blocked = BTreeMap::new();
    for t in relevant(d) {
        if derived.contains(&t) || failed.contains(&t) {
            continue;
        }
        let unmet: BTreeSet<Iri> = requires(&t).difference(&derived).cloned().collect();
        if unmet.is_empty() {
            ready.insert(t);
        } else {
            blocked.insert(t, unmet);
        }
    }
    if v.ready != ready {
        return Err(format!("ready {:?}, expected {:?}", v.ready, ready));
    }
    if v.blocked != blocked {
        return Err(format!("blocked {:?}, expected {:?}", v.blocked, blocked));
    }
    if v.ready.iter().any(|t| v.succeeded_derived.contains(t) || v.failed_asserted.contains(t)) {
        return Err("a ready task is done or failed".into());
    }
    Ok(())
}
