use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{BindingSet, ContainsFilter, PatternTerm, Query, QueryError, Solution, TriplePattern};
use crate::rdf::{ns, Graph, Iri, Term};

/// Evaluates `query` over `graph`.
///
/// Rows come out sorted by the canonical strings of their terms so results
/// are stable across runs and stores.
pub fn evaluate(query: &Query, graph: &Graph) -> BindingSet {
    finish(query, basic_graph_pattern(graph, &query.patterns))
}

fn basic_graph_pattern(graph: &Graph, patterns: &[TriplePattern]) -> Vec<Solution> {
    let mut remaining: Vec<&TriplePattern> = patterns.iter().collect();
    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let mut solutions = vec![Solution::new()];
    while !remaining.is_empty() && !solutions.is_empty() {
        // most constrained pattern first
        let next = remaining
            .iter()
            .enumerate()
            .max_by_key(|(i, p)| {
                let fixed = p
                    .positions()
                    .iter()
                    .filter(|t| t.as_var().is_none_or(|v| bound.contains(v)))
                    .count();
                (fixed, usize::MAX - i)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let pattern = remaining.remove(next);
        solutions = solutions
            .iter()
            .flat_map(|s| match_pattern(graph, pattern, s))
            .collect();
        bound.extend(pattern.variables());
    }
    solutions
}

fn resolve<'a>(term: &'a PatternTerm, solution: &'a Solution) -> Option<&'a Term> {
    match term {
        PatternTerm::Term(t) => Some(t),
        PatternTerm::Var(v) => solution.get(v),
    }
}

/// Extensions of `solution` by every triple of `graph` matching `pattern`.
pub fn match_pattern(graph: &Graph, pattern: &TriplePattern, solution: &Solution) -> Vec<Solution> {
    let s = resolve(&pattern.subject, solution);
    let p = resolve(&pattern.predicate, solution);
    let o = resolve(&pattern.object, solution);
    let p_iri: Option<&Iri> = match p {
        Some(Term::Iri(iri)) => Some(iri),
        Some(_) => return Vec::new(),
        None => None,
    };
    if matches!(s, Some(Term::Literal(_))) {
        return Vec::new();
    }

    let mut out = Vec::new();
    'triples: for triple in graph.matching(s, p_iri, o) {
        let mut extended = solution.clone();
        let values = [
            triple.subject().clone(),
            Term::Iri(triple.predicate().clone()),
            triple.object().clone(),
        ];
        for (position, value) in pattern.positions().into_iter().zip(values) {
            if let PatternTerm::Var(v) = position {
                match extended.get(v) {
                    Some(existing) if *existing != value => continue 'triples,
                    Some(_) => {}
                    None => {
                        extended.insert(v.clone(), value);
                    }
                }
            }
        }
        out.push(extended);
    }
    out
}

/// Natural join of two solution sequences.
pub fn join(left: &[Solution], right: &[Solution]) -> Vec<Solution> {
    let mut out = Vec::new();
    for l in left {
        'right: for r in right {
            let mut merged = l.clone();
            for (k, v) in r {
                match merged.get(k) {
                    Some(existing) if existing != v => continue 'right,
                    Some(_) => {}
                    None => {
                        merged.insert(k.clone(), v.clone());
                    }
                }
            }
            out.push(merged);
        }
    }
    out
}

fn passes(filter: &ContainsFilter, solution: &Solution) -> bool {
    let Some(value) = solution.get(&filter.var).and_then(Term::str_value) else {
        return false;
    };
    value.to_lowercase().contains(&filter.needle.to_lowercase())
}

/// Applies filters, projection, `DISTINCT`, the canonical row order and
/// `OFFSET`/`LIMIT` to the solutions of `query`'s basic graph pattern.
pub fn finish(query: &Query, solutions: Vec<Solution>) -> BindingSet {
    let vars = query.result_variables();
    let rows = solutions
        .into_iter()
        .filter(|s| query.filters.iter().all(|f| passes(f, s)))
        .map(|s| {
            vars.iter()
                .filter_map(|v| s.get(v).map(|t| (v.clone(), t.clone())))
                .collect::<Solution>()
        })
        .collect();
    let mut result = BindingSet { vars, rows };
    result.sort_canonical();
    if query.distinct {
        result.dedup();
    }
    let offset = query.offset.unwrap_or(0);
    let limit = query.limit.unwrap_or(usize::MAX);
    result.rows = result.rows.into_iter().skip(offset).take(limit).collect();
    result
}

/// The label query behind keyword search: entities whose `rdfs:label`
/// contains every keyword, case-insensitively.
pub fn keyword_query<S: AsRef<str>>(keywords: &[S]) -> Result<Query, QueryError> {
    if keywords.is_empty() || keywords.iter().any(|k| k.as_ref().trim().is_empty()) {
        return Err(QueryError::NoKeywords);
    }
    let label = Iri::new(alloc::format!("{}label", ns::RDFS))?;
    let pattern = TriplePattern::new(PatternTerm::var("entity"), label, PatternTerm::var("label"))?;
    let mut query = Query::select(["entity", "label"], vec![pattern]);
    for k in keywords {
        query = query.filter(ContainsFilter::new("label", k.as_ref().trim().to_lowercase()));
    }
    Ok(query)
}

/// Runs [`keyword_query`] over `graph`.
pub fn keyword_search<S: AsRef<str>>(graph: &Graph, keywords: &[S]) -> Result<BindingSet, QueryError> {
    Ok(evaluate(&keyword_query(keywords)?, graph))
}
