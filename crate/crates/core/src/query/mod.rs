//! SPARQL-subset queries: basic graph patterns, `DISTINCT`, the
//! `CONTAINS(LCASE(STR(?v)), "...")` filter, `LIMIT`/`OFFSET`, and a keyword
//! search over `rdfs:label`.

mod eval;
mod parse;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

pub use eval::{evaluate, finish, join, keyword_query, keyword_search, match_pattern};
pub use parse::parse_query;

use crate::lex::Position;
use crate::rdf::{escape_string, Iri, Term, TermError};

/// One solution: variable name to bound term.
pub type Solution = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("{position}: syntax error: {message}")]
    Syntax { position: Position, message: String },
    #[error("{position}: unknown prefix `{prefix}`")]
    UnknownPrefix { position: Position, prefix: String },
    #[error("variable ?{0} is not bound by any triple pattern")]
    UnboundVariable(String),
    #[error("variable ?{0} is selected twice")]
    DuplicateVariable(String),
    #[error("blank nodes are not allowed in query patterns")]
    BlankNodeInPattern,
    #[error("{0}")]
    Term(#[from] TermError),
    #[error("keyword search needs at least one non-empty keyword")]
    NoKeywords,
}

/// A concrete term or a variable in a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Term(Term),
    Var(String),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl From<Iri> for PatternTerm {
    fn from(iri: Iri) -> Self {
        PatternTerm::Term(Term::Iri(iri))
    }
}

impl From<&Iri> for PatternTerm {
    fn from(iri: &Iri) -> Self {
        PatternTerm::Term(Term::Iri(iri.clone()))
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Term(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    /// Checks the same position rules as [`crate::rdf::Triple`] for the
    /// concrete positions, and rejects blank nodes.
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Result<Self, QueryError> {
        let pattern = TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        };
        for position in pattern.positions() {
            if matches!(position, PatternTerm::Term(Term::BlankNode(_))) {
                return Err(QueryError::BlankNodeInPattern);
            }
        }
        if matches!(pattern.subject, PatternTerm::Term(Term::Literal(_))) {
            return Err(TermError::LiteralSubject.into());
        }
        if matches!(pattern.predicate, PatternTerm::Term(ref t) if !t.is_iri()) {
            return Err(TermError::NonIriPredicate.into());
        }
        Ok(pattern)
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    /// Variables in subject, predicate, object order, without repeats.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for v in self.positions().into_iter().filter_map(PatternTerm::as_var) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// `FILTER(CONTAINS(LCASE(STR(?var)), "needle"))`. Matching is
/// case-insensitive on both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainsFilter {
    pub var: String,
    pub needle: String,
}

impl ContainsFilter {
    pub fn new(var: impl Into<String>, needle: impl Into<String>) -> Self {
        ContainsFilter {
            var: var.into(),
            needle: needle.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Star,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub selection: Selection,
    pub distinct: bool,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<ContainsFilter>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

impl Query {
    /// `SELECT * WHERE { patterns }`.
    pub fn select_all(patterns: Vec<TriplePattern>) -> Self {
        Query {
            selection: Selection::Star,
            distinct: false,
            patterns,
            filters: Vec::new(),
            limit: None,
            offset: None,
        }
    }

    pub fn select<S: Into<String>>(vars: impl IntoIterator<Item = S>, patterns: Vec<TriplePattern>) -> Self {
        Query {
            selection: Selection::Vars(vars.into_iter().map(Into::into).collect()),
            ..Query::select_all(patterns)
        }
    }

    pub fn distinct(mut self) -> Self {
        self.distinct = true;
        self
    }

    pub fn filter(mut self, filter: ContainsFilter) -> Self {
        self.filters.push(filter);
        self
    }

    /// Every variable mentioned by a pattern, in order of first appearance.
    pub fn pattern_variables(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.patterns {
            for v in p.variables() {
                if seen.insert(v) {
                    out.push(String::from(v));
                }
            }
        }
        out
    }

    /// The projected variables.
    pub fn result_variables(&self) -> Vec<String> {
        match &self.selection {
            Selection::Star => self.pattern_variables(),
            Selection::Vars(vs) => vs.clone(),
        }
    }

    /// Checks that selected and filtered variables are bound by a pattern.
    pub fn validate(&self) -> Result<(), QueryError> {
        let bound = self.pattern_variables();
        if let Selection::Vars(vs) = &self.selection {
            let mut seen = BTreeSet::new();
            for v in vs {
                if !seen.insert(v) {
                    return Err(QueryError::DuplicateVariable(v.clone()));
                }
                if !bound.contains(v) {
                    return Err(QueryError::UnboundVariable(v.clone()));
                }
            }
        }
        for f in &self.filters {
            if !bound.contains(&f.var) {
                return Err(QueryError::UnboundVariable(f.var.clone()));
            }
        }
        Ok(())
    }

    /// SPARQL text with every IRI written out in full, suitable for sending
    /// to any endpoint.
    pub fn to_sparql(&self) -> String {
        let mut out = String::from("SELECT ");
        if self.distinct {
            out.push_str("DISTINCT ");
        }
        match &self.selection {
            Selection::Star => out.push('*'),
            Selection::Vars(vs) => {
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "?{v}");
                }
            }
        }
        out.push_str(" WHERE {");
        for p in &self.patterns {
            let _ = write!(out, " {p} .");
        }
        for f in &self.filters {
            let _ = write!(
                out,
                " FILTER(CONTAINS(LCASE(STR(?{})), \"{}\"))",
                f.var,
                escape_string(&f.needle)
            );
        }
        out.push_str(" }");
        if let Some(n) = self.limit {
            let _ = write!(out, " LIMIT {n}");
        }
        if let Some(n) = self.offset {
            let _ = write!(out, " OFFSET {n}");
        }
        out
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sparql())
    }
}

/// Query results: the projected variables and one row per solution.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingSet {
    pub vars: Vec<String>,
    pub rows: Vec<Solution>,
}

impl BindingSet {
    pub fn new(vars: Vec<String>) -> Self {
        BindingSet { vars, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorts rows by the canonical strings of their terms in `vars` order.
    pub fn sort_canonical(&mut self) {
        let vars = self.vars.clone();
        self.rows.sort_by_cached_key(|row| row_key(&vars, row));
    }

    /// Removes duplicate rows, keeping the first of each.
    pub fn dedup(&mut self) {
        let mut seen = BTreeSet::new();
        self.rows.retain(|row| seen.insert(row.clone()));
    }

    /// Column `var` of every row.
    pub fn column<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.rows.iter().filter_map(move |r| r.get(var))
    }
}

pub(crate) fn row_key(vars: &[String], row: &Solution) -> Vec<String> {
    vars.iter()
        .map(|v| row.get(v).map(Term::canonical).unwrap_or_default())
        .collect()
}
