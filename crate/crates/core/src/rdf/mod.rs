//! RDF data model: terms, triples, duplicate-free graphs, prefixes and a
//! Turtle subset reader/writer.

mod graph;
mod prefixes;
mod term;
mod turtle;

use alloc::string::String;
use core::fmt;

pub use graph::Graph;
pub use prefixes::{expand, ns, PrefixMap};
pub use term::{BlankNode, Iri, Literal, Term};
pub use turtle::{parse_turtle, serialize_turtle, TurtleError, TurtleParser};

pub(crate) use term::{escape_string, has_scheme};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("IRI `{0}` is not absolute")]
    RelativeIri(String),
    #[error("IRI `{0}` contains forbidden character {1:?}")]
    InvalidIriChar(String, char),
    #[error("invalid blank node label `{0}`")]
    InvalidBlankLabel(String),
    #[error("invalid language tag `{0}`")]
    InvalidLanguageTag(String),
    #[error("literal cannot be a triple subject")]
    LiteralSubject,
    #[error("predicate must be an IRI")]
    NonIriPredicate,
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
}

/// A subject/predicate/object statement. Subjects are never literals and
/// predicates are always IRIs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    subject: Term,
    predicate: Iri,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::LiteralSubject);
        }
        let Term::Iri(predicate) = predicate else {
            return Err(TermError::NonIriPredicate);
        };
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    /// Builds an IRI-predicate triple; only the subject can be wrong.
    pub fn with_predicate(subject: Term, predicate: Iri, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::LiteralSubject);
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Iri {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn into_parts(self) -> (Term, Iri, Term) {
        (self.subject, self.predicate, self.object)
    }

    /// Canonical sort key: the canonical strings of subject, predicate, object.
    pub fn canonical_key(&self) -> (String, String, String) {
        (
            self.subject.canonical(),
            Term::Iri(self.predicate.clone()).canonical(),
            self.object.canonical(),
        )
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
