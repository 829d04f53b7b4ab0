//! SPARQL 1.1 query results in JSON.

use std::collections::BTreeMap;

use knowhow_core::query::{BindingSet, Solution};
use knowhow_core::rdf::{BlankNode, Iri, Literal, Term, TermError};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

pub const CONTENT_TYPE: &str = "application/sparql-results+json";

#[derive(Debug, thiserror::Error)]
pub enum ResultsError {
    #[error("malformed results document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown term type `{0}`")]
    UnknownType(String),
    #[error("bad term in results: {0}")]
    Term(#[from] TermError),
}

#[derive(Serialize)]
struct JsonTerm<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    value: &'a str,
    #[serde(rename = "xml:lang", skip_serializing_if = "Option::is_none")]
    lang: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    datatype: Option<&'a str>,
}

impl<'a> From<&'a Term> for JsonTerm<'a> {
    fn from(term: &'a Term) -> Self {
        match term {
            Term::Iri(i) => JsonTerm {
                kind: "uri",
                value: i.as_str(),
                lang: None,
                datatype: None,
            },
            Term::BlankNode(b) => JsonTerm {
                kind: "bnode",
                value: b.label(),
                lang: None,
                datatype: None,
            },
            Term::Literal(l) => JsonTerm {
                kind: "literal",
                value: l.lexical(),
                lang: l.language(),
                datatype: l.datatype().map(Iri::as_str),
            },
        }
    }
}

/// One binding object, keys in head order.
struct Row<'a> {
    vars: &'a [String],
    row: &'a Solution,
}

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        for v in self.vars {
            if let Some(t) = self.row.get(v) {
                map.serialize_entry(v, &JsonTerm::from(t))?;
            }
        }
        map.end()
    }
}

struct Rows<'a>(&'a BindingSet);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.rows.iter().map(|row| Row { vars: &self.0.vars, row }))
    }
}

#[derive(Serialize)]
struct Head<'a> {
    vars: &'a [String],
}

#[derive(Serialize)]
struct Body<'a> {
    bindings: Rows<'a>,
}

/// Serializable view of a [`BindingSet`] as a results document.
#[derive(Serialize)]
pub struct ResultsDoc<'a> {
    head: Head<'a>,
    results: Body<'a>,
}

impl<'a> ResultsDoc<'a> {
    pub fn new(set: &'a BindingSet) -> Self {
        ResultsDoc {
            head: Head { vars: &set.vars },
            results: Body { bindings: Rows(set) },
        }
    }
}

pub fn to_json(set: &BindingSet) -> String {
    serde_json::to_string(&ResultsDoc::new(set)).expect("results serialize")
}

#[derive(Deserialize)]
struct OwnedTerm {
    #[serde(rename = "type")]
    kind: String,
    value: String,
    #[serde(rename = "xml:lang")]
    lang: Option<String>,
    datatype: Option<String>,
}

#[derive(Deserialize)]
struct OwnedDoc {
    head: OwnedHead,
    results: OwnedBody,
}

#[derive(Deserialize)]
struct OwnedHead {
    #[serde(default)]
    vars: Vec<String>,
}

#[derive(Deserialize)]
struct OwnedBody {
    bindings: Vec<BTreeMap<String, OwnedTerm>>,
}

fn term(t: OwnedTerm) -> Result<Term, ResultsError> {
    Ok(match t.kind.as_str() {
        "uri" => Term::Iri(Iri::new(t.value)?),
        "bnode" => Term::BlankNode(BlankNode::new(t.value)?),
        "literal" | "typed-literal" => Term::Literal(match (t.lang, t.datatype) {
            (Some(lang), _) => Literal::with_language(t.value, lang)?,
            (None, Some(dt)) => Literal::typed(t.value, Iri::new(dt)?),
            (None, None) => Literal::simple(t.value),
        }),
        other => return Err(ResultsError::UnknownType(other.to_string())),
    })
}

/// Reads a results document, as returned by any endpoint speaking the
/// format.
pub fn from_json(text: &str) -> Result<BindingSet, ResultsError> {
    let doc: OwnedDoc = serde_json::from_str(text)?;
    let rows = doc
        .results
        .bindings
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(k, v)| Ok((k, term(v)?)))
                .collect::<Result<Solution, ResultsError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BindingSet { vars: doc.head.vars, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BindingSet {
        let mut row = Solution::new();
        row.insert("s".into(), Term::iri("http://example.ex/a").unwrap());
        row.insert("l".into(), Term::Literal(Literal::with_language("hi", "en").unwrap()));
        let mut row2 = Solution::new();
        row2.insert("s".into(), Term::blank("b1").unwrap());
        row2.insert(
            "l".into(),
            Term::Literal(Literal::typed("5", Iri::new("http://www.w3.org/2001/XMLSchema#integer").unwrap())),
        );
        BindingSet {
            vars: vec!["s".into(), "l".into()],
            rows: vec![row, row2],
        }
    }

    #[test]
    fn exact_shape() {
        assert_eq!(
            to_json(&sample()),
            concat!(
                r#"{"head":{"vars":["s","l"]},"results":{"bindings":["#,
                r#"{"s":{"type":"uri","value":"http://example.ex/a"},"l":{"type":"literal","value":"hi","xml:lang":"en"}},"#,
                r#"{"s":{"type":"bnode","value":"b1"},"l":{"type":"literal","value":"5","datatype":"http://www.w3.org/2001/XMLSchema#integer"}}"#,
                r#"]}}"#
            )
        );
    }

    #[test]
    fn round_trip() {
        assert_eq!(from_json(&to_json(&sample())).unwrap(), sample());
    }

    #[test]
    fn empty_pattern_row() {
        let set = BindingSet {
            vars: vec![],
            rows: vec![Solution::new()],
        };
        assert_eq!(to_json(&set), r#"{"head":{"vars":[]},"results":{"bindings":[{}]}}"#);
    }

    #[test]
    fn rejects_unknown_types() {
        let text = r#"{"head":{"vars":["x"]},"results":{"bindings":[{"x":{"type":"triple","value":"?"}}]}}"#;
        assert!(matches!(from_json(text), Err(ResultsError::UnknownType(_))));
        assert!(from_json("{}").is_err());
    }
}
