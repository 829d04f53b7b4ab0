use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use super::{Iri, TermError};

/// Namespace IRIs.
pub mod ns {
    pub const EX: &str = "http://example.ex/";
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const PROHOW: &str = "http://vocab.inf.ed.ac.uk/prohow#";
    pub const PROEX: &str = "http://vocab.inf.ed.ac.uk/proex/0.1#";
    pub const OA: &str = "http://www.w3.org/ns/oa#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
}

/// Prefix label (without the colon) to namespace IRI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixMap {
    entries: BTreeMap<String, Iri>,
}

impl Default for PrefixMap {
    /// The five prefixes every know-how document may use undeclared:
    /// `:`, `rdf:`, `rdfs:`, `prohow:` and `proex:`.
    fn default() -> Self {
        let mut map = PrefixMap::empty();
        for (prefix, namespace) in [
            ("", ns::EX),
            ("rdf", ns::RDF),
            ("rdfs", ns::RDFS),
            ("prohow", ns::PROHOW),
            ("proex", ns::PROEX),
        ] {
            map.insert(prefix, Iri::new(namespace).expect("static namespace"));
        }
        map
    }
}

impl PrefixMap {
    pub fn empty() -> Self {
        PrefixMap {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: Iri) -> Option<Iri> {
        self.entries.insert(prefix.into(), namespace)
    }

    pub fn get(&self, prefix: &str) -> Option<&Iri> {
        self.entries.get(prefix)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by prefix.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Iri)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Expands `prefix:local`. The local part is taken verbatim.
    pub fn expand(&self, prefixed_name: &str) -> Result<Iri, TermError> {
        let (prefix, local) = prefixed_name
            .split_once(':')
            .ok_or_else(|| TermError::UnknownPrefix(prefixed_name.to_string()))?;
        let namespace = self
            .get(prefix)
            .ok_or_else(|| TermError::UnknownPrefix(prefix.to_string()))?;
        Iri::new(format!("{}{}", namespace.as_str(), local))
    }

    /// Shortest `prefix:local` rendering of `iri` whose local part is a
    /// plain Turtle local name, if any namespace matches.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        self.entries
            .iter()
            .filter_map(|(prefix, ns)| {
                let local = iri.as_str().strip_prefix(ns.as_str())?;
                is_plain_local_name(local).then(|| (ns.as_str().len(), prefix, local))
            })
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, prefix, local)| format!("{prefix}:{local}"))
    }
}

/// Expands a prefixed name against `prefixes`.
pub fn expand(prefixed_name: &str, prefixes: &PrefixMap) -> Result<Iri, TermError> {
    prefixes.expand(prefixed_name)
}

/// Local names the writer emits unescaped: `[A-Za-z0-9_]` with interior
/// `-` and `.` allowed. Empty is allowed.
pub(crate) fn is_plain_local_name(local: &str) -> bool {
    if local.is_empty() {
        return true;
    }
    let bytes = local.as_bytes();
    let edge_ok = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    edge_ok(bytes[0])
        && edge_ok(bytes[bytes.len() - 1])
        && bytes
            .iter()
            .all(|&b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

pub(crate) fn is_valid_prefix_label(prefix: &str) -> bool {
    let mut chars = prefix.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_alphabetic() => {
            let rest: String = chars.collect();
            !rest.ends_with('.')
                && rest
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        }
        Some(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_table_prefixes() {
        let p = PrefixMap::default();
        assert_eq!(
            p.expand("prohow:has_step").unwrap().as_str(),
            "http://vocab.inf.ed.ac.uk/prohow#has_step"
        );
        assert_eq!(p.expand(":x").unwrap().as_str(), "http://example.ex/x");
        assert_eq!(
            p.expand("rdf:type").unwrap().as_str(),
            "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
        );
        assert_eq!(
            expand("proex:has_goal", &p).unwrap().as_str(),
            "http://vocab.inf.ed.ac.uk/proex/0.1#has_goal"
        );
    }

    #[test]
    fn default_is_exactly_five_prefixes() {
        let p = PrefixMap::default();
        let names: alloc::vec::Vec<_> = p.iter().map(|(k, _)| k).collect();
        assert_eq!(names, ["", "proex", "prohow", "rdf", "rdfs"]);
    }

    #[test]
    fn unknown_prefix_is_an_error() {
        let p = PrefixMap::default();
        assert_eq!(p.expand("foaf:name"), Err(TermError::UnknownPrefix("foaf".into())));
        assert!(p.expand("noprefix").is_err());
    }

    #[test]
    fn compact_prefers_longest_namespace() {
        let mut p = PrefixMap::default();
        p.insert("vocab", Iri::new("http://vocab.inf.ed.ac.uk/").unwrap());
        let iri = Iri::new("http://vocab.inf.ed.ac.uk/prohow#requires").unwrap();
        assert_eq!(p.compact(&iri).as_deref(), Some("prohow:requires"));
        let odd = Iri::new("http://example.ex/a/b").unwrap();
        assert_eq!(p.compact(&odd), None);
    }

    #[test]
    fn local_name_rules() {
        assert!(is_plain_local_name("organise_conference"));
        assert!(is_plain_local_name("a-b.c"));
        assert!(!is_plain_local_name("a."));
        assert!(!is_plain_local_name("-a"));
        assert!(!is_plain_local_name("a/b"));
    }
}
