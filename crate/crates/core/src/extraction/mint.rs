use alloc::format;
use alloc::string::String;
use core::fmt;
use core::hash::Hasher;

use fnv::FnvHasher;

use super::ExtractionError;
use crate::rdf::Iri;

const SLUG_MAX: usize = 64;

/// Where minted IRIs live and how the source identifier is embedded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MintingPolicy {
    base_namespace: Iri,
    include_source_hash: bool,
}

impl MintingPolicy {
    pub fn new(base_namespace: Iri) -> Result<Self, ExtractionError> {
        if !base_namespace.as_str().ends_with(['/', '#']) {
            return Err(ExtractionError::BadNamespace(base_namespace.into_string()));
        }
        Ok(MintingPolicy {
            base_namespace,
            include_source_hash: false,
        })
    }

    /// Replace the source identifier with a 16-digit hex hash of it.
    pub fn with_source_hash(mut self, on: bool) -> Self {
        self.include_source_hash = on;
        self
    }

    pub fn base_namespace(&self) -> &Iri {
        &self.base_namespace
    }

    pub fn include_source_hash(&self) -> bool {
        self.include_source_hash
    }

    pub(crate) fn source_segment(&self, source_id: &str) -> String {
        if self.include_source_hash {
            let mut h = FnvHasher::default();
            h.write(source_id.as_bytes());
            format!("{:016x}", h.finish())
        } else {
            String::from(source_id)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MintKind {
    Task,
    Method,
    Step,
    Requirement,
}

impl MintKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MintKind::Task => "task",
            MintKind::Method => "method",
            MintKind::Step => "step",
            MintKind::Requirement => "requirement",
        }
    }
}

impl fmt::Display for MintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lowercases, collapses every run of non-alphanumeric characters into one
/// `_`, trims `_` from both ends and keeps at most 64 characters.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('_');
            }
            gap = false;
            out.push(c.to_ascii_lowercase());
        } else {
            gap = true;
        }
    }
    out.truncate(SLUG_MAX);
    out
}

/// Source identifiers are page slugs: ASCII letters, digits, `.` and `-`.
/// Excluding `_` keeps the minted IRI decodable back into its parts.
pub fn is_valid_source_id(source_id: &str) -> bool {
    !source_id.is_empty()
        && source_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-')
}

/// `base + slug(label) + "_" + kind + "_" + sourceId + "_" + path`, with
/// path segments joined by `_`.
pub fn mint_iri(
    policy: &MintingPolicy,
    source_id: &str,
    kind: MintKind,
    path: &[usize],
    label: &str,
) -> Result<Iri, ExtractionError> {
    if label.trim().is_empty() {
        return Err(ExtractionError::EmptyLabel);
    }
    if !is_valid_source_id(source_id) {
        return Err(ExtractionError::InvalidSourceId(String::from(source_id)));
    }
    let mut iri = format!(
        "{}{}_{}_{}_",
        policy.base_namespace.as_str(),
        slug(label),
        kind,
        policy.source_segment(source_id)
    );
    for (i, n) in path.iter().enumerate() {
        if i > 0 {
            iri.push('_');
        }
        iri.push_str(&format!("{n}"));
    }
    Ok(Iri::new(iri)?)
}
