use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::{Iri, PrefixMap, Term, Triple};

type Index<A, B, C> = BTreeMap<A, BTreeMap<B, BTreeSet<C>>>;

/// A duplicate-free set of triples plus the prefixes used to present it.
///
/// Three nested indexes (subject-, predicate- and object-first) serve
/// pattern lookups. Equality is set equality over the triples; prefixes
/// are presentation only.
#[derive(Clone)]
pub struct Graph {
    spo: Index<Term, Iri, Term>,
    pos: Index<Iri, Term, Term>,
    osp: Index<Term, Term, Iri>,
    len: usize,
    prefixes: PrefixMap,
}

impl Default for Graph {
    fn default() -> Self {
        Graph::new()
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.spo == other.spo
    }
}

impl Eq for Graph {}

impl core::fmt::Debug for Graph {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_set()
            .entries(self.sorted_triples().iter().map(|t| alloc::format!("{t}")))
            .finish()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph::with_prefixes(PrefixMap::default())
    }

    pub fn with_prefixes(prefixes: PrefixMap) -> Self {
        Graph {
            spo: BTreeMap::new(),
            pos: BTreeMap::new(),
            osp: BTreeMap::new(),
            len: 0,
            prefixes,
        }
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn prefixes_mut(&mut self) -> &mut PrefixMap {
        &mut self.prefixes
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Inserts `triple`; returns whether it was new.
    pub fn insert(&mut self, triple: Triple) -> bool {
        let (s, p, o) = triple.into_parts();
        let added = self
            .spo
            .entry(s.clone())
            .or_default()
            .entry(p.clone())
            .or_default()
            .insert(o.clone());
        if !added {
            return false;
        }
        self.pos
            .entry(p.clone())
            .or_default()
            .entry(o.clone())
            .or_default()
            .insert(s.clone());
        self.osp.entry(o).or_default().entry(s).or_default().insert(p);
        self.len += 1;
        true
    }

    /// Inserts every triple of `other`; returns how many were new.
    pub fn extend_from(&mut self, other: &Graph) -> usize {
        other.iter().filter(|t| self.insert(t.clone())).count()
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        let (s, p, o) = (triple.subject(), triple.predicate(), triple.object());
        let Some(by_p) = self.spo.get_mut(s) else {
            return false;
        };
        let Some(objects) = by_p.get_mut(p) else {
            return false;
        };
        if !objects.remove(o) {
            return false;
        }
        if objects.is_empty() {
            by_p.remove(p);
        }
        if by_p.is_empty() {
            self.spo.remove(s);
        }
        remove_nested(&mut self.pos, p, o, s);
        remove_nested(&mut self.osp, o, s, p);
        self.len -= 1;
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.spo
            .get(triple.subject())
            .and_then(|m| m.get(triple.predicate()))
            .is_some_and(|os| os.contains(triple.object()))
    }

    /// All triples, in the structural order of the subject index.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().flat_map(|(s, by_p)| {
            by_p.iter().flat_map(move |(p, os)| {
                os.iter().map(move |o| Triple {
                    subject: s.clone(),
                    predicate: p.clone(),
                    object: o.clone(),
                })
            })
        })
    }

    /// Triples sorted by the canonical string of (subject, predicate, object).
    pub fn sorted_triples(&self) -> Vec<Triple> {
        let mut all: Vec<Triple> = self.iter().collect();
        all.sort_by_cached_key(Triple::canonical_key);
        all
    }

    /// Triples matching the given positions; `None` is a wildcard.
    pub fn matching(&self, s: Option<&Term>, p: Option<&Iri>, o: Option<&Term>) -> Vec<Triple> {
        let mk = |s: &Term, p: &Iri, o: &Term| Triple {
            subject: s.clone(),
            predicate: p.clone(),
            object: o.clone(),
        };
        let mut out = Vec::new();
        match (s, p, o) {
            (Some(s), _, _) => {
                let Some(by_p) = self.spo.get(s) else {
                    return out;
                };
                let preds: Vec<(&Iri, &BTreeSet<Term>)> = match p {
                    Some(p) => by_p.get_key_value(p).into_iter().collect(),
                    None => by_p.iter().collect(),
                };
                for (p, os) in preds {
                    match o {
                        Some(o) => {
                            if os.contains(o) {
                                out.push(mk(s, p, o));
                            }
                        }
                        None => out.extend(os.iter().map(|o| mk(s, p, o))),
                    }
                }
            }
            (None, Some(p), _) => {
                let Some(by_o) = self.pos.get(p) else {
                    return out;
                };
                let objs: Vec<(&Term, &BTreeSet<Term>)> = match o {
                    Some(o) => by_o.get_key_value(o).into_iter().collect(),
                    None => by_o.iter().collect(),
                };
                for (o, ss) in objs {
                    out.extend(ss.iter().map(|s| mk(s, p, o)));
                }
            }
            (None, None, Some(o)) => {
                if let Some(by_s) = self.osp.get(o) {
                    for (s, ps) in by_s {
                        out.extend(ps.iter().map(|p| mk(s, p, o)));
                    }
                }
            }
            (None, None, None) => out.extend(self.iter()),
        }
        out
    }

    /// Objects of `(subject, predicate, ?)`.
    pub fn objects<'a>(&'a self, subject: &Term, predicate: &Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.spo
            .get(subject)
            .and_then(|m| m.get(predicate))
            .into_iter()
            .flatten()
    }

    /// Subjects of `(?, predicate, object)`.
    pub fn subjects<'a>(&'a self, predicate: &Iri, object: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.pos
            .get(predicate)
            .and_then(|m| m.get(object))
            .into_iter()
            .flatten()
    }

    /// All distinct subjects.
    pub fn subject_terms(&self) -> impl Iterator<Item = &Term> {
        self.spo.keys()
    }

    /// All distinct objects.
    pub fn object_terms(&self) -> impl Iterator<Item = &Term> {
        self.osp.keys()
    }

    pub fn is_subject(&self, term: &Term) -> bool {
        self.spo.contains_key(term)
    }
}

fn remove_nested<A: Ord, B: Ord, C: Ord>(index: &mut Index<A, B, C>, a: &A, b: &B, c: &C) {
    if let Some(inner) = index.get_mut(a) {
        if let Some(set) = inner.get_mut(b) {
            set.remove(c);
            if set.is_empty() {
                inner.remove(b);
            }
        }
        if inner.is_empty() {
            index.remove(a);
        }
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        for t in iter {
            g.insert(t);
        }
        g
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        for t in iter {
            self.insert(t);
        }
    }
}
