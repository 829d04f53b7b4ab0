//! The process and execution vocabulary, helpers to build and read
//! know-how graphs, Open Annotation links, and structural validation.
//!
//! Relations, with `X` the subject and `Y` the object:
//!
//! | term                  | meaning                                   |
//! |-----------------------|-------------------------------------------|
//! | `prohow:has_step`     | Y can be accomplished as part of X        |
//! | `prohow:requires`     | Y should be accomplished before doing X   |
//! | `prohow:has_method`   | Y can be accomplished instead of X        |
//! | `proex:has_goal`      | execution X is trying to accomplish Y     |
//! | `proex:succeeded_in`  | X has been accomplished in execution Y    |
//! | `proex:failed_in`     | X has failed in execution Y               |
//!
//! None of the helpers assert classes: an entity is not typed as an object,
//! condition or process.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::rdf::{ns, Graph, Iri, Literal, Term, Triple};

pub const HAS_STEP: &str = "http://vocab.inf.ed.ac.uk/prohow#has_step";
pub const REQUIRES: &str = "http://vocab.inf.ed.ac.uk/prohow#requires";
pub const HAS_METHOD: &str = "http://vocab.inf.ed.ac.uk/prohow#has_method";
pub const HAS_GOAL: &str = "http://vocab.inf.ed.ac.uk/proex/0.1#has_goal";
pub const SUCCEEDED_IN: &str = "http://vocab.inf.ed.ac.uk/proex/0.1#succeeded_in";
/// Alternative spelling of [`SUCCEEDED_IN`]; read as a synonym, never written.
pub const SUCCEED_IN: &str = "http://vocab.inf.ed.ac.uk/proex/0.1#succeed_in";
pub const FAILED_IN: &str = "http://vocab.inf.ed.ac.uk/proex/0.1#failed_in";
pub const LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

pub const OA_HAS_BODY: &str = "http://www.w3.org/ns/oa#hasBody";
pub const OA_HAS_TARGET: &str = "http://www.w3.org/ns/oa#hasTarget";
pub const OA_HAS_SOURCE: &str = "http://www.w3.org/ns/oa#hasSource";
pub const OA_HAS_SELECTOR: &str = "http://www.w3.org/ns/oa#hasSelector";
pub const OA_START: &str = "http://www.w3.org/ns/oa#start";
pub const OA_END: &str = "http://www.w3.org/ns/oa#end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VocabTerm {
    HasStep,
    Requires,
    HasMethod,
    HasGoal,
    SucceededIn,
    FailedIn,
    Label,
}

impl VocabTerm {
    pub const ALL: [VocabTerm; 7] = [
        VocabTerm::HasStep,
        VocabTerm::Requires,
        VocabTerm::HasMethod,
        VocabTerm::HasGoal,
        VocabTerm::SucceededIn,
        VocabTerm::FailedIn,
        VocabTerm::Label,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VocabTerm::HasStep => HAS_STEP,
            VocabTerm::Requires => REQUIRES,
            VocabTerm::HasMethod => HAS_METHOD,
            VocabTerm::HasGoal => HAS_GOAL,
            VocabTerm::SucceededIn => SUCCEEDED_IN,
            VocabTerm::FailedIn => FAILED_IN,
            VocabTerm::Label => LABEL,
        }
    }

    pub fn iri(self) -> Iri {
        iri(self.as_str())
    }
}

pub(crate) fn iri(value: &str) -> Iri {
    Iri::new(value).expect("vocabulary IRIs are absolute")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("`{0}` is not an IRI; know-how identities must be IRIs")]
    NotAnIri(String),
    #[error("text position selector start {start} is after end {end}")]
    InvalidSelector { start: u64, end: u64 },
}

/// Adds `subject relation object` for two IRI terms.
pub fn link(graph: &mut Graph, relation: VocabTerm, subject: &Term, object: &Term) -> Result<bool, VocabError> {
    for t in [subject, object] {
        if !t.is_iri() {
            return Err(VocabError::NotAnIri(t.canonical()));
        }
    }
    let triple = Triple::with_predicate(subject.clone(), relation.iri(), object.clone())
        .expect("IRI subject");
    Ok(graph.insert(triple))
}

fn add(graph: &mut Graph, subject: &Iri, relation: VocabTerm, object: &Iri) -> bool {
    graph.insert(Triple::with_predicate(subject.into(), relation.iri(), object.into()).expect("IRI subject"))
}

/// `task prohow:has_step step`.
pub fn add_step(graph: &mut Graph, task: &Iri, step: &Iri) -> bool {
    add(graph, task, VocabTerm::HasStep, step)
}

/// `task prohow:requires requirement`.
pub fn add_requirement(graph: &mut Graph, task: &Iri, requirement: &Iri) -> bool {
    add(graph, task, VocabTerm::Requires, requirement)
}

/// `task prohow:has_method method`.
pub fn add_method(graph: &mut Graph, task: &Iri, method: &Iri) -> bool {
    add(graph, task, VocabTerm::HasMethod, method)
}

/// `execution proex:has_goal goal`.
pub fn add_goal(graph: &mut Graph, execution: &Iri, goal: &Iri) -> bool {
    add(graph, execution, VocabTerm::HasGoal, goal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Succeeded,
    Failed,
}

impl Outcome {
    pub fn predicate(self) -> VocabTerm {
        match self {
            Outcome::Succeeded => VocabTerm::SucceededIn,
            Outcome::Failed => VocabTerm::FailedIn,
        }
    }
}

/// `task proex:succeeded_in execution` or `task proex:failed_in execution`.
pub fn add_outcome(graph: &mut Graph, task: &Iri, execution: &Iri, outcome: Outcome) -> bool {
    add(graph, task, outcome.predicate(), execution)
}

/// Replaces every `rdfs:label` of `entity` with `label`.
pub fn set_label(graph: &mut Graph, entity: &Iri, label: &str) -> bool {
    let subject: Term = entity.into();
    let predicate = VocabTerm::Label.iri();
    let wanted = Term::Literal(Literal::simple(label));
    let stale: Vec<Triple> = graph
        .matching(Some(&subject), Some(&predicate), None)
        .into_iter()
        .filter(|t| *t.object() != wanted)
        .collect();
    for t in &stale {
        graph.remove(t);
    }
    let added = graph.insert(Triple::with_predicate(subject, predicate, wanted).expect("IRI subject"));
    added || !stale.is_empty()
}

fn sorted_iris<'a>(terms: impl Iterator<Item = &'a Term>) -> Vec<Iri> {
    let mut out: Vec<Iri> = terms.filter_map(Term::as_iri).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    out.sort_by_cached_key(|i| Term::from(i).canonical());
    out
}

fn objects_of(graph: &Graph, subject: &Iri, relation: &str) -> Vec<Iri> {
    sorted_iris(graph.objects(&subject.into(), &iri(relation)))
}

fn subjects_of(graph: &Graph, relation: &str, object: &Iri) -> Vec<Iri> {
    sorted_iris(graph.subjects(&iri(relation), &object.into()))
}

pub fn steps_of(graph: &Graph, task: &Iri) -> Vec<Iri> {
    objects_of(graph, task, HAS_STEP)
}

pub fn requirements_of(graph: &Graph, task: &Iri) -> Vec<Iri> {
    objects_of(graph, task, REQUIRES)
}

pub fn methods_of(graph: &Graph, task: &Iri) -> Vec<Iri> {
    objects_of(graph, task, HAS_METHOD)
}

/// Tasks that have `entity` as a step.
pub fn parents_of(graph: &Graph, entity: &Iri) -> Vec<Iri> {
    subjects_of(graph, HAS_STEP, entity)
}

/// Tasks that require `entity`.
pub fn required_by(graph: &Graph, entity: &Iri) -> Vec<Iri> {
    subjects_of(graph, REQUIRES, entity)
}

/// Tasks that have `entity` as a method.
pub fn method_of(graph: &Graph, entity: &Iri) -> Vec<Iri> {
    subjects_of(graph, HAS_METHOD, entity)
}

pub fn goals_of(graph: &Graph, execution: &Iri) -> Vec<Iri> {
    objects_of(graph, execution, HAS_GOAL)
}

/// Tasks asserted with `outcome` in `execution`. Success reads both spellings
/// of the predicate.
pub fn tasks_with_outcome(graph: &Graph, execution: &Iri, outcome: Outcome) -> Vec<Iri> {
    match outcome {
        Outcome::Succeeded => {
            let exec: Term = execution.into();
            sorted_iris(
                graph
                    .subjects(&iri(SUCCEEDED_IN), &exec)
                    .chain(graph.subjects(&iri(SUCCEED_IN), &exec)),
            )
        }
        Outcome::Failed => subjects_of(graph, FAILED_IN, execution),
    }
}

/// All literal labels of `entity`, sorted.
pub fn labels_of(graph: &Graph, entity: &Iri) -> Vec<String> {
    let labels: BTreeSet<String> = graph
        .objects(&entity.into(), &iri(LABEL))
        .filter_map(Term::as_literal)
        .map(|l| l.lexical().to_string())
        .collect();
    labels.into_iter().collect()
}

/// Rewrites `proex:succeed_in` triples to `proex:succeeded_in`; returns how
/// many were rewritten.
pub fn normalize(graph: &mut Graph) -> usize {
    let legacy = iri(SUCCEED_IN);
    let old = graph.matching(None, Some(&legacy), None);
    for t in &old {
        graph.remove(t);
        graph.insert(
            Triple::with_predicate(t.subject().clone(), iri(SUCCEEDED_IN), t.object().clone()).expect("same subject"),
        );
    }
    old.len()
}

/// Source of fresh IRIs for nodes such as annotations.
pub trait IriMinter {
    fn mint(&mut self) -> Iri;
}

/// Mints `prefix` followed by an increasing counter.
#[derive(Debug, Clone)]
pub struct CounterMinter {
    prefix: String,
    next: u64,
}

impl CounterMinter {
    /// `prefix` must start with a scheme, e.g. `http://example.ex/annotation_`.
    pub fn new(prefix: impl Into<String>) -> Self {
        CounterMinter {
            prefix: prefix.into(),
            next: 1,
        }
    }
}

impl IriMinter for CounterMinter {
    fn mint(&mut self) -> Iri {
        let iri = Iri::new(format!("{}{}", self.prefix, self.next)).expect("minter prefix is an absolute IRI");
        self.next += 1;
        iri
    }
}

/// A character range inside the annotated resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct TextPosition {
    pub start: u64,
    pub end: u64,
}

impl TextPosition {
    pub fn new(start: u64, end: u64) -> Result<Self, VocabError> {
        if start > end {
            return Err(VocabError::InvalidSelector { start, end });
        }
        Ok(TextPosition { start, end })
    }
}

/// Links `process` to a resource describing it with an Open Annotation whose
/// body is the process and whose target is the resource, or a text-position
/// fragment of it. Every call mints new nodes; returns the annotation IRI.
pub fn annotate(
    graph: &mut Graph,
    minter: &mut impl IriMinter,
    process: &Iri,
    resource: &Iri,
    fragment: Option<TextPosition>,
) -> Iri {
    let annotation = minter.mint();
    add_raw(graph, &annotation, OA_HAS_BODY, process.into());
    match fragment {
        None => add_raw(graph, &annotation, OA_HAS_TARGET, resource.into()),
        Some(pos) => {
            let target = minter.mint();
            let selector = minter.mint();
            add_raw(graph, &annotation, OA_HAS_TARGET, (&target).into());
            add_raw(graph, &target, OA_HAS_SOURCE, resource.into());
            add_raw(graph, &target, OA_HAS_SELECTOR, (&selector).into());
            let integer = iri(&format!("{}nonNegativeInteger", ns::XSD));
            add_raw(graph, &selector, OA_START, Literal::typed(pos.start.to_string(), integer.clone()).into());
            add_raw(graph, &selector, OA_END, Literal::typed(pos.end.to_string(), integer).into());
        }
    }
    annotation
}

fn add_raw(graph: &mut Graph, subject: &Iri, predicate: &str, object: Term) {
    graph.insert(Triple::with_predicate(subject.into(), iri(predicate), object).expect("IRI subject"));
}

/// An annotation found for a process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct AnnotationRef {
    pub annotation: Iri,
    /// The describing resource (the source, when the target is a fragment).
    pub resource: Iri,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selector: Option<TextPosition>,
}

/// Annotations whose body is `process`, sorted.
pub fn annotations_of(graph: &Graph, process: &Iri) -> Vec<AnnotationRef> {
    let mut out = Vec::new();
    for annotation in subjects_of(graph, OA_HAS_BODY, process) {
        for target in objects_of(graph, &annotation, OA_HAS_TARGET) {
            let sources = objects_of(graph, &target, OA_HAS_SOURCE);
            if sources.is_empty() {
                out.push(AnnotationRef {
                    annotation: annotation.clone(),
                    resource: target,
                    selector: None,
                });
                continue;
            }
            let selector = objects_of(graph, &target, OA_HAS_SELECTOR)
                .first()
                .and_then(|sel| {
                    let read = |p: &str| {
                        graph
                            .objects(&sel.into(), &iri(p))
                            .filter_map(Term::as_literal)
                            .find_map(|l| l.lexical().parse::<u64>().ok())
                    };
                    Some(TextPosition {
                        start: read(OA_START)?,
                        end: read(OA_END)?,
                    })
                });
            for source in sources {
                out.push(AnnotationRef {
                    annotation: annotation.clone(),
                    resource: source,
                    selector,
                });
            }
        }
    }
    out.sort();
    out
}

/// Structural report over a know-how graph. Cycles are listed, never
/// rejected.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProcessGraphReport {
    /// Cycles over `has_step` and `has_method` together.
    pub decomposition_cycles: Vec<Vec<Iri>>,
    pub requires_cycles: Vec<Vec<Iri>>,
    /// Objects of process relations that are never a subject.
    pub orphan_objects: Vec<Iri>,
    pub warnings: Vec<String>,
}

impl ProcessGraphReport {
    pub fn is_acyclic(&self) -> bool {
        self.decomposition_cycles.is_empty() && self.requires_cycles.is_empty()
    }
}

fn relation_edges(graph: &Graph, relations: &[&str]) -> Vec<(Iri, Iri)> {
    let mut edges = Vec::new();
    for r in relations {
        for t in graph.matching(None, Some(&iri(r)), None) {
            if let (Term::Iri(s), Term::Iri(o)) = (t.subject(), t.object()) {
                edges.push((s.clone(), o.clone()));
            }
        }
    }
    edges
}

pub fn validate(graph: &Graph) -> ProcessGraphReport {
    let mut report = ProcessGraphReport {
        decomposition_cycles: find_cycles(&relation_edges(graph, &[HAS_STEP, HAS_METHOD])),
        requires_cycles: find_cycles(&relation_edges(graph, &[REQUIRES])),
        ..Default::default()
    };

    let mut orphans = BTreeSet::new();
    for r in [HAS_STEP, REQUIRES, HAS_METHOD] {
        for t in graph.matching(None, Some(&iri(r)), None) {
            match t.object() {
                Term::Iri(o) if !graph.is_subject(t.object()) => {
                    orphans.insert(o.clone());
                }
                Term::Iri(_) => {}
                other => report
                    .warnings
                    .push(format!("{} has a non-IRI object {}", t.predicate(), other)),
            }
        }
    }
    report.orphan_objects = orphans.into_iter().collect();
    report.orphan_objects.sort_by_cached_key(|i| Term::from(i).canonical());

    let legacy = graph.matching(None, Some(&iri(SUCCEED_IN)), None).len();
    if legacy > 0 {
        report
            .warnings
            .push(format!("{legacy} triple(s) use proex:succeed_in; read as proex:succeeded_in"));
    }
    for cycle in &report.decomposition_cycles {
        report.warnings.push(format!("decomposition cycle: {}", render_cycle(cycle)));
    }
    for cycle in &report.requires_cycles {
        report.warnings.push(format!("requires cycle: {}", render_cycle(cycle)));
    }
    report
}

pub(crate) fn render_cycle(cycle: &[Iri]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(|i| i.to_string()).collect();
    if let Some(first) = cycle.first() {
        parts.push(first.to_string());
    }
    parts.join(" -> ")
}

/// One concrete cycle per strongly connected component that contains a
/// cycle. Each cycle starts at its canonically smallest node and is the
/// shortest cycle through it; the list is sorted.
pub fn find_cycles(edges: &[(Iri, Iri)]) -> Vec<Vec<Iri>> {
    let mut ids: BTreeMap<&Iri, usize> = BTreeMap::new();
    let mut nodes: Vec<&Iri> = Vec::new();
    for (a, b) in edges {
        for node in [a, b] {
            ids.entry(node).or_insert_with(|| {
                nodes.push(node);
                nodes.len() - 1
            });
        }
    }
    let mut digraph: DiGraph<(), ()> = DiGraph::with_capacity(nodes.len(), edges.len());
    for _ in &nodes {
        digraph.add_node(());
    }
    for (a, b) in edges {
        digraph.update_edge(NodeIndex::new(ids[a]), NodeIndex::new(ids[b]), ());
    }

    let mut cycles = Vec::new();
    for component in tarjan_scc(&digraph) {
        let members: BTreeSet<NodeIndex> = component.iter().copied().collect();
        let start = *component
            .iter()
            .min_by_key(|id| Term::from(nodes[id.index()]).canonical())
            .expect("components are non-empty");
        if members.len() == 1 && digraph.find_edge(start, start).is_none() {
            continue;
        }
        let path = shortest_cycle(&digraph, &members, start);
        cycles.push(path.into_iter().map(|id| nodes[id.index()].clone()).collect::<Vec<Iri>>());
    }
    cycles.sort_by_cached_key(|c| c.iter().map(|i| Term::from(i).canonical()).collect::<Vec<_>>());
    cycles
}

fn shortest_cycle(digraph: &DiGraph<(), ()>, members: &BTreeSet<NodeIndex>, start: NodeIndex) -> Vec<NodeIndex> {
    let mut parent: BTreeMap<NodeIndex, NodeIndex> = BTreeMap::new();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    'search: while let Some(node) = queue.pop_front() {
        let mut next: Vec<NodeIndex> = digraph.neighbors(node).filter(|n| members.contains(n)).collect();
        next.sort_unstable();
        for n in next {
            if n == start {
                parent.insert(start, node);
                break 'search;
            }
            if seen.insert(n) {
                parent.insert(n, node);
                queue.push_back(n);
            }
        }
    }
    let mut path = alloc::vec![start];
    let mut at = parent[&start];
    while at != start {
        path.push(at);
        at = parent[&at];
    }
    path[1..].reverse();
    path
}
