//! Execution state: which tasks of an execution are done, which can start,
//! and which wait on unmet requirements.
//!
//! Success is derived upward through the decomposition: a task succeeded if
//! it was asserted to, if one of its methods succeeded, or if all of its
//! steps succeeded. Derived success is computed at query time and never
//! written back. Failure only blocks the failed task itself.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::rdf::{Graph, Iri};
use crate::vocab::{self, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecutionError {
    #[error("requirement cycle: {}", vocab::render_cycle(.0))]
    RequiresCycle(Vec<Iri>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewOptions {
    /// Derive success of parents from their steps and methods. When off,
    /// only asserted success counts.
    pub derive: bool,
}

impl Default for ViewOptions {
    fn default() -> Self {
        ViewOptions { derive: true }
    }
}

/// Snapshot of one execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionView {
    #[serde(rename = "executionIri")]
    pub execution: Iri,
    pub goals: BTreeSet<Iri>,
    /// Roots plus everything reachable through steps, methods and
    /// requirements.
    pub relevant: BTreeSet<Iri>,
    pub succeeded_asserted: BTreeSet<Iri>,
    pub failed_asserted: BTreeSet<Iri>,
    pub succeeded_derived: BTreeSet<Iri>,
    pub ready: BTreeSet<Iri>,
    /// Requirements of each ready task, all of them satisfied.
    pub satisfied: BTreeMap<Iri, BTreeSet<Iri>>,
    /// Unmet requirements of each task that cannot start yet.
    pub blocked: BTreeMap<Iri, BTreeSet<Iri>>,
    /// Tasks asserted both succeeded and failed. Success wins.
    pub contradictions: BTreeSet<Iri>,
    pub warnings: Vec<String>,
}

impl ExecutionView {
    /// Checks the structural invariants, returning the first violation.
    pub fn check(&self) -> Result<(), String> {
        if let Some(t) = self.succeeded_asserted.difference(&self.succeeded_derived).next() {
            return Err(format!("{t} asserted but not derived"));
        }
        for t in &self.ready {
            if self.succeeded_derived.contains(t) || self.failed_asserted.contains(t) {
                return Err(format!("{t} is ready but already settled"));
            }
            let Some(reqs) = self.satisfied.get(t) else {
                return Err(format!("{t} is ready without a requirement record"));
            };
            if let Some(r) = reqs.difference(&self.succeeded_derived).next() {
                return Err(format!("{t} is ready but {r} is not done"));
            }
        }
        let expected: BTreeSet<&Iri> = self
            .relevant
            .iter()
            .filter(|t| !self.ready.contains(*t))
            .filter(|t| !self.succeeded_derived.contains(*t) && !self.failed_asserted.contains(*t))
            .collect();
        let keys: BTreeSet<&Iri> = self.blocked.keys().collect();
        if expected != keys {
            return Err(String::from("blocked tasks do not match the unsettled, unready ones"));
        }
        Ok(())
    }
}

/// A task that moved from not ready to ready between two views.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ReadyEvent {
    pub execution: Iri,
    pub task: Iri,
    /// The requirements whose completion made the task ready.
    pub because: BTreeSet<Iri>,
}

/// Everything reachable from `roots` through has_step, has_method and
/// requires, roots included.
pub fn relevant_tasks(graph: &Graph, roots: &[Iri]) -> BTreeSet<Iri> {
    let mut seen: BTreeSet<Iri> = roots.iter().cloned().collect();
    let mut queue: VecDeque<Iri> = roots.iter().cloned().collect();
    while let Some(t) = queue.pop_front() {
        let next = vocab::steps_of(graph, &t)
            .into_iter()
            .chain(vocab::methods_of(graph, &t))
            .chain(vocab::requirements_of(graph, &t));
        for n in next {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// Least set containing `asserted` and closed under the method (any) and
/// step (all) rules, restricted to `tasks`.
pub fn derive_success(graph: &Graph, tasks: &BTreeSet<Iri>, asserted: &BTreeSet<Iri>) -> BTreeSet<Iri> {
    let mut done = asserted.clone();
    let structure: Vec<(&Iri, Vec<Iri>, Vec<Iri>)> = tasks
        .iter()
        .map(|t| (t, vocab::methods_of(graph, t), vocab::steps_of(graph, t)))
        .filter(|(_, m, s)| !m.is_empty() || !s.is_empty())
        .collect();
    loop {
        let mut changed = false;
        for (t, methods, steps) in &structure {
            if done.contains(*t) {
                continue;
            }
            let by_method = methods.iter().any(|m| done.contains(m));
            let by_steps = !steps.is_empty() && steps.iter().all(|s| done.contains(s));
            if by_method || by_steps {
                done.insert((*t).clone());
                changed = true;
            }
        }
        if !changed {
            return done;
        }
    }
}

/// Computes the state of `execution` over `graph`.
///
/// The tasks considered are those reachable from `scope`, or from the
/// execution's goals when no scope is given. A requirement cycle among them
/// is an error since none of its tasks could ever start.
pub fn compute_view(
    graph: &Graph,
    execution: &Iri,
    scope: Option<&Iri>,
    options: ViewOptions,
) -> Result<ExecutionView, ExecutionError> {
    let goals: BTreeSet<Iri> = vocab::goals_of(graph, execution).into_iter().collect();
    let roots: Vec<Iri> = match scope {
        Some(s) => Vec::from([s.clone()]),
        None => goals.iter().cloned().collect(),
    };
    let relevant = relevant_tasks(graph, &roots);

    let requires_edges: Vec<(Iri, Iri)> = relevant
        .iter()
        .flat_map(|t| vocab::requirements_of(graph, t).into_iter().map(move |r| (t.clone(), r)))
        .collect();
    if let Some(cycle) = vocab::find_cycles(&requires_edges).into_iter().next() {
        return Err(ExecutionError::RequiresCycle(cycle));
    }

    let succeeded_asserted: BTreeSet<Iri> = vocab::tasks_with_outcome(graph, execution, Outcome::Succeeded)
        .into_iter()
        .collect();
    let failed_asserted: BTreeSet<Iri> = vocab::tasks_with_outcome(graph, execution, Outcome::Failed)
        .into_iter()
        .collect();
    let contradictions: BTreeSet<Iri> = succeeded_asserted.intersection(&failed_asserted).cloned().collect();
    let warnings = contradictions
        .iter()
        .map(|t| format!("{t} is asserted both succeeded and failed in {execution}; treating it as succeeded"))
        .collect();

    let succeeded_derived = if options.derive {
        derive_success(graph, &relevant, &succeeded_asserted)
    } else {
        succeeded_asserted.clone()
    };

    let mut ready = BTreeSet::new();
    let mut satisfied = BTreeMap::new();
    let mut blocked = BTreeMap::new();
    for t in &relevant {
        if succeeded_derived.contains(t) || failed_asserted.contains(t) {
            continue;
        }
        let reqs: BTreeSet<Iri> = vocab::requirements_of(graph, t).into_iter().collect();
        let unmet: BTreeSet<Iri> = reqs.difference(&succeeded_derived).cloned().collect();
        if unmet.is_empty() {
            ready.insert(t.clone());
            satisfied.insert(t.clone(), reqs);
        } else {
            blocked.insert(t.clone(), unmet);
        }
    }

    let view = ExecutionView {
        execution: execution.clone(),
        goals,
        relevant,
        succeeded_asserted,
        failed_asserted,
        succeeded_derived,
        ready,
        satisfied,
        blocked,
        contradictions,
        warnings,
    };
    debug_assert_eq!(view.check(), Ok(()));
    Ok(view)
}

/// Tasks ready in `next` but not in `previous`.
///
/// The reason given is the set of requirements completed since `previous`,
/// or all requirements when the task became ready for another reason.
pub fn ready_transitions(previous: &ExecutionView, next: &ExecutionView) -> Vec<ReadyEvent> {
    next.ready
        .difference(&previous.ready)
        .map(|task| {
            let reqs = next.satisfied.get(task).cloned().unwrap_or_default();
            let fresh: BTreeSet<Iri> = reqs.difference(&previous.succeeded_derived).cloned().collect();
            ReadyEvent {
                execution: next.execution.clone(),
                task: task.clone(),
                because: if fresh.is_empty() { reqs } else { fresh },
            }
        })
        .collect()
}
