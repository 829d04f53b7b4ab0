//! Executions tracked through the federation: starting them, recording
//! outcomes, computing their state and watching for tasks that become ready.

use std::collections::BTreeSet;
use std::time::Duration;

use chrono::{DateTime, SecondsFormat, Utc};
use knowhow_core::execution::{compute_view, ready_transitions, ExecutionError, ExecutionView, ReadyEvent, ViewOptions};
use knowhow_core::query::{PatternTerm, TriplePattern};
use knowhow_core::rdf::{Graph, Iri, Term};
use knowhow_core::vocab::{self, Outcome};
use serde::Serialize;

use crate::federation::{iri, Federation, FederationError, Report};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Federation(#[from] FederationError),
    #[error(transparent)]
    Execution(#[from] ExecutionError),
    #[error("no endpoint knows execution {0} (use --force to record the outcome anyway)")]
    UnknownExecution(Iri),
    #[error("invalid IRI: {0}")]
    Iri(String),
    #[error("{0} endpoint(s) did not answer")]
    Incomplete(usize),
    #[error("the poll interval must be at least one second")]
    Interval,
}

impl ExecError {
    pub fn is_federation_failure(&self) -> bool {
        matches!(self, ExecError::Federation(_))
    }
}

/// `base` + `execution_` + a random UUID.
pub fn mint_execution_iri(base: &Iri) -> Result<Iri, ExecError> {
    let value = format!("{}execution_{}", base.as_str(), uuid::Uuid::new_v4());
    Iri::new(value.clone()).map_err(|_| ExecError::Iri(value))
}

/// Mints an execution for `goal` and publishes its goal triple to `target`.
pub async fn start_execution(fed: &Federation, target: &str, base: &Iri, goal: &Iri) -> Result<Iri, ExecError> {
    fed.member(target)?;
    let execution = mint_execution_iri(base)?;
    let mut graph = Graph::new();
    vocab::add_goal(&mut graph, &execution, goal);
    fed.publish(target, &graph).await?;
    Ok(execution)
}

/// Whether any member holds a goal triple for `execution`.
pub async fn execution_exists(fed: &Federation, execution: &Iri) -> Result<bool, ExecError> {
    let (graph, _) = fed.fetch(
        &[pattern(execution, vocab::HAS_GOAL, PatternTerm::var("g"))],
    )
    .await?;
    Ok(!graph.is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PublishReceipt {
    pub endpoint: String,
    pub inserted: usize,
}

/// Publishes that `task` succeeded or failed in `execution`.
pub async fn assert_outcome(
    fed: &Federation,
    target: &str,
    execution: &Iri,
    task: &Iri,
    outcome: Outcome,
    force: bool,
) -> Result<PublishReceipt, ExecError> {
    fed.member(target)?;
    if !execution_exists(fed, execution).await? {
        if !force {
            return Err(ExecError::UnknownExecution(execution.clone()));
        }
        tracing::warn!("no endpoint knows execution {execution}; recording the outcome anyway");
    }
    let mut graph = Graph::new();
    vocab::add_outcome(&mut graph, task, execution, outcome);
    let inserted = fed.publish(target, &graph).await?;
    Ok(PublishReceipt {
        endpoint: target.to_string(),
        inserted,
    })
}

fn pattern(s: impl Into<PatternTerm>, p: &str, o: impl Into<PatternTerm>) -> TriplePattern {
    TriplePattern::new(s, iri(p), o).expect("IRI predicate")
}

/// The triples an execution view depends on: the whole process structure
/// plus the goal and outcome triples of `execution`.
pub async fn execution_graph(fed: &Federation, execution: &Iri) -> Result<(Graph, Report), FederationError> {
    let any = || PatternTerm::var("s");
    let obj = || PatternTerm::var("o");
    let mut graph_and_report = fed.fetch(
        &[
            pattern(any(), vocab::HAS_STEP, obj()),
            pattern(any(), vocab::HAS_METHOD, obj()),
            pattern(any(), vocab::REQUIRES, obj()),
            pattern(execution, vocab::HAS_GOAL, obj()),
            pattern(any(), vocab::SUCCEEDED_IN, execution),
            pattern(any(), vocab::SUCCEED_IN, execution),
            pattern(any(), vocab::FAILED_IN, execution),
        ],
    )
    .await?;
    vocab::normalize(&mut graph_and_report.0);
    Ok(graph_and_report)
}

/// The current state of `execution` across the federation.
pub async fn view(
    fed: &Federation,
    execution: &Iri,
    scope: Option<&Iri>,
    options: ViewOptions,
) -> Result<(ExecutionView, Report), ExecError> {
    let (graph, report) = execution_graph(fed, execution).await?;
    let view = compute_view(&graph, execution, scope, options)?;
    for w in &view.warnings {
        tracing::warn!("{w}");
    }
    Ok((view, report))
}

/// Other ways to accomplish `task`: its own methods, and the sibling methods
/// of any task it is a method of.
pub async fn alternatives(fed: &Federation, task: &Iri) -> Result<(Vec<Iri>, Report), ExecError> {
    let (graph, first) = fed.fetch(
        &[
            pattern(task, vocab::HAS_METHOD, PatternTerm::var("m")),
            pattern(PatternTerm::var("p"), vocab::HAS_METHOD, task),
        ],
    )
    .await?;
    let parents = vocab::method_of(&graph, task);
    let (siblings, second) = fed.fetch(
        &parents
            .iter()
            .map(|p| pattern(p, vocab::HAS_METHOD, PatternTerm::var("m")))
            .collect::<Vec<_>>(),
    )
    .await?;
    let mut out: BTreeSet<Iri> = vocab::methods_of(&graph, task).into_iter().collect();
    for p in &parents {
        out.extend(vocab::methods_of(&siblings, p));
    }
    out.remove(task);
    let mut out: Vec<Iri> = out.into_iter().collect();
    out.sort_by_cached_key(|i| Term::from(i).canonical());
    Ok((out, Report::merge([first, second])))
}

/// A ready event stamped with the time it was observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimedEvent {
    pub execution: Iri,
    pub task: Iri,
    pub because: BTreeSet<Iri>,
    pub at: String,
}

impl TimedEvent {
    pub fn new(event: ReadyEvent, at: DateTime<Utc>) -> Self {
        TimedEvent {
            execution: event.execution,
            task: event.task,
            because: event.because,
            at: at.to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

/// Polls one execution and reports tasks that became ready since the last
/// successful poll. The first poll only records a baseline, and a poll that
/// misses an endpoint fails without moving it.
#[derive(Debug)]
pub struct Watcher {
    execution: Iri,
    options: ViewOptions,
    previous: Option<ExecutionView>,
}

impl Watcher {
    pub fn new(execution: Iri, options: ViewOptions) -> Self {
        Watcher {
            execution,
            options,
            previous: None,
        }
    }

    pub async fn poll(&mut self, fed: &Federation) -> Result<Vec<ReadyEvent>, ExecError> {
        let (next, report) = view(fed, &self.execution, None, self.options).await?;
        if !report.is_complete() {
            // a partial view would make tasks leave and re-enter ready
            for f in &report.failed {
                tracing::warn!("{} did not answer: {}", f.endpoint, f.reason);
            }
            return Err(ExecError::Incomplete(report.failed.len()));
        }
        let events = match &self.previous {
            Some(prev) => ready_transitions(prev, &next),
            None => {
                tracing::info!("baseline for {} has {} ready task(s)", self.execution, next.ready.len());
                Vec::new()
            }
        };
        self.previous = Some(next);
        Ok(events)
    }
}

/// Polls every `interval` until `polls` polls have run (forever when
/// `None`), handing each event to `sink`. Failed polls are logged and
/// skipped.
pub async fn watch(
    fed: &Federation,
    execution: &Iri,
    interval: Duration,
    polls: Option<u64>,
    options: ViewOptions,
    mut sink: impl FnMut(TimedEvent),
) -> Result<(), ExecError> {
    if interval < Duration::from_secs(1) {
        return Err(ExecError::Interval);
    }
    watch_unchecked(fed, execution, interval, polls, options, &mut sink).await
}

pub(crate) async fn watch_unchecked(
    fed: &Federation,
    execution: &Iri,
    interval: Duration,
    polls: Option<u64>,
    options: ViewOptions,
    sink: &mut impl FnMut(TimedEvent),
) -> Result<(), ExecError> {
    let mut watcher = Watcher::new(execution.clone(), options);
    let mut ticker = tokio::time::interval(interval);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut done = 0u64;
    while polls.is_none_or(|n| done < n) {
        ticker.tick().await;
        done += 1;
        match watcher.poll(fed).await {
            Ok(events) => {
                let now = Utc::now();
                for e in events {
                    sink(TimedEvent::new(e, now));
                }
            }
            Err(e) => tracing::warn!("poll failed: {e}"),
        }
    }
    Ok(())
}
