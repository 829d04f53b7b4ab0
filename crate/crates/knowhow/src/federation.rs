//! Queries over several knowledge bases at once.
//!
//! In union mode the query goes to every endpoint unchanged and the row sets
//! are merged. In join mode every triple pattern is asked separately, the
//! matched triples are pooled, and the whole query is evaluated locally over
//! the pool, so patterns can match triples held by different endpoints.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use futures::stream::{FuturesUnordered, StreamExt};
use knowhow_core::query::{evaluate, keyword_query, BindingSet, PatternTerm, Query, QueryError, Solution, TriplePattern};
use knowhow_core::rdf::{serialize_turtle, Graph, Iri, Term, Triple};
use knowhow_core::vocab::{self, AnnotationRef};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::results::{self, ResultsDoc};
use crate::store::Store;

pub const DEFAULT_TIMEOUT_MS: u64 = 5000;
pub const DEFAULT_PARALLELISM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailurePolicy {
    /// An error from this endpoint aborts the whole call.
    Fail,
    /// An error is recorded and the call continues without this endpoint.
    #[default]
    Skip,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

/// One entry of a federation file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointDescriptor {
    pub name: String,
    #[serde(rename = "baseUrl")]
    pub base_url: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(rename = "failurePolicy", default)]
    pub failure_policy: FailurePolicy,
}

impl EndpointDescriptor {
    pub fn new(name: impl Into<String>, base_url: impl Into<String>) -> Self {
        EndpointDescriptor {
            name: name.into(),
            base_url: base_url.into(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            failure_policy: FailurePolicy::Skip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FederationError {
    #[error("invalid federation file: {0}")]
    Config(String),
    #[error("a federation needs at least one endpoint")]
    NoEndpoints,
    #[error("endpoint name `{0}` is used twice")]
    DuplicateName(String),
    #[error("no endpoint named `{0}`")]
    UnknownEndpoint(String),
    #[error("endpoint {endpoint} failed: {reason}")]
    EndpointFailed { endpoint: String, reason: String },
    #[error("all endpoints failed: {}", render_failures(.0))]
    AllFailed(Vec<EndpointFailure>),
    #[error("publishing to {endpoint} failed: {reason}")]
    Publish { endpoint: String, reason: String },
    #[error(transparent)]
    Query(#[from] QueryError),
}

fn render_failures(failures: &[EndpointFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("{} ({})", f.endpoint, f.reason))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Parses and checks a federation file.
pub fn parse_federation(text: &str) -> Result<Vec<EndpointDescriptor>, FederationError> {
    let endpoints: Vec<EndpointDescriptor> =
        serde_json::from_str(text).map_err(|e| FederationError::Config(e.to_string()))?;
    if endpoints.is_empty() {
        return Err(FederationError::NoEndpoints);
    }
    let mut names = BTreeSet::new();
    for e in &endpoints {
        if e.name.trim().is_empty() {
            return Err(FederationError::Config("endpoint name is empty".into()));
        }
        if !names.insert(e.name.as_str()) {
            return Err(FederationError::DuplicateName(e.name.clone()));
        }
        if e.timeout_ms == 0 {
            return Err(FederationError::Config(format!("{}: timeout_ms must be positive", e.name)));
        }
        if !(e.base_url.starts_with("http://") || e.base_url.starts_with("https://")) || Iri::new(&e.base_url).is_err() {
            return Err(FederationError::Config(format!(
                "{}: baseUrl `{}` is not an http(s) URL",
                e.name, e.base_url
            )));
        }
    }
    Ok(endpoints)
}

pub fn load_federation(path: &Path) -> Result<Vec<EndpointDescriptor>, FederationError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FederationError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_federation(&text)
}

/// Something that answers queries and accepts published triples.
#[async_trait]
pub trait KnowledgeBase: Send + Sync {
    fn name(&self) -> &str;

    fn failure_policy(&self) -> FailurePolicy;

    async fn select(&self, query: &Query) -> Result<BindingSet, String>;

    /// Publishes Turtle text; returns the number of new triples.
    async fn publish(&self, turtle: String) -> Result<usize, String>;
}

/// A remote endpoint speaking the `/sparql` and `/publish` protocol.
#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    descriptor: EndpointDescriptor,
    client: reqwest::Client,
}

impl HttpEndpoint {
    pub fn new(descriptor: EndpointDescriptor, client: reqwest::Client) -> Self {
        HttpEndpoint { descriptor, client }
    }

    fn url(&self, route: &str) -> String {
        format!("{}/{route}", self.descriptor.base_url.trim_end_matches('/'))
    }

    fn timeout(&self) -> Duration {
        Duration::from_millis(self.descriptor.timeout_ms)
    }
}

async fn error_text(response: reqwest::Response) -> String {
    let status = response.status();
    let body = response.text().await.unwrap_or_default();
    format!("HTTP {status}: {}", body.trim())
}

#[async_trait]
impl KnowledgeBase for HttpEndpoint {
    fn name(&self) -> &str {
        &self.descriptor.name
    }

    fn failure_policy(&self) -> FailurePolicy {
        self.descriptor.failure_policy
    }

    async fn select(&self, query: &Query) -> Result<BindingSet, String> {
        let text = query.to_sparql();
        let response = self
            .client
            .post(self.url("sparql"))
            .timeout(self.timeout())
            .header(reqwest::header::ACCEPT, results::CONTENT_TYPE)
            .form(&[("query", text.as_str())])
            .send()
            .await
            .map_err(|e| e.to_string())?;
        if !response.status().is_success() {
            return Err(error_text(response).await);
        }
        if response.headers().contains_key("x-truncated") {
            tracing::warn!("{}: result truncated by the endpoint row limit", self.name());
        }
        let body = response.text().await.map_err(|e| e.to_string())?;
        results::from_json(&body).map_err(|e| e.to_string())
    }

    async fn publish(&self, turtle: String) -> Result<usize, String> {
        let response = self
            .client
            .post(self.url("publish"))
            .timeout(self.timeout())
            .header(reqwest::header::CONTENT_TYPE, "text/turtle")
            .body(turtle)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        if !response.status().is_success() {
            return Err(error_text(response).await);
        }
        let text = response.text().await.map_err(|e| e.to_string())?;
        let body: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        body.get("inserted")
            .and_then(serde_json::Value::as_u64)
            .map(|n| n as usize)
            .ok_or_else(|| format!("unexpected publish response {body}"))
    }
}

/// An in-process knowledge base, optionally slowed down or switched off.
#[derive(Debug, Clone)]
pub struct LocalEndpoint {
    name: String,
    store: Arc<Store>,
    delay: Duration,
    policy: FailurePolicy,
    down: bool,
    read_only: bool,
}

impl LocalEndpoint {
    pub fn new(name: impl Into<String>, store: Arc<Store>) -> Self {
        LocalEndpoint {
            name: name.into(),
            store,
            delay: Duration::ZERO,
            policy: FailurePolicy::Skip,
            down: false,
            read_only: false,
        }
    }

    pub fn from_graph(name: impl Into<String>, graph: Graph) -> Self {
        LocalEndpoint::new(name, Arc::new(Store::in_memory(graph)))
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_policy(mut self, policy: FailurePolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Every request fails.
    pub fn down(mut self) -> Self {
        self.down = true;
        self
    }

    pub fn read_only(mut self) -> Self {
        self.read_only = true;
        self
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }
}

#[async_trait]
impl KnowledgeBase for LocalEndpoint {
    fn name(&self) -> &str {
        &self.name
    }

    fn failure_policy(&self) -> FailurePolicy {
        self.policy
    }

    async fn select(&self, query: &Query) -> Result<BindingSet, String> {
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        if self.down {
            return Err("endpoint is down".into());
        }
        Ok(self.store.query(query))
    }

    async fn publish(&self, turtle: String) -> Result<usize, String> {
        if self.down {
            return Err("endpoint is down".into());
        }
        if self.read_only {
            return Err("endpoint is read-only".into());
        }
        let graph = knowhow_core::rdf::parse_turtle(&turtle, None).map_err(|e| e.to_string())?;
        self.store.publish(graph).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Union,
    #[default]
    Join,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "union" => Ok(Mode::Union),
            "join" => Ok(Mode::Join),
            other => Err(format!("unknown mode `{other}` (expected union or join)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct EndpointFailure {
    pub endpoint: String,
    pub reason: String,
}

/// Which endpoints answered a federated call. Both lists are sorted by
/// endpoint name and never share a name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Report {
    pub responded: Vec<String>,
    pub failed: Vec<EndpointFailure>,
}

impl Report {
    pub fn is_complete(&self) -> bool {
        self.failed.is_empty()
    }

    /// Combines the reports of several calls: an endpoint counts as failed
    /// if it failed any of them.
    pub fn merge(reports: impl IntoIterator<Item = Report>) -> Report {
        let mut responded = BTreeSet::new();
        let mut failed: BTreeMap<String, String> = BTreeMap::new();
        for r in reports {
            responded.extend(r.responded);
            for f in r.failed {
                failed.entry(f.endpoint).or_insert(f.reason);
            }
        }
        Report {
            responded: responded.into_iter().filter(|n| !failed.contains_key(n)).collect(),
            failed: failed
                .into_iter()
                .map(|(endpoint, reason)| EndpointFailure { endpoint, reason })
                .collect(),
        }
    }
}

/// Rows integrated from several endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FederatedResult {
    pub bindings: BindingSet,
    pub report: Report,
}

/// The results document with `responded` and `failed` appended.
impl Serialize for FederatedResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let doc = serde_json::to_value(ResultsDoc::new(&self.bindings)).map_err(serde::ser::Error::custom)?;
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("head", &doc["head"])?;
        map.serialize_entry("results", &doc["results"])?;
        map.serialize_entry("responded", &self.report.responded)?;
        map.serialize_entry("failed", &self.report.failed)?;
        map.end()
    }
}

/// Everything directly connected to one entity.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Neighborhood {
    pub entity: Option<Iri>,
    pub steps: Vec<Iri>,
    pub part_of: Vec<Iri>,
    pub requires: Vec<Iri>,
    pub required_by: Vec<Iri>,
    pub methods: Vec<Iri>,
    pub method_of: Vec<Iri>,
    pub labels: Vec<String>,
    pub annotations: Vec<AnnotationRef>,
}

impl Neighborhood {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
            && self.part_of.is_empty()
            && self.requires.is_empty()
            && self.required_by.is_empty()
            && self.methods.is_empty()
            && self.method_of.is_empty()
            && self.labels.is_empty()
            && self.annotations.is_empty()
    }
}

/// The neighborhood of `entity` in a single graph.
pub fn neighborhood(graph: &Graph, entity: &Iri) -> Neighborhood {
    Neighborhood {
        entity: Some(entity.clone()),
        steps: vocab::steps_of(graph, entity),
        part_of: vocab::parents_of(graph, entity),
        requires: vocab::requirements_of(graph, entity),
        required_by: vocab::required_by(graph, entity),
        methods: vocab::methods_of(graph, entity),
        method_of: vocab::method_of(graph, entity),
        labels: vocab::labels_of(graph, entity),
        annotations: vocab::annotations_of(graph, entity),
    }
}

/// A fixed set of knowledge bases.
#[derive(Clone)]
pub struct Federation {
    members: Vec<Arc<dyn KnowledgeBase>>,
    parallelism: usize,
}

impl std::fmt::Debug for Federation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.members.iter().map(|m| m.name())).finish()
    }
}

impl Federation {
    pub fn new(members: Vec<Arc<dyn KnowledgeBase>>) -> Result<Self, FederationError> {
        if members.is_empty() {
            return Err(FederationError::NoEndpoints);
        }
        let mut names = BTreeSet::new();
        for m in &members {
            if !names.insert(m.name().to_string()) {
                return Err(FederationError::DuplicateName(m.name().to_string()));
            }
        }
        Ok(Federation {
            members,
            parallelism: DEFAULT_PARALLELISM,
        })
    }

    /// HTTP clients for every descriptor.
    pub fn from_descriptors(descriptors: &[EndpointDescriptor]) -> Result<Self, FederationError> {
        let client = reqwest::Client::new();
        Federation::new(
            descriptors
                .iter()
                .map(|d| Arc::new(HttpEndpoint::new(d.clone(), client.clone())) as Arc<dyn KnowledgeBase>)
                .collect(),
        )
    }

    pub fn with_parallelism(mut self, n: usize) -> Self {
        self.parallelism = n.max(1);
        self
    }

    pub fn members(&self) -> &[Arc<dyn KnowledgeBase>] {
        &self.members
    }

    pub fn member(&self, name: &str) -> Result<&Arc<dyn KnowledgeBase>, FederationError> {
        self.members
            .iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| FederationError::UnknownEndpoint(name.to_string()))
    }

    /// Sends every query to every member, at most `parallelism` requests at
    /// a time. Returns the answers per query (in member order, failures
    /// dropped) and the report.
    async fn dispatch(&self, queries: &[Query]) -> Result<(Vec<Vec<BindingSet>>, Report), FederationError> {
        let jobs: Vec<(usize, usize)> = (0..queries.len())
            .flat_map(|q| (0..self.members.len()).map(move |m| (q, m)))
            .collect();
        let mut answers: Vec<Vec<Option<BindingSet>>> = vec![vec![None; self.members.len()]; queries.len()];
        let mut errors: BTreeMap<usize, String> = BTreeMap::new();

        let mut pending = jobs.into_iter();
        let mut running = FuturesUnordered::new();
        let start = |(q, m): (usize, usize)| {
            let member = self.members[m].clone();
            let query = &queries[q];
            async move { ((q, m), member.select(query).await) }
        };
        for job in pending.by_ref().take(self.parallelism) {
            running.push(start(job));
        }
        while let Some(((q, m), outcome)) = running.next().await {
            match outcome {
                Ok(set) => answers[q][m] = Some(set),
                Err(reason) => {
                    let member = &self.members[m];
                    tracing::warn!("{}: {reason}", member.name());
                    if member.failure_policy() == FailurePolicy::Fail {
                        return Err(FederationError::EndpointFailed {
                            endpoint: member.name().to_string(),
                            reason,
                        });
                    }
                    errors.entry(m).or_insert(reason);
                }
            }
            if let Some(job) = pending.next() {
                running.push(start(job));
            }
        }

        let mut report = Report::default();
        for (m, member) in self.members.iter().enumerate() {
            match errors.get(&m) {
                Some(reason) => report.failed.push(EndpointFailure {
                    endpoint: member.name().to_string(),
                    reason: reason.clone(),
                }),
                None => report.responded.push(member.name().to_string()),
            }
        }
        report.responded.sort();
        report.failed.sort();
        if report.responded.is_empty() {
            return Err(FederationError::AllFailed(report.failed));
        }
        // an endpoint that failed any query contributes nothing
        let answers = answers
            .into_iter()
            .map(|per_member| {
                per_member
                    .into_iter()
                    .enumerate()
                    .filter(|(m, _)| !errors.contains_key(m))
                    .filter_map(|(_, a)| a)
                    .collect()
            })
            .collect();
        Ok((answers, report))
    }

    pub async fn query(&self, query: &Query, mode: Mode) -> Result<FederatedResult, FederationError> {
        query.validate()?;
        match mode {
            Mode::Union => self.union_query(query).await,
            Mode::Join if query.patterns.is_empty() => self.union_query(query).await,
            Mode::Join => {
                let one_pattern: Vec<Query> = query
                    .patterns
                    .iter()
                    .map(|p| Query::select_all(vec![p.clone()]))
                    .collect();
                let (answers, report) = self.dispatch(&one_pattern).await?;
                let mut pool = Graph::new();
                for (pattern, sets) in query.patterns.iter().zip(&answers) {
                    for row in sets.iter().flat_map(|s| &s.rows) {
                        if let Some(t) = instantiate(pattern, row) {
                            pool.insert(t);
                        }
                    }
                }
                Ok(FederatedResult {
                    bindings: evaluate(query, &pool),
                    report,
                })
            }
        }
    }

    async fn union_query(&self, query: &Query) -> Result<FederatedResult, FederationError> {
        let (mut answers, report) = self.dispatch(std::slice::from_ref(query)).await?;
        let mut bindings = BindingSet::new(query.result_variables());
        for set in answers.pop().unwrap_or_default() {
            bindings.rows.extend(set.rows);
        }
        bindings.sort_canonical();
        bindings.dedup();
        Ok(FederatedResult { bindings, report })
    }

    /// Every triple matching any of `patterns` on any member.
    pub async fn fetch(&self, patterns: &[TriplePattern]) -> Result<(Graph, Report), FederationError> {
        let queries: Vec<Query> = patterns.iter().map(|p| Query::select_all(vec![p.clone()])).collect();
        if queries.is_empty() {
            return Ok((Graph::new(), Report::default()));
        }
        let (answers, report) = self.dispatch(&queries).await?;
        let mut graph = Graph::new();
        for (pattern, sets) in patterns.iter().zip(&answers) {
            for row in sets.iter().flat_map(|s| &s.rows) {
                if let Some(t) = instantiate(pattern, row) {
                    graph.insert(t);
                }
            }
        }
        Ok((graph, report))
    }

    /// Entities whose label contains every keyword, one row per entity.
    pub async fn search<S: AsRef<str>>(&self, keywords: &[S]) -> Result<FederatedResult, FederationError> {
        let query = keyword_query(keywords)?;
        let mut result = self.union_query(&query).await?;
        let mut seen = BTreeSet::new();
        // rows are canonically sorted, so the first label kept is the smallest
        result
            .bindings
            .rows
            .retain(|row| row.get("entity").is_none_or(|e| seen.insert(e.clone())));
        Ok(result)
    }

    /// The neighborhood of `entity` across the federation.
    pub async fn explore(&self, entity: &Iri) -> Result<(Neighborhood, Report), FederationError> {
        let e = PatternTerm::from(entity);
        let (mut graph, first) = self
            .fetch(&[
                TriplePattern::new(e.clone(), PatternTerm::var("p"), PatternTerm::var("o"))?,
                TriplePattern::new(PatternTerm::var("s"), PatternTerm::var("p"), e)?,
            ])
            .await?;
        let mut reports = vec![first];

        // annotation -> target -> selector, one hop per round
        let mut frontier: BTreeSet<Iri> = graph
            .subjects(&iri(vocab::OA_HAS_BODY), &entity.into())
            .filter_map(Term::as_iri)
            .cloned()
            .collect();
        let mut expanded = BTreeSet::from([entity.clone()]);
        let links = [vocab::OA_HAS_TARGET, vocab::OA_HAS_SELECTOR];
        for _ in 0..3 {
            frontier.retain(|n| !expanded.contains(n));
            if frontier.is_empty() {
                break;
            }
            let patterns = frontier
                .iter()
                .map(|n| TriplePattern::new(n, PatternTerm::var("p"), PatternTerm::var("o")))
                .collect::<Result<Vec<_>, _>>()?;
            let (more, report) = self.fetch(&patterns).await?;
            reports.push(report);
            let next: BTreeSet<Iri> = frontier
                .iter()
                .flat_map(|n| {
                    links
                        .iter()
                        .flat_map(|l| more.objects(&n.into(), &iri(l)).filter_map(Term::as_iri).cloned().collect::<Vec<_>>())
                })
                .collect();
            expanded.extend(std::mem::take(&mut frontier));
            graph.extend_from(&more);
            frontier = next;
        }
        Ok((neighborhood(&graph, entity), Report::merge(reports)))
    }

    /// Steps of `task` without a success assertion in `execution` anywhere
    /// in the federation.
    pub async fn incomplete_steps(&self, task: &Iri, execution: &Iri) -> Result<(Vec<Iri>, Report), FederationError> {
        let steps = Query::select(
            ["step"],
            vec![TriplePattern::new(task, iri(vocab::HAS_STEP), PatternTerm::var("step"))?],
        );
        let done = Query::select(
            ["step"],
            vec![TriplePattern::new(PatternTerm::var("step"), iri(vocab::SUCCEEDED_IN), execution)?],
        );
        let legacy = Query::select(
            ["step"],
            vec![TriplePattern::new(PatternTerm::var("step"), iri(vocab::SUCCEED_IN), execution)?],
        );
        let (steps, done, legacy) = futures::try_join!(
            self.union_query(&steps),
            self.union_query(&done),
            self.union_query(&legacy)
        )?;
        let finished: BTreeSet<&Term> = done.bindings.column("step").chain(legacy.bindings.column("step")).collect();
        let remaining = steps
            .bindings
            .column("step")
            .filter(|s| !finished.contains(s))
            .filter_map(Term::as_iri)
            .cloned()
            .collect();
        Ok((remaining, Report::merge([steps.report, done.report, legacy.report])))
    }

    /// Publishes `graph` to the member called `target`.
    pub async fn publish(&self, target: &str, graph: &Graph) -> Result<usize, FederationError> {
        let member = self.member(target)?;
        member
            .publish(serialize_turtle(graph))
            .await
            .map_err(|reason| FederationError::Publish {
                endpoint: target.to_string(),
                reason,
            })
    }
}

pub(crate) fn iri(value: &str) -> Iri {
    Iri::new(value).expect("vocabulary IRI")
}

/// The triple that `row` matched for `pattern`.
fn instantiate(pattern: &TriplePattern, row: &Solution) -> Option<Triple> {
    let value = |p: &PatternTerm| match p {
        PatternTerm::Term(t) => Some(t.clone()),
        PatternTerm::Var(v) => row.get(v).cloned(),
    };
    Triple::new(value(&pattern.subject)?, value(&pattern.predicate)?, value(&pattern.object)?).ok()
}
