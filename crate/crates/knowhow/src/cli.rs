//! The `knowhow` command line.

use std::io::Read as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use knowhow_core::execution::{ExecutionView, ViewOptions};
use knowhow_core::extraction::{ExtractOptions, MintingPolicy};
use knowhow_core::query::{parse_query, BindingSet};
use knowhow_core::rdf::{ns, parse_turtle, Iri, PrefixMap, Term};
use knowhow_core::vocab::Outcome;
use serde::Serialize;

use crate::corpus;
use crate::endpoint::{self, Endpoint, EndpointConfig};
use crate::exec::{self, ExecError};
use crate::federation::{load_federation, Federation, FederationError, Mode, Neighborhood, Report};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARTIAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FEDERATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "knowhow", version, about = "Extract, serve, query and track community know-how graphs")]
pub struct Cli {
    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(flatten)]
    pub config: CliConfig,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CliConfig {
    /// Federation file: a JSON list of endpoints.
    #[arg(long, global = true, env = "KNOWHOW_FEDERATION")]
    pub federation: Option<PathBuf>,

    /// Endpoint that receives published triples (default: the first one).
    #[arg(long, global = true, env = "KNOWHOW_PUBLISH_TARGET")]
    pub target: Option<String>,

    /// Namespace for minted IRIs.
    #[arg(long = "base-ns", global = true, env = "KNOWHOW_BASE_NS", default_value = ns::EX)]
    pub base_ns: String,

    #[arg(long, global = true, value_enum, env = "KNOWHOW_FORMAT", default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryMode {
    Union,
    Join,
}

impl From<QueryMode> for Mode {
    fn from(m: QueryMode) -> Mode {
        match m {
            QueryMode::Union => Mode::Union,
            QueryMode::Join => Mode::Join,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a directory of .json/.html articles into Turtle files.
    Extract {
        input: PathBuf,
        output: PathBuf,
        /// Do not chain consecutive steps with prohow:requires.
        #[arg(long)]
        no_sequential_requires: bool,
        /// Also write the union of all articles to this file.
        #[arg(long, value_name = "FILE")]
        merged: Option<PathBuf>,
        /// Use a hash of the source id in minted IRIs.
        #[arg(long)]
        source_hash: bool,
    },
    /// Run a knowledge-base endpoint until interrupted.
    Serve {
        #[arg(long, env = "KNOWHOW_BIND", default_value = "127.0.0.1:8080")]
        bind: String,
        /// Turtle file holding the store; created on first publish.
        #[arg(long, env = "KNOWHOW_DATA")]
        data: Option<PathBuf>,
        #[arg(long)]
        read_only: bool,
        #[arg(long, default_value_t = endpoint::DEFAULT_MAX_ROWS)]
        max_rows: usize,
    },
    /// Find entities whose label contains every keyword.
    Search {
        #[arg(required = true)]
        keywords: Vec<String>,
    },
    /// Show everything directly connected to an entity.
    Explore { entity: String },
    /// Run a query over the federation (`-` reads it from stdin).
    Query {
        query: String,
        #[arg(long, value_enum, default_value = "join")]
        mode: QueryMode,
    },
    /// Steps of a task not yet completed in an execution.
    Incomplete { task: String, execution: String },
    /// Publish a Turtle file to the publish target.
    Publish { file: PathBuf },
    /// Start and track executions.
    #[command(subcommand)]
    Exec(ExecCommand),
}

#[derive(Debug, Subcommand)]
pub enum ExecCommand {
    /// Start an execution with the given goal; prints its IRI.
    Start { goal: String },
    /// Record that a task succeeded in an execution.
    Succeed {
        execution: String,
        task: String,
        #[arg(long)]
        force: bool,
    },
    /// Record that a task failed in an execution and list alternatives.
    Fail {
        execution: String,
        task: String,
        #[arg(long)]
        force: bool,
    },
    /// Show goals, finished, ready and blocked tasks.
    Status {
        execution: String,
        /// Only consider tasks reachable from this one.
        #[arg(long)]
        scope: Option<String>,
        /// Count asserted successes only.
        #[arg(long)]
        no_derive: bool,
    },
    /// Print a line whenever a task becomes ready.
    Watch {
        execution: String,
        /// Seconds between polls.
        #[arg(long, default_value_t = 5)]
        interval: u64,
        /// Stop after this many polls.
        #[arg(long)]
        polls: Option<u64>,
        #[arg(long)]
        no_derive: bool,
    },
    /// Other methods for a task.
    Alternatives { task: String },
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PARTIAL,
            message: message.into(),
        }
    }
}

impl From<FederationError> for CliError {
    fn from(e: FederationError) -> Self {
        let code = match e {
            FederationError::EndpointFailed { .. } | FederationError::AllFailed(_) | FederationError::Publish { .. } => {
                EXIT_FEDERATION
            }
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::Federation(f) => f.into(),
            ExecError::Interval => CliError::usage(e.to_string()),
            other => CliError::runtime(other.to_string()),
        }
    }
}

/// Reads an IRI given as `<...>`, `prefix:local` or a bare absolute IRI.
pub fn parse_iri_arg(text: &str) -> Result<Iri, CliError> {
    let text = text.trim();
    let bad = |e: &dyn std::fmt::Display| CliError::usage(format!("`{text}` is not an IRI: {e}"));
    if let Some(inner) = text.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        return Iri::new(inner).map_err(|e| bad(&e));
    }
    if text.contains("://") || text.starts_with("urn:") {
        return Iri::new(text).map_err(|e| bad(&e));
    }
    PrefixMap::default().expand(text).map_err(|e| bad(&e))
}

fn compact(iri: &Iri) -> String {
    PrefixMap::default().compact(iri).unwrap_or_else(|| format!("<{}>", iri.as_str()))
}

fn render_term(term: &Term) -> String {
    match term {
        Term::Iri(i) => compact(i),
        other => other.to_string(),
    }
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

/// Warns about endpoints that did not answer and turns them into exit 1.
fn finish(report: &Report) -> u8 {
    for f in &report.failed {
        eprintln!("warning: endpoint {} did not answer: {}", f.endpoint, f.reason);
    }
    if report.is_complete() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

struct Context<'a> {
    config: &'a CliConfig,
}

impl Context<'_> {
    fn federation(&self) -> Result<Federation, CliError> {
        let path = self
            .config
            .federation
            .as_ref()
            .ok_or_else(|| CliError::usage("this command needs --federation <FILE> (or KNOWHOW_FEDERATION)"))?;
        let descriptors = load_federation(path)?;
        if let Some(t) = &self.config.target {
            if !descriptors.iter().any(|d| &d.name == t) {
                return Err(CliError::usage(format!("publish target `{t}` is not in {}", path.display())));
            }
        }
        Ok(Federation::from_descriptors(&descriptors)?)
    }

    fn target(&self, fed: &Federation) -> String {
        self.config
            .target
            .clone()
            .unwrap_or_else(|| fed.members()[0].name().to_string())
    }

    fn base(&self) -> Result<Iri, CliError> {
        let base = Iri::new(self.config.base_ns.as_str()).map_err(|e| CliError::usage(format!("--base-ns: {e}")))?;
        if !(base.as_str().ends_with('/') || base.as_str().ends_with('#')) {
            return Err(CliError::usage("--base-ns must end with `/` or `#`"));
        }
        Ok(base)
    }

    fn json(&self) -> bool {
        self.config.format == OutputFormat::Json
    }
}

/// Runs one command and returns its exit code.
pub async fn run(cli: Cli) -> Result<u8, CliError> {
    let ctx = Context { config: &cli.config };
    match cli.command {
        Command::Extract {
            input,
            output,
            no_sequential_requires,
            merged,
            source_hash,
        } => extract(&ctx, input, output, no_sequential_requires, merged, source_hash),
        Command::Serve {
            bind,
            data,
            read_only,
            max_rows,
        } => {
            serve(EndpointConfig {
                bind,
                data_file: data,
                read_only,
                max_query_rows: max_rows,
                federation_file: cli.config.federation.clone(),
            })
            .await
        }
        Command::Search { keywords } => {
            let fed = ctx.federation()?;
            let result = fed.search(&keywords).await?;
            if ctx.json() {
                print_json(&result);
            } else {
                for row in &result.bindings.rows {
                    let entity = row.get("entity").map(render_term).unwrap_or_default();
                    let label = row.get("label").and_then(Term::str_value).unwrap_or_default();
                    println!("{entity}\t{label}");
                }
            }
            Ok(finish(&result.report))
        }
        Command::Explore { entity } => {
            let entity = parse_iri_arg(&entity)?;
            let fed = ctx.federation()?;
            let (n, report) = fed.explore(&entity).await?;
            if ctx.json() {
                print_json(&n);
            } else {
                print_neighborhood(&n);
            }
            Ok(finish(&report))
        }
        Command::Query { query, mode } => {
            let text = if query == "-" {
                let mut buf = String::new();
                std::io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| CliError::runtime(format!("cannot read the query: {e}")))?;
                buf
            } else {
                query
            };
            let query = parse_query(&text).map_err(|e| CliError::usage(e.to_string()))?;
            let fed = ctx.federation()?;
            let result = fed.query(&query, mode.into()).await?;
            if ctx.json() {
                print_json(&result);
            } else {
                print_table(&result.bindings);
            }
            Ok(finish(&result.report))
        }
        Command::Incomplete { task, execution } => {
            let task = parse_iri_arg(&task)?;
            let execution = parse_iri_arg(&execution)?;
            let fed = ctx.federation()?;
            let (steps, report) = fed.incomplete_steps(&task, &execution).await?;
            if ctx.json() {
                print_json(&serde_json::json!({ "steps": steps, "responded": report.responded, "failed": report.failed }));
            } else {
                for s in &steps {
                    println!("{}", compact(s));
                }
            }
            Ok(finish(&report))
        }
        Command::Publish { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", file.display())))?;
            let graph = parse_turtle(&text, None).map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
            let fed = ctx.federation()?;
            let target = ctx.target(&fed);
            let inserted = fed.publish(&target, &graph).await?;
            print_receipt(&ctx, &exec::PublishReceipt {
                endpoint: target,
                inserted,
            });
            Ok(EXIT_OK)
        }
        Command::Exec(cmd) => exec_command(&ctx, cmd).await,
    }
}

fn extract(
    ctx: &Context<'_>,
    input: PathBuf,
    output: PathBuf,
    no_sequential_requires: bool,
    merged: Option<PathBuf>,
    source_hash: bool,
) -> Result<u8, CliError> {
    let policy = MintingPolicy::new(ctx.base()?)
        .map_err(|e| CliError::usage(e.to_string()))?
        .with_source_hash(source_hash);
    let options = ExtractOptions::new(policy).sequential_requires(!no_sequential_requires);
    let report = corpus::extract_dir(&input, &output, &options, merged.as_deref())
        .map_err(|e| CliError::runtime(format!("{}: {e}", input.display())))?;
    for (path, reason) in &report.failures {
        eprintln!("error: {}: {reason}", path.display());
    }
    if ctx.json() {
        print_json(&serde_json::json!({
            "written": report.written,
            "failed": report.failures.iter().map(|(p, r)| serde_json::json!({"file": p, "reason": r})).collect::<Vec<_>>(),
            "merged": report.merged,
            "triples": report.triples,
        }));
    } else {
        eprintln!(
            "extracted {} article(s), {} triple(s), {} failure(s)",
            report.written.len(),
            report.triples,
            report.failures.len()
        );
        for p in &report.written {
            println!("{}", p.display());
        }
    }
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_PARTIAL })
}

async fn serve(config: EndpointConfig) -> Result<u8, CliError> {
    let ep = Endpoint::from_config(&config).map_err(|e| CliError::runtime(e.to_string()))?;
    let running = endpoint::spawn(Arc::new(ep), &config.bind)
        .await
        .map_err(|e| CliError::runtime(format!("cannot bind {}: {e}", config.bind)))?;
    println!("listening on {}", running.url());
    tracing::info!("serving {} triple(s)", running.endpoint.store.len());
    shutdown_signal().await;
    running.stop().await.map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(EXIT_OK)
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

fn print_receipt(ctx: &Context<'_>, receipt: &exec::PublishReceipt) {
    if ctx.json() {
        print_json(receipt);
    } else {
        println!("inserted {} triple(s) into {}", receipt.inserted, receipt.endpoint);
    }
}

async fn exec_command(ctx: &Context<'_>, cmd: ExecCommand) -> Result<u8, CliError> {
    match cmd {
        ExecCommand::Start { goal } => {
            let goal = parse_iri_arg(&goal)?;
            let base = ctx.base()?;
            let fed = ctx.federation()?;
            let execution = exec::start_execution(&fed, &ctx.target(&fed), &base, &goal).await?;
            if ctx.json() {
                print_json(&serde_json::json!({ "execution": execution, "goal": goal }));
            } else {
                println!("{}", execution.as_str());
            }
            Ok(EXIT_OK)
        }
        ExecCommand::Succeed { execution, task, force } => {
            outcome(ctx, &execution, &task, Outcome::Succeeded, force).await
        }
        ExecCommand::Fail { execution, task, force } => outcome(ctx, &execution, &task, Outcome::Failed, force).await,
        ExecCommand::Status {
            execution,
            scope,
            no_derive,
        } => {
            let execution = parse_iri_arg(&execution)?;
            let scope = scope.as_deref().map(parse_iri_arg).transpose()?;
            let fed = ctx.federation()?;
            let (view, report) = exec::view(&fed, &execution, scope.as_ref(), ViewOptions { derive: !no_derive }).await?;
            if ctx.json() {
                print_json(&view);
            } else {
                print_view(&view);
            }
            Ok(finish(&report))
        }
        ExecCommand::Watch {
            execution,
            interval,
            polls,
            no_derive,
        } => {
            let execution = parse_iri_arg(&execution)?;
            let fed = ctx.federation()?;
            let json = ctx.json();
            exec::watch(
                &fed,
                &execution,
                Duration::from_secs(interval),
                polls,
                ViewOptions { derive: !no_derive },
                |event| {
                    if json {
                        println!("{}", event.to_json_line());
                    } else {
                        let because: Vec<String> = event.because.iter().map(compact).collect();
                        println!("{} ready: {} (after {})", event.at, compact(&event.task), because.join(", "));
                    }
                },
            )
            .await?;
            Ok(EXIT_OK)
        }
        ExecCommand::Alternatives { task } => {
            let task = parse_iri_arg(&task)?;
            let fed = ctx.federation()?;
            let (alts, report) = exec::alternatives(&fed, &task).await?;
            print_alternatives(ctx, &alts);
            Ok(finish(&report))
        }
    }
}

async fn outcome(ctx: &Context<'_>, execution: &str, task: &str, outcome: Outcome, force: bool) -> Result<u8, CliError> {
    let execution = parse_iri_arg(execution)?;
    let task = parse_iri_arg(task)?;
    let fed = ctx.federation()?;
    let receipt = exec::assert_outcome(&fed, &ctx.target(&fed), &execution, &task, outcome, force).await?;
    if outcome == Outcome::Failed {
        // a failure is a hint to try another way
        let (alts, _) = exec::alternatives(&fed, &task).await?;
        if ctx.json() {
            print_json(&serde_json::json!({
                "endpoint": receipt.endpoint,
                "inserted": receipt.inserted,
                "alternatives": alts,
            }));
        } else {
            print_receipt(ctx, &receipt);
            print_alternatives(ctx, &alts);
        }
    } else {
        print_receipt(ctx, &receipt);
    }
    Ok(EXIT_OK)
}

fn print_alternatives(ctx: &Context<'_>, alts: &[Iri]) {
    if ctx.json() {
        print_json(&serde_json::json!({ "alternatives": alts }));
        return;
    }
    if alts.is_empty() {
        println!("no alternative methods known");
    }
    for a in alts {
        println!("try instead: {}", compact(a));
    }
}

fn print_table(set: &BindingSet) {
    println!("{}", set.vars.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join("\t"));
    for row in &set.rows {
        let cells: Vec<String> = set.vars.iter().map(|v| row.get(v).map(render_term).unwrap_or_default()).collect();
        println!("{}", cells.join("\t"));
    }
}

fn print_neighborhood(n: &Neighborhood) {
    if let Some(e) = &n.entity {
        println!("{}", compact(e));
    }
    for label in &n.labels {
        println!("  label: {label}");
    }
    let sections: [(&str, &[Iri]); 6] = [
        ("steps", &n.steps),
        ("part of", &n.part_of),
        ("requires", &n.requires),
        ("required by", &n.required_by),
        ("methods", &n.methods),
        ("method of", &n.method_of),
    ];
    for (name, items) in sections {
        println!("  {name}:");
        for i in items {
            println!("    {}", compact(i));
        }
    }
    println!("  annotations:");
    for a in &n.annotations {
        match a.selector {
            Some(sel) => println!("    {} [{}..{}]", a.resource.as_str(), sel.start, sel.end),
            None => println!("    {}", a.resource.as_str()),
        }
    }
}

fn print_view(v: &ExecutionView) {
    let list = |items: &mut dyn Iterator<Item = &Iri>| items.map(compact).collect::<Vec<_>>().join(", ");
    println!("execution {}", v.execution.as_str());
    println!("goals: {}", list(&mut v.goals.iter()));
    let done: Vec<String> = v
        .succeeded_derived
        .iter()
        .map(|t| {
            if v.succeeded_asserted.contains(t) {
                compact(t)
            } else {
                format!("{} (derived)", compact(t))
            }
        })
        .collect();
    println!("done: {}", done.join(", "));
    println!("failed: {}", list(&mut v.failed_asserted.iter()));
    println!("ready: {}", list(&mut v.ready.iter()));
    println!("blocked:");
    for (t, unmet) in &v.blocked {
        println!("  {} waiting for {}", compact(t), list(&mut unmet.iter()));
    }
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
}
