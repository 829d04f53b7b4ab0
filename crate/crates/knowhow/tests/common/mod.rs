#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Output, Stdio};

use serde_json::Value;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_knowhow"));
    for var in [
        "KNOWHOW_FEDERATION",
        "KNOWHOW_PUBLISH_TARGET",
        "KNOWHOW_BASE_NS",
        "KNOWHOW_FORMAT",
        "KNOWHOW_BIND",
        "KNOWHOW_DATA",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

/// `knowhow serve` running as a child process on an ephemeral port.
pub struct Server {
    pub child: Child,
    pub url: String,
    _stdout: BufReader<ChildStdout>,
}

impl Server {
    pub fn start(data: &Path, extra: &[&str]) -> Server {
        let mut child = bin()
            .args(["serve", "--bind", "127.0.0.1:0", "--data"])
            .arg(data)
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("spawn knowhow serve");
        let mut stdout = BufReader::new(child.stdout.take().unwrap());
        let mut line = String::new();
        stdout.read_line(&mut line).expect("read listening line");
        let url = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected first line {line:?}"))
            .to_string();
        Server {
            child,
            url,
            _stdout: stdout,
        }
    }

    /// SIGKILL, no chance to clean up.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Writes a federation file naming each server.
pub fn federation_file(dir: &Path, members: &[(&str, &str)]) -> PathBuf {
    let entries: Vec<Value> = members
        .iter()
        .map(|(name, url)| serde_json::json!({"name": name, "baseUrl": url, "timeout_ms": 3000, "failurePolicy": "skip"}))
        .collect();
    let path = dir.join("federation.json");
    std::fs::write(&path, serde_json::to_string_pretty(&entries).unwrap()).unwrap();
    path
}

pub async fn health(client: &reqwest::Client, url: &str) -> u64 {
    let body: Value = serde_json::from_str(
        &client
            .get(format!("{url}/health"))
            .send()
            .await
            .unwrap()
            .text()
            .await
            .unwrap(),
    )
    .unwrap();
    body["tripleCount"].as_u64().unwrap()
}

/// Checks `doc` against the SPARQL 1.1 query results JSON format: a head
/// with a string `vars` array and a bindings array whose objects bind only
/// head variables to well-formed RDF terms.
pub fn validate_results(doc: &Value) -> Result<(), String> {
    let obj = doc.as_object().ok_or("document is not an object")?;
    let head = obj.get("head").and_then(Value::as_object).ok_or("missing head object")?;
    let vars: Vec<&str> = head
        .get("vars")
        .and_then(Value::as_array)
        .ok_or("head.vars is not an array")?
        .iter()
        .map(|v| v.as_str().ok_or("non-string variable"))
        .collect::<Result<_, _>>()?;
    for (k, _) in head {
        if k != "vars" && k != "link" {
            return Err(format!("unexpected head member {k}"));
        }
    }
    let bindings = obj
        .get("results")
        .and_then(Value::as_object)
        .and_then(|r| r.get("bindings"))
        .and_then(Value::as_array)
        .ok_or("missing results.bindings array")?;
    for row in bindings {
        let row = row.as_object().ok_or("binding row is not an object")?;
        for (var, term) in row {
            if !vars.contains(&var.as_str()) {
                return Err(format!("row binds ?{var} which is not in head.vars"));
            }
            let term = term.as_object().ok_or("term is not an object")?;
            let kind = term.get("type").and_then(Value::as_str).ok_or("term without type")?;
            term.get("value").and_then(Value::as_str).ok_or("term without string value")?;
            for key in term.keys() {
                match key.as_str() {
                    "type" | "value" => {}
                    "xml:lang" | "datatype" if kind == "literal" => {}
                    other => return Err(format!("unexpected member {other} on a {kind} term")),
                }
            }
            if !matches!(kind, "uri" | "literal" | "bnode") {
                return Err(format!("unknown term type {kind}"));
            }
            if term.contains_key("xml:lang") && term.contains_key("datatype") {
                return Err("literal with both xml:lang and datatype".into());
            }
            for key in ["xml:lang", "datatype"] {
                if let Some(v) = term.get(key) {
                    v.as_str().ok_or(format!("{key} is not a string"))?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_turtle(path: &Path) -> knowhow_core::rdf::Graph {
    knowhow_core::rdf::parse_turtle(&std::fs::read_to_string(path).unwrap(), None).unwrap()
}

/// The conference fixture, one file per endpoint.
pub const CONFERENCE: [&str; 3] = ["organiser", "venues", "catering"];

/// Three `knowhow serve` processes loaded with the conference fixture,
/// plus a federation file naming them.
pub struct Conference {
    pub dir: tempfile::TempDir,
    pub servers: Vec<Server>,
    pub federation: PathBuf,
}

impl Conference {
    pub fn start() -> Conference {
        let dir = tempfile::tempdir().unwrap();
        let servers: Vec<Server> = CONFERENCE
            .iter()
            .map(|name| {
                let data = dir.path().join(format!("{name}.ttl"));
                std::fs::copy(fixture(&format!("conference/{name}.ttl")), &data).unwrap();
                Server::start(&data, &[])
            })
            .collect();
        let members: Vec<(&str, &str)> = CONFERENCE.iter().copied().zip(servers.iter().map(|s| s.url.as_str())).collect();
        let federation = federation_file(dir.path(), &members);
        Conference { dir, servers, federation }
    }

    /// `knowhow --federation <file> args...`
    pub fn cli(&self, args: &[&str]) -> Command {
        let mut cmd = bin();
        cmd.arg("--federation").arg(&self.federation).args(args);
        cmd
    }

    pub fn run(&self, args: &[&str]) -> Output {
        self.cli(args).output().unwrap()
    }

    pub fn data(&self, name: &str) -> PathBuf {
        self.dir.path().join(format!("{name}.ttl"))
    }
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stdout_lines(out: &Output) -> Vec<String> {
    stdout(out).lines().map(str::to_string).collect()
}

pub fn ex(local: &str) -> String {
    format!("http://example.ex/{local}")
}

/// Spreads the triples of `g` over `k` graphs. Each mask picks the
/// endpoints holding one triple, so a triple may live in several.
pub fn partition(g: &knowhow_core::rdf::Graph, k: usize, masks: &[u8]) -> Vec<knowhow_core::rdf::Graph> {
    let mut parts = vec![knowhow_core::rdf::Graph::new(); k];
    for (i, t) in g.sorted_triples().into_iter().enumerate() {
        let mask = masks[i % masks.len()] as usize & ((1 << k) - 1);
        if mask == 0 {
            parts[i % k].insert(t);
            continue;
        }
        for (e, part) in parts.iter_mut().enumerate() {
            if mask & (1 << e) != 0 {
                part.insert(t.clone());
            }
        }
    }
    parts
}

/// Counted by hand from the article sources: has_step, requires and
/// has_method triples each article must produce.
pub const CORPUS_COUNTS: [(&str, usize, usize, usize); 20] = [
    ("bake-cookies", 7, 8, 2),
    ("bake-sourdough", 7, 8, 2),
    ("brew-coffee", 5, 6, 0),
    ("change-tyre", 5, 7, 0),
    ("clean-laptop", 4, 3, 0),
    ("fix-bike-puncture", 8, 9, 0),
    ("host-potluck", 7, 7, 2),
    ("learn-juggling", 5, 3, 0),
    ("learn-knots", 10, 6, 3),
    ("make-tea", 4, 3, 0),
    ("organise-book-club", 7, 6, 3),
    ("organise-conference", 4, 5, 0),
    ("organise-meetup", 5, 5, 2),
    ("paint-room", 8, 9, 0),
    ("plant-tomatoes", 5, 2, 3),
    ("repot-plant", 4, 5, 0),
    ("sharpen-knife", 7, 6, 0),
    ("start-compost", 8, 6, 2),
    ("volunteer-shift", 4, 3, 0),
    ("write-cv", 4, 4, 0),
];

pub fn count_predicate(g: &knowhow_core::rdf::Graph, iri: &str) -> usize {
    g.iter().filter(|t| t.predicate().as_str() == iri).count()
}

pub const HAS_STEP: &str = "http://vocab.inf.ed.ac.uk/prohow#has_step";
pub const HAS_METHOD: &str = "http://vocab.inf.ed.ac.uk/prohow#has_method";
pub const REQUIRES: &str = "http://vocab.inf.ed.ac.uk/prohow#requires";
