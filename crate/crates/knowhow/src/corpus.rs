//! Batch extraction of an article directory into Turtle files.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use knowhow_core::extraction::{article_to_graph, parse_article_html, parse_article_json, ExtractOptions};
use knowhow_core::rdf::{serialize_turtle, Graph};

use crate::store::write_atomically;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArticleFormat {
    Json,
    Html,
}

impl ArticleFormat {
    pub fn of(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(ArticleFormat::Json),
            "html" | "htm" => Some(ArticleFormat::Html),
            _ => None,
        }
    }
}

#[derive(Debug, Default)]
pub struct ExtractReport {
    pub written: Vec<PathBuf>,
    pub failures: Vec<(PathBuf, String)>,
    pub merged: Option<PathBuf>,
    pub triples: usize,
}

impl ExtractReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Extracts one article file. HTML articles take their source id from the
/// file stem.
pub fn extract_file(path: &Path, options: &ExtractOptions) -> Result<Graph, String> {
    let format = ArticleFormat::of(path).ok_or("not a .json or .html article")?;
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let doc = match format {
        ArticleFormat::Json => parse_article_json(&text),
        ArticleFormat::Html => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            parse_article_html(&text, stem)
        }
    }
    .map_err(|e| e.to_string())?;
    article_to_graph(&doc, options).map_err(|e| e.to_string())
}

/// Article files directly inside `dir`, sorted by name.
pub fn list_articles(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && ArticleFormat::of(&path).is_some() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Writes `<stem>.ttl` into `output` for every article in `input`, and the
/// union of all of them to `merged` when given. A failing article is
/// recorded and the rest still run.
pub fn extract_dir(
    input: &Path,
    output: &Path,
    options: &ExtractOptions,
    merged: Option<&Path>,
) -> io::Result<ExtractReport> {
    let articles = list_articles(input)?;
    std::fs::create_dir_all(output)?;
    let mut report = ExtractReport::default();
    let mut all = Graph::new();
    let mut claimed: BTreeMap<PathBuf, PathBuf> = BTreeMap::new();
    for path in articles {
        let stem = path.file_stem().unwrap_or_default();
        let target = output.join(stem).with_extension("ttl");
        if let Some(first) = claimed.get(&target) {
            let reason = format!("{} is already written from {}", target.display(), first.display());
            report.failures.push((path, reason));
            continue;
        }
        match extract_file(&path, options) {
            Ok(graph) => {
                write_atomically(&target, &serialize_turtle(&graph))?;
                report.triples += graph.len();
                all.extend_from(&graph);
                claimed.insert(target.clone(), path);
                report.written.push(target);
            }
            Err(reason) => report.failures.push((path, reason)),
        }
    }
    if let Some(m) = merged {
        write_atomically(m, &serialize_turtle(&all))?;
        report.merged = Some(m.to_path_buf());
    }
    Ok(report)
}
