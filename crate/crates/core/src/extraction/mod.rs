//! Turning how-to articles into process graphs.

mod article;
mod html;
mod mint;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use article::{parse_article_json, ArticleDoc, MethodSection, Step, MAX_SUBSTEP_DEPTH};
pub use html::parse_article_html;
pub use mint::{is_valid_source_id, mint_iri, slug, MintKind, MintingPolicy};

use crate::rdf::{Graph, Iri, TermError};
use crate::vocab::{self, CounterMinter};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractionError {
    #[error("article has no title")]
    MissingTitle,
    #[error("{}", match .0 { Some(n) => format!("section `{n}` has no steps"), None => "article has no steps".into() })]
    EmptySteps(Option<String>),
    #[error("step with empty text")]
    EmptyStepText,
    #[error("substeps nested deeper than {MAX_SUBSTEP_DEPTH} levels under `{0}`")]
    NestingTooDeep(String),
    #[error("malformed nesting: {0}")]
    MalformedNesting(String),
    #[error("invalid source id `{0}`: use ASCII letters, digits, `.` and `-`")]
    InvalidSourceId(String),
    #[error("labels must not be empty")]
    EmptyLabel,
    #[error("base namespace `{0}` must end in `/` or `#`")]
    BadNamespace(String),
    #[error("source URL `{0}` is not an absolute IRI")]
    BadSourceUrl(String),
    #[error("invalid article JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Term(#[from] TermError),
}

/// Settings for [`article_to_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractOptions {
    pub policy: MintingPolicy,
    /// Chain sibling steps with `prohow:requires` so each needs the previous.
    pub sequential_requires: bool,
}

impl ExtractOptions {
    pub fn new(policy: MintingPolicy) -> Self {
        ExtractOptions {
            policy,
            sequential_requires: true,
        }
    }

    pub fn sequential_requires(mut self, on: bool) -> Self {
        self.sequential_requires = on;
        self
    }
}

struct Builder<'a> {
    graph: Graph,
    options: &'a ExtractOptions,
    source_id: &'a str,
}

impl Builder<'_> {
    fn mint(&mut self, kind: MintKind, path: &[usize], label: &str) -> Result<Iri, ExtractionError> {
        let label = label.trim();
        let iri = mint_iri(&self.options.policy, self.source_id, kind, path, label)?;
        vocab::set_label(&mut self.graph, &iri, label);
        Ok(iri)
    }

    fn steps(&mut self, parent: &Iri, steps: &[Step], prefix: &mut Vec<usize>) -> Result<(), ExtractionError> {
        let mut previous: Option<Iri> = None;
        for (i, step) in steps.iter().enumerate() {
            prefix.push(i + 1);
            let iri = self.mint(MintKind::Step, prefix, &step.text)?;
            vocab::add_step(&mut self.graph, parent, &iri);
            if self.options.sequential_requires {
                if let Some(prev) = &previous {
                    vocab::add_requirement(&mut self.graph, &iri, prev);
                }
            }
            self.steps(&iri, &step.substeps, prefix)?;
            prefix.pop();
            previous = Some(iri);
        }
        Ok(())
    }
}

/// Builds the process graph of one article.
///
/// Steps hang off the task directly when the article has one section and
/// off one `prohow:has_method` node per section otherwise. Every minted node
/// gets exactly one `rdfs:label`. With a source URL the task is annotated as
/// coming from that page.
pub fn article_to_graph(doc: &ArticleDoc, options: &ExtractOptions) -> Result<Graph, ExtractionError> {
    doc.validate()?;
    let mut b = Builder {
        graph: Graph::new(),
        options,
        source_id: &doc.source_id,
    };
    let task = b.mint(MintKind::Task, &[], &doc.title)?;
    for (i, requirement) in doc.requirements.iter().enumerate() {
        let r = b.mint(MintKind::Requirement, &[i + 1], requirement)?;
        vocab::add_requirement(&mut b.graph, &task, &r);
    }
    let multi = doc.sections.len() > 1;
    for (m, section) in doc.sections.iter().enumerate() {
        let mut path = Vec::from([m + 1]);
        let parent = if multi {
            let name = match &section.name {
                Some(n) if !n.trim().is_empty() => n.clone(),
                _ => format!("Method {}", m + 1),
            };
            let method = b.mint(MintKind::Method, &path, &name)?;
            vocab::add_method(&mut b.graph, &task, &method);
            method
        } else {
            task.clone()
        };
        b.steps(&parent, &section.steps, &mut path)?;
    }
    if let Some(url) = &doc.source_url {
        let prefix = format!(
            "{}{}_annotation_{}_",
            options.policy.base_namespace().as_str(),
            slug(&doc.title),
            options.policy.source_segment(&doc.source_id)
        );
        let mut minter = CounterMinter::new(prefix);
        vocab::annotate(&mut b.graph, &mut minter, &task, url, None);
    }
    Ok(b.graph)
}
