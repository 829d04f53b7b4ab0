//! Reader for the constrained article markup: an `<h1>` title, an optional
//! "Things You'll Need" `<h2>` followed by a `<ul>`, and method `<h2>`
//! headings each followed by a list of steps. Lists nested inside a list
//! item are substeps.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{ArticleDoc, ExtractionError, MethodSection, Step};
use crate::rdf::Iri;

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track", "wbr",
];
const RAW_TEXT: &[&str] = &["script", "style"];
const INLINE: &[&str] = &[
    "a", "abbr", "b", "cite", "code", "em", "i", "kbd", "mark", "q", "s", "small", "span", "strong", "sub", "sup",
    "u", "var",
];
const SKIPPED: &[&str] = &["head", "title", "script", "style", "nav", "footer", "aside", "template"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Element {
        name: String,
        attrs: Vec<(String, String)>,
        children: Vec<Node>,
    },
    Text(String),
}

impl Node {
    fn attr(&self, key: &str) -> Option<&str> {
        match self {
            Node::Element { attrs, .. } => attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()),
            Node::Text(_) => None,
        }
    }
}

fn is_list(name: &str) -> bool {
    name == "ol" || name == "ul"
}

struct Open {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
    offset: usize,
}

/// Parses markup into a forest, rejecting mismatched or unclosed tags.
fn parse_tree(html: &str) -> Result<Vec<Node>, ExtractionError> {
    let mut stack: Vec<Open> = Vec::new();
    let mut root: Vec<Node> = Vec::new();
    let mut rest = html;
    let offset_of = |rest: &str| html.len() - rest.len();
    let line_of = |offset: usize| html[..offset].matches('\n').count() + 1;

    fn push(stack: &mut [Open], root: &mut Vec<Node>, node: Node) {
        match stack.last_mut() {
            Some(top) => top.children.push(node),
            None => root.push(node),
        }
    }

    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            push(&mut stack, &mut root, Node::Text(decode(rest)));
            break;
        };
        if lt > 0 {
            push(&mut stack, &mut root, Node::Text(decode(&rest[..lt])));
            rest = &rest[lt..];
            continue;
        }
        if let Some(body) = rest.strip_prefix("<!--") {
            let end = body.find("-->").ok_or_else(|| malformed(line_of(offset_of(rest)), "unterminated comment"))?;
            rest = &body[end + 3..];
            continue;
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            let end = rest.find('>').ok_or_else(|| malformed(line_of(offset_of(rest)), "unterminated declaration"))?;
            rest = &rest[end + 1..];
            continue;
        }
        let offset = offset_of(rest);
        let end = tag_end(rest).ok_or_else(|| malformed(line_of(offset), "unterminated tag"))?;
        let tag = &rest[1..end];
        rest = &rest[end + 1..];

        if let Some(close) = tag.strip_prefix('/') {
            let name = close.trim().to_ascii_lowercase();
            if VOID.contains(&name.as_str()) {
                continue;
            }
            match stack.pop() {
                Some(open) if open.name == name => {
                    let node = Node::Element {
                        name: open.name,
                        attrs: open.attrs,
                        children: open.children,
                    };
                    push(&mut stack, &mut root, node);
                }
                Some(open) => {
                    return Err(malformed(
                        line_of(offset),
                        &format!("</{name}> closes <{}> opened on line {}", open.name, line_of(open.offset)),
                    ))
                }
                None => return Err(malformed(line_of(offset), &format!("</{name}> has no matching open tag"))),
            }
            continue;
        }

        let self_closing = tag.ends_with('/');
        let tag = tag.trim_end_matches('/');
        let (name, attrs) = parse_tag(tag).ok_or_else(|| malformed(line_of(offset), "bad tag name"))?;
        if VOID.contains(&name.as_str()) || self_closing {
            push(&mut stack, &mut root, Node::Element { name, attrs, children: Vec::new() });
            continue;
        }
        if RAW_TEXT.contains(&name.as_str()) {
            let closing = format!("</{name}");
            let end = find_ascii_ci(rest, &closing).ok_or_else(|| malformed(line_of(offset), &format!("unclosed <{name}>")))?;
            let after = rest[end..].find('>').map(|i| end + i + 1).unwrap_or(rest.len());
            rest = &rest[after..];
            push(&mut stack, &mut root, Node::Element { name, attrs, children: Vec::new() });
            continue;
        }
        stack.push(Open { name, attrs, children: Vec::new(), offset });
    }
    if let Some(open) = stack.pop() {
        return Err(malformed(line_of(open.offset), &format!("<{}> is never closed", open.name)));
    }
    Ok(root)
}

fn malformed(line: usize, message: &str) -> ExtractionError {
    ExtractionError::MalformedNesting(format!("line {line}: {message}"))
}

/// Index of the `>` ending the tag at the start of `s`, skipping quoted
/// attribute values.
fn tag_end(s: &str) -> Option<usize> {
    let mut quote = None;
    for (i, c) in s.char_indices().skip(1) {
        match (quote, c) {
            (None, '>') => return Some(i),
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            _ => {}
        }
    }
    None
}

fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    (0..=h.len().checked_sub(n.len())?).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

fn parse_tag(tag: &str) -> Option<(String, Vec<(String, String)>)> {
    let tag = tag.trim();
    let name_end = tag.find(|c: char| c.is_whitespace()).unwrap_or(tag.len());
    let name = tag[..name_end].to_ascii_lowercase();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
        return None;
    }
    let mut attrs = Vec::new();
    let mut rest = tag[name_end..].trim_start();
    while !rest.is_empty() {
        let key_end = rest
            .find(|c: char| c.is_whitespace() || c == '=')
            .unwrap_or(rest.len());
        let key = rest[..key_end].to_ascii_lowercase();
        rest = rest[key_end..].trim_start();
        let value = if let Some(after) = rest.strip_prefix('=') {
            let after = after.trim_start();
            match after.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let close = after[1..].find(q)? + 1;
                    rest = &after[close + 1..];
                    decode(&after[1..close])
                }
                _ => {
                    let end = after.find(char::is_whitespace).unwrap_or(after.len());
                    rest = &after[end..];
                    decode(&after[..end])
                }
            }
        } else {
            String::new()
        };
        if !key.is_empty() {
            attrs.push((key, value));
        }
        rest = rest.trim_start();
    }
    Some((name, attrs))
}

fn decode(text: &str) -> String {
    html_escape::decode_html_entities(text).into_owned()
}

fn normalize_ws(text: &str) -> String {
    let mut out = String::new();
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Text content of `nodes`, leaving out nested lists.
fn text_of(nodes: &[Node], out: &mut String) {
    for node in nodes {
        match node {
            Node::Text(t) => out.push_str(t),
            Node::Element { name, children, .. } => {
                if is_list(name) || SKIPPED.contains(&name.as_str()) {
                    continue;
                }
                let inline = INLINE.contains(&name.as_str());
                if !inline {
                    out.push(' ');
                }
                text_of(children, out);
                if !inline {
                    out.push(' ');
                }
            }
        }
    }
}

fn plain_text(nodes: &[Node]) -> String {
    let mut raw = String::new();
    text_of(nodes, &mut raw);
    normalize_ws(&raw)
}

/// Lists directly under `nodes`, looking through non-list wrappers.
fn nested_lists<'a>(nodes: &'a [Node], out: &mut Vec<&'a [Node]>) {
    for node in nodes {
        if let Node::Element { name, children, .. } = node {
            if is_list(name) {
                out.push(children);
            } else {
                nested_lists(children, out);
            }
        }
    }
}

fn list_items(list: &[Node]) -> Result<Vec<&[Node]>, ExtractionError> {
    let mut items = Vec::new();
    for node in list {
        match node {
            Node::Element { name, children, .. } if name == "li" => items.push(children.as_slice()),
            Node::Text(t) if t.trim().is_empty() => {}
            Node::Element { name, .. } => {
                return Err(ExtractionError::MalformedNesting(format!("<{name}> directly inside a list")))
            }
            Node::Text(t) => {
                return Err(ExtractionError::MalformedNesting(format!(
                    "text `{}` directly inside a list",
                    normalize_ws(t)
                )))
            }
        }
    }
    Ok(items)
}

fn steps_of_list(list: &[Node]) -> Result<Vec<Step>, ExtractionError> {
    list_items(list)?
        .into_iter()
        .map(|item| {
            let mut lists = Vec::new();
            nested_lists(item, &mut lists);
            let mut substeps = Vec::new();
            for l in lists {
                substeps.extend(steps_of_list(l)?);
            }
            Ok(Step::with_substeps(plain_text(item), substeps))
        })
        .collect()
}

fn is_requirements_heading(text: &str) -> bool {
    let t = text.replace(['\u{2019}', '\u{2018}', '`'], "'").to_lowercase();
    let t = t.trim().trim_end_matches(':').trim_end();
    matches!(t, "things you'll need" | "things you will need" | "things youll need")
}

enum Mode {
    Start,
    Requirements,
    Method,
}

struct Walker {
    title: Option<String>,
    source_url: Option<String>,
    requirements: Vec<String>,
    sections: Vec<MethodSection>,
    mode: Mode,
}

impl Walker {
    fn walk(&mut self, nodes: &[Node]) -> Result<(), ExtractionError> {
        for node in nodes {
            let Node::Element { name, children, .. } = node else {
                continue;
            };
            match name.as_str() {
                "link" => {
                    let canonical = node
                        .attr("rel")
                        .is_some_and(|r| r.split_whitespace().any(|t| t.eq_ignore_ascii_case("canonical")));
                    if canonical && self.source_url.is_none() {
                        self.source_url = node.attr("href").map(|h| h.trim().to_owned());
                    }
                }
                "h1" => {
                    if self.title.is_none() {
                        self.title = Some(plain_text(children));
                    }
                }
                "h2" => {
                    let heading = plain_text(children);
                    if is_requirements_heading(&heading) {
                        self.mode = Mode::Requirements;
                    } else {
                        self.mode = Mode::Method;
                        let name = (!heading.is_empty()).then_some(heading);
                        self.sections.push(MethodSection { name, steps: Vec::new() });
                    }
                }
                "ol" | "ul" => match self.mode {
                    Mode::Requirements => {
                        for item in list_items(children)? {
                            self.requirements.push(plain_text(item));
                        }
                        self.mode = Mode::Start;
                    }
                    Mode::Start | Mode::Method => {
                        if self.sections.is_empty() {
                            self.sections.push(MethodSection { name: None, steps: Vec::new() });
                        }
                        let steps = steps_of_list(children)?;
                        if let Some(section) = self.sections.last_mut() {
                            section.steps.extend(steps);
                        }
                        self.mode = Mode::Method;
                    }
                },
                "li" => return Err(ExtractionError::MalformedNesting("<li> outside a list".into())),
                "title" | "script" | "style" | "template" | "nav" | "footer" | "aside" => {}
                _ => self.walk(children)?,
            }
        }
        Ok(())
    }
}

/// Parses an article page into an [`ArticleDoc`].
///
/// The source URL is taken from `<link rel="canonical" href="...">` when
/// present.
pub fn parse_article_html(html: &str, source_id: &str) -> Result<ArticleDoc, ExtractionError> {
    let tree = parse_tree(html)?;
    let mut walker = Walker {
        title: None,
        source_url: None,
        requirements: Vec::new(),
        sections: Vec::new(),
        mode: Mode::Start,
    };
    walker.walk(&tree)?;
    let title = walker.title.filter(|t| !t.is_empty()).ok_or(ExtractionError::MissingTitle)?;
    let source_url = walker
        .source_url
        .map(|u| Iri::new(u.clone()).map_err(|_| ExtractionError::BadSourceUrl(u)))
        .transpose()?;
    let doc = ArticleDoc {
        source_id: String::from(source_id),
        source_url,
        title,
        requirements: walker.requirements,
        sections: walker.sections,
    };
    doc.validate()?;
    Ok(doc)
}
