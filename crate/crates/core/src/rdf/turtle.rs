use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use super::prefixes::is_valid_prefix_label;
use super::{Graph, Iri, Literal, PrefixMap, Term, TermError, Triple};
use crate::lex::{describe, Dialect, LexError, Lexer, Position, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TurtleError {
    #[error("{position}: syntax error: {message}")]
    Syntax { position: Position, message: String },
    #[error("{position}: undeclared prefix `{prefix}`")]
    UndeclaredPrefix { position: Position, prefix: String },
    #[error("{position}: relative IRI `{iri}` with no base IRI")]
    RelativeIri { position: Position, iri: String },
    #[error("{position}: {source}")]
    Term { position: Position, source: TermError },
}

impl TurtleError {
    pub fn position(&self) -> Position {
        match self {
            TurtleError::Syntax { position, .. }
            | TurtleError::UndeclaredPrefix { position, .. }
            | TurtleError::RelativeIri { position, .. }
            | TurtleError::Term { position, .. } => *position,
        }
    }
}

impl From<LexError> for TurtleError {
    fn from(e: LexError) -> Self {
        TurtleError::Syntax {
            position: e.position,
            message: e.message,
        }
    }
}

/// Reader for the supported Turtle subset: `@prefix`/`PREFIX`, `@base`/`BASE`,
/// prefixed names, `<IRI>`s, quoted literals with `@lang` or `^^datatype`,
/// the `a` keyword, `;` and `,` lists, `_:label` blank nodes and comments.
///
/// The standard know-how prefixes are pre-declared; documents may redeclare
/// them.
#[derive(Debug, Clone, Default)]
pub struct TurtleParser {
    base: Option<Iri>,
    prefixes: PrefixMap,
}

impl TurtleParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_base(mut self, base: Option<Iri>) -> Self {
        self.base = base;
        self
    }

    pub fn with_prefixes(mut self, prefixes: PrefixMap) -> Self {
        self.prefixes = prefixes;
        self
    }

    pub fn parse(&self, text: &str) -> Result<Graph, TurtleError> {
        let tokens = Lexer::new(text, Dialect::Turtle).tokenize()?;
        let mut state = State {
            tokens,
            at: 0,
            base: self.base.clone(),
            graph: Graph::with_prefixes(self.prefixes.clone()),
        };
        state.document()?;
        Ok(state.graph)
    }
}

/// Parses a Turtle document, resolving relative IRIs against `base`.
pub fn parse_turtle(text: &str, base: Option<&Iri>) -> Result<Graph, TurtleError> {
    TurtleParser::new().with_base(base.cloned()).parse(text)
}

struct State {
    tokens: Vec<(Token, Position)>,
    at: usize,
    base: Option<Iri>,
    graph: Graph,
}

impl State {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at).map(|(t, _)| t)
    }

    fn position(&self) -> Position {
        match self.tokens.get(self.at) {
            Some((_, p)) => *p,
            None => self.tokens.last().map(|(_, p)| *p).unwrap_or_default(),
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    fn syntax(&self, message: impl Into<String>) -> TurtleError {
        TurtleError::Syntax {
            position: self.position(),
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> TurtleError {
        self.syntax(format!("expected {wanted}, found {}", describe(self.peek())))
    }

    fn expect_punct(&mut self, c: char) -> Result<(), TurtleError> {
        if self.peek() == Some(&Token::Punct(c)) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn document(&mut self) -> Result<(), TurtleError> {
        while let Some(token) = self.peek() {
            match token {
                Token::At(word) if word == "prefix" => {
                    self.at += 1;
                    self.prefix_decl()?;
                    self.expect_punct('.')?;
                }
                Token::At(word) if word == "base" => {
                    self.at += 1;
                    self.base_decl()?;
                    self.expect_punct('.')?;
                }
                Token::Word(word) if word.eq_ignore_ascii_case("prefix") => {
                    self.at += 1;
                    self.prefix_decl()?;
                }
                Token::Word(word) if word.eq_ignore_ascii_case("base") => {
                    self.at += 1;
                    self.base_decl()?;
                }
                _ => {
                    self.triples()?;
                    self.expect_punct('.')?;
                }
            }
        }
        Ok(())
    }

    fn prefix_decl(&mut self) -> Result<(), TurtleError> {
        let prefix = match self.peek() {
            Some(Token::PrefixedName { prefix, local }) if local.is_empty() => prefix.clone(),
            _ => return Err(self.unexpected("a prefix label such as `ex:`")),
        };
        if !is_valid_prefix_label(&prefix) {
            return Err(self.syntax(format!("invalid prefix label `{prefix}`")));
        }
        self.at += 1;
        let namespace = self.iri_ref()?;
        self.graph.prefixes_mut().insert(prefix, namespace);
        Ok(())
    }

    fn base_decl(&mut self) -> Result<(), TurtleError> {
        let base = self.iri_ref()?;
        self.base = Some(base);
        Ok(())
    }

    fn iri_ref(&mut self) -> Result<Iri, TurtleError> {
        let position = self.position();
        match self.next() {
            Some(Token::IriRef(raw)) => self.resolve(&raw, position),
            _ => {
                self.at -= 1;
                Err(self.unexpected("an IRI in angle brackets"))
            }
        }
    }

    fn resolve(&self, raw: &str, position: Position) -> Result<Iri, TurtleError> {
        let absolute = if super::has_scheme(raw) {
            raw.to_string()
        } else {
            match &self.base {
                Some(base) => resolve_reference(base.as_str(), raw),
                None => {
                    return Err(TurtleError::RelativeIri {
                        position,
                        iri: raw.to_string(),
                    })
                }
            }
        };
        Iri::new(absolute).map_err(|source| TurtleError::Term { position, source })
    }

    fn iri(&mut self) -> Result<Option<Iri>, TurtleError> {
        let position = self.position();
        match self.peek() {
            Some(Token::IriRef(_)) => self.iri_ref().map(Some),
            Some(Token::PrefixedName { prefix, local }) => {
                let Some(namespace) = self.graph.prefixes().get(prefix) else {
                    return Err(TurtleError::UndeclaredPrefix {
                        position,
                        prefix: prefix.clone(),
                    });
                };
                let iri = Iri::new(format!("{}{}", namespace.as_str(), local))
                    .map_err(|source| TurtleError::Term { position, source })?;
                self.at += 1;
                Ok(Some(iri))
            }
            _ => Ok(None),
        }
    }

    fn subject(&mut self) -> Result<Term, TurtleError> {
        if let Some(iri) = self.iri()? {
            return Ok(Term::Iri(iri));
        }
        if let Some(Token::BlankLabel(label)) = self.peek() {
            let term = Term::blank(label.clone()).map_err(|source| TurtleError::Term {
                position: self.position(),
                source,
            })?;
            self.at += 1;
            return Ok(term);
        }
        Err(self.unexpected("a subject (IRI or blank node)"))
    }

    fn verb(&mut self) -> Result<Iri, TurtleError> {
        if let Some(Token::Word(w)) = self.peek() {
            if w == "a" {
                self.at += 1;
                return Ok(Iri::new(format!("{}type", super::ns::RDF)).expect("static IRI"));
            }
        }
        match self.iri()? {
            Some(iri) => Ok(iri),
            None => Err(self.unexpected("a predicate")),
        }
    }

    fn object(&mut self) -> Result<Term, TurtleError> {
        if let Some(Token::Str(lexical)) = self.peek() {
            let lexical = lexical.clone();
            let position = self.position();
            self.at += 1;
            let literal = match self.peek() {
                Some(Token::At(tag)) => {
                    let tag = tag.clone();
                    self.at += 1;
                    Literal::with_language(lexical, tag)
                        .map_err(|source| TurtleError::Term { position, source })?
                }
                Some(Token::DoubleCaret) => {
                    self.at += 1;
                    match self.iri()? {
                        Some(dt) => Literal::typed(lexical, dt),
                        None => return Err(self.unexpected("a datatype IRI")),
                    }
                }
                _ => Literal::simple(lexical),
            };
            return Ok(Term::Literal(literal));
        }
        match self.peek() {
            Some(Token::Punct('[')) | Some(Token::Punct('(')) => {
                Err(self.syntax("blank node property lists and collections are not supported"))
            }
            Some(Token::Integer(_)) | Some(Token::Word(_)) => {
                Err(self.syntax("only quoted literals are supported"))
            }
            Some(Token::IriRef(_)) | Some(Token::PrefixedName { .. }) | Some(Token::BlankLabel(_)) => {
                self.subject()
            }
            _ => Err(self.unexpected("an object")),
        }
    }

    fn triples(&mut self) -> Result<(), TurtleError> {
        let subject = self.subject()?;
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.object()?;
                let triple = Triple::with_predicate(subject.clone(), predicate.clone(), object)
                    .expect("subject is never a literal here");
                self.graph.insert(triple);
                if self.peek() == Some(&Token::Punct(',')) {
                    self.at += 1;
                } else {
                    break;
                }
            }
            // one or more ';', optionally followed by another predicate
            let mut saw_semicolon = false;
            while self.peek() == Some(&Token::Punct(';')) {
                self.at += 1;
                saw_semicolon = true;
            }
            if !saw_semicolon || matches!(self.peek(), Some(Token::Punct('.')) | None) {
                return Ok(());
            }
        }
    }
}

/// RFC 3986 reference resolution (section 5.2.2).
pub(crate) fn resolve_reference(base: &str, reference: &str) -> String {
    let (b_scheme, b_rest) = base.split_once(':').unwrap_or(("", base));
    let (b_authority, b_path, b_query) = split_hier(b_rest);
    let (r_authority, r_path, r_query, r_fragment) = {
        let (no_frag, frag) = match reference.split_once('#') {
            Some((a, f)) => (a, Some(f)),
            None => (reference, None),
        };
        let (a, p, q) = split_hier(no_frag);
        (a, p, q, frag)
    };

    let mut out = String::new();
    out.push_str(b_scheme);
    out.push(':');
    let (authority, path, query) = if let Some(a) = r_authority {
        (Some(a), remove_dot_segments(r_path), r_query)
    } else if r_path.is_empty() {
        (b_authority, b_path.to_string(), r_query.or(b_query))
    } else if r_path.starts_with('/') {
        (b_authority, remove_dot_segments(r_path), r_query)
    } else {
        let merged = if b_authority.is_some() && b_path.is_empty() {
            format!("/{r_path}")
        } else {
            match b_path.rfind('/') {
                Some(i) => format!("{}{}", &b_path[..=i], r_path),
                None => r_path.to_string(),
            }
        };
        (b_authority, remove_dot_segments(&merged), r_query)
    };
    if let Some(a) = authority {
        let _ = write!(out, "//{a}");
    }
    out.push_str(&path);
    if let Some(q) = query {
        let _ = write!(out, "?{q}");
    }
    if let Some(f) = r_fragment {
        let _ = write!(out, "#{f}");
    }
    out
}

/// Splits `//authority/path?query` (fragment already removed).
fn split_hier(s: &str) -> (Option<&str>, &str, Option<&str>) {
    let s = s.split('#').next().unwrap_or("");
    let (s, query) = match s.split_once('?') {
        Some((a, q)) => (a, Some(q)),
        None => (s, None),
    };
    if let Some(rest) = s.strip_prefix("//") {
        let end = rest.find('/').unwrap_or(rest.len());
        (Some(&rest[..end]), &rest[end..], query)
    } else {
        (None, s, query)
    }
}

fn remove_dot_segments(path: &str) -> String {
    let mut output: Vec<&str> = Vec::new();
    let mut input = path;
    while !input.is_empty() {
        if let Some(rest) = input.strip_prefix("../") {
            input = rest;
        } else if let Some(rest) = input.strip_prefix("./") {
            input = rest;
        } else if input.starts_with("/./") {
            input = &input[2..];
        } else if input == "/." {
            input = "/";
        } else if input.starts_with("/../") {
            input = &input[3..];
            output.pop();
        } else if input == "/.." {
            input = "/";
            output.pop();
        } else if input == "." || input == ".." {
            input = "";
        } else {
            let start = usize::from(input.starts_with('/'));
            let end = input[start..].find('/').map_or(input.len(), |i| i + start);
            output.push(&input[..end]);
            input = &input[end..];
        }
    }
    output.concat()
}

/// Writes `graph` as Turtle: sorted `@prefix` lines, then the triples in
/// canonical order grouped by subject (`;`) and predicate (`,`).
pub fn serialize_turtle(graph: &Graph) -> String {
    let prefixes = graph.prefixes();
    let mut out = String::new();
    for (prefix, namespace) in prefixes.iter() {
        let _ = writeln!(out, "@prefix {prefix}: <{}> .", namespace.as_str());
    }
    let triples = graph.sorted_triples();
    if triples.is_empty() {
        return out;
    }
    if !prefixes.is_empty() {
        out.push('\n');
    }

    let mut i = 0;
    while i < triples.len() {
        let subject = triples[i].subject();
        out.push_str(&render_term(subject, prefixes));
        let mut first_predicate = true;
        while i < triples.len() && triples[i].subject() == subject {
            let predicate = triples[i].predicate();
            if first_predicate {
                out.push(' ');
                first_predicate = false;
            } else {
                out.push_str(" ;\n    ");
            }
            out.push_str(&render_iri(predicate, prefixes));
            out.push(' ');
            let mut first_object = true;
            while i < triples.len() && triples[i].subject() == subject && triples[i].predicate() == predicate {
                if !first_object {
                    out.push_str(" , ");
                }
                first_object = false;
                out.push_str(&render_term(triples[i].object(), prefixes));
                i += 1;
            }
        }
        out.push_str(" .\n");
    }
    out
}

fn render_iri(iri: &Iri, prefixes: &PrefixMap) -> String {
    prefixes.compact(iri).unwrap_or_else(|| format!("<{}>", iri.as_str()))
}

fn render_term(term: &Term, prefixes: &PrefixMap) -> String {
    match term {
        Term::Iri(iri) => render_iri(iri, prefixes),
        Term::BlankNode(b) => format!("_:{}", b.label()),
        Term::Literal(lit) => {
            let mut s = format!("\"{}\"", super::escape_string(lit.lexical()));
            if let Some(lang) = lit.language() {
                let _ = write!(s, "@{lang}");
            } else if let Some(dt) = lit.datatype() {
                let _ = write!(s, "^^{}", render_iri(dt, prefixes));
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::ns;

    fn ex(local: &str) -> Term {
        Term::iri(format!("{}{local}", ns::EX)).unwrap()
    }

    #[test]
    fn single_step_triple() {
        let g = parse_turtle(":organise_conference prohow:has_step :choose_conference_venue .", None).unwrap();
        assert_eq!(g.len(), 1);
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject(), &ex("organise_conference"));
        assert_eq!(t.predicate().as_str(), "http://vocab.inf.ed.ac.uk/prohow#has_step");
        assert_eq!(t.object(), &ex("choose_conference_venue"));
    }

    #[test]
    fn empty_document() {
        assert!(parse_turtle("", None).unwrap().is_empty());
        assert!(parse_turtle("# only a comment\n", None).unwrap().is_empty());
    }

    #[test]
    fn object_and_predicate_lists() {
        let g = parse_turtle(":a :p :b , :c .", None).unwrap();
        assert_eq!(g.len(), 2);
        let g = parse_turtle(":a :p :b ; :q \"x\"@en ; a :T ; .", None).unwrap();
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn declared_prefix_and_base() {
        let text = "@prefix ex: <http://e.org/ns#> .\n@base <http://e.org/dir/doc> .\nex:a <b> <../c#d> .";
        let g = parse_turtle(text, None).unwrap();
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject(), &Term::iri("http://e.org/ns#a").unwrap());
        assert_eq!(t.predicate().as_str(), "http://e.org/dir/b");
        assert_eq!(t.object(), &Term::iri("http://e.org/c#d").unwrap());
    }

    #[test]
    fn sparql_style_directives() {
        let g = parse_turtle("PREFIX ex: <http://e.org/>\nex:a ex:b ex:c .", None).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn relative_iri_needs_base() {
        let err = parse_turtle("<a> <http://e/p> <http://e/o> .", None).unwrap_err();
        assert!(matches!(err, TurtleError::RelativeIri { .. }));
        let base = Iri::new("http://e.org/x/").unwrap();
        let g = parse_turtle("<a> <http://e/p> <http://e/o> .", Some(&base)).unwrap();
        assert_eq!(g.iter().next().unwrap().subject(), &Term::iri("http://e.org/x/a").unwrap());
    }

    #[test]
    fn undeclared_prefix_reports_position() {
        let err = parse_turtle(":a :p :b .\n  foaf:x :p :b .", None).unwrap_err();
        match err {
            TurtleError::UndeclaredPrefix { position, prefix } => {
                assert_eq!(prefix, "foaf");
                assert_eq!((position.line, position.column), (2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = parse_turtle(":a :p :b", None).unwrap_err();
        assert!(matches!(err, TurtleError::Syntax { .. }));
        let err = parse_turtle(":a :p\n  \"unterminated .", None).unwrap_err();
        assert_eq!(err.position().line, 2);
        assert!(parse_turtle("\"lit\" :p :o .", None).is_err());
        assert!(parse_turtle(":a :p [ :q :r ] .", None).is_err());
        assert!(parse_turtle(":a :p 42 .", None).is_err());
    }

    #[test]
    fn literal_forms() {
        let g = parse_turtle(
            r#":a :p "x\n\"y\"" , 'single' , "chat"@fr , "5"^^<http://www.w3.org/2001/XMLSchema#integer> , "é" ."#,
            None,
        )
        .unwrap();
        let objects: Vec<String> = g.iter().map(|t| t.object().canonical()).collect();
        assert!(objects.contains(&"\"x\\n\\\"y\\\"\"".to_string()));
        assert!(objects.contains(&"\"single\"".to_string()));
        assert!(objects.contains(&"\"chat\"@fr".to_string()));
        assert!(objects.contains(&"\"é\"".to_string()));
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn serialize_empty_has_only_prefixes() {
        let out = serialize_turtle(&Graph::new());
        assert_eq!(out.lines().count(), 5);
        assert!(out.lines().all(|l| l.starts_with("@prefix ")));
    }

    #[test]
    fn serialize_groups_and_round_trips() {
        let text = ":a :p :c , :b ; rdfs:label \"Organize a Conference\" .\n_:x :q :a .";
        let g = parse_turtle(text, None).unwrap();
        let out = serialize_turtle(&g);
        assert!(out.contains(":a :p :b , :c ;\n    rdfs:label \"Organize a Conference\" .\n"));
        assert_eq!(parse_turtle(&out, None).unwrap(), g);
        assert_eq!(serialize_turtle(&parse_turtle(&out, None).unwrap()), out);
    }

    #[test]
    fn reference_resolution() {
        let base = "http://a/b/c/d;p?q";
        for (r, want) in [
            ("g", "http://a/b/c/g"),
            ("./g", "http://a/b/c/g"),
            ("g/", "http://a/b/c/g/"),
            ("/g", "http://a/g"),
            ("//g", "http://g"),
            ("?y", "http://a/b/c/d;p?y"),
            ("#s", "http://a/b/c/d;p?q#s"),
            ("..", "http://a/b/"),
            ("../g", "http://a/b/g"),
            ("../../g", "http://a/g"),
            ("", "http://a/b/c/d;p?q"),
        ] {
            assert_eq!(resolve_reference(base, r), want, "reference {r}");
        }
    }
}
