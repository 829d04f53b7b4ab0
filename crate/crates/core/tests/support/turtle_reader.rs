//! A small, separate Turtle reader used only to check the writer. It
//! handles prefixes, `;`/`,` lists, blank node labels, the `a` keyword and
//! literals with escapes, language tags and datatypes. It shares no code
//! with the library parser and has its own term model.

use std::collections::{BTreeMap, BTreeSet};

use knowhow_core::rdf::{Graph, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Iri(String),
    Blank(String),
    /// lexical form, language tag, datatype
    Literal(String, Option<String>, Option<String>),
}

pub type Statement = (Node, String, Node);

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

struct Reader<'a> {
    chars: Vec<char>,
    at: usize,
    prefixes: BTreeMap<String, String>,
    out: &'a mut BTreeSet<Statement>,
}

pub fn read(text: &str) -> Result<BTreeSet<Statement>, String> {
    let mut out = BTreeSet::new();
    let mut r = Reader {
        chars: text.chars().collect(),
        at: 0,
        prefixes: BTreeMap::new(),
        out: &mut out,
    };
    r.document()?;
    Ok(out)
}

/// The same statements, taken straight from a graph.
pub fn statements(g: &Graph) -> BTreeSet<Statement> {
    let node = |t: &Term| match t {
        Term::Iri(i) => Node::Iri(i.as_str().to_string()),
        Term::BlankNode(b) => Node::Blank(b.label().to_string()),
        Term::Literal(l) => Node::Literal(
            l.lexical().to_string(),
            l.language().map(str::to_string),
            l.datatype().map(|d| d.as_str().to_string()),
        ),
    };
    g.iter()
        .map(|t| (node(t.subject()), t.predicate().as_str().to_string(), node(t.object())))
        .collect()
}

impl Reader<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn bump(&mut self) -> Result<char, String> {
        let c = self.peek().ok_or("unexpected end of input")?;
        self.at += 1;
        Ok(c)
    }

    fn expect(&mut self, want: char) -> Result<(), String> {
        let got = self.bump()?;
        if got == want {
            Ok(())
        } else {
            Err(format!("expected {want:?} at {}, found {got:?}", self.at - 1))
        }
    }

    fn skip_space(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.at += 1;
                }
            } else if c.is_whitespace() {
                self.at += 1;
            } else {
                break;
            }
        }
    }

    fn starts_with(&self, word: &str) -> bool {
        word.chars().enumerate().all(|(i, c)| self.chars.get(self.at + i) == Some(&c))
    }

    fn document(&mut self) -> Result<(), String> {
        loop {
            self.skip_space();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.starts_with("@prefix") {
                self.at += "@prefix".len();
                self.skip_space();
                let mut name = String::new();
                while let Some(c) = self.peek().filter(|&c| c != ':') {
                    name.push(c);
                    self.at += 1;
                }
                self.expect(':')?;
                self.skip_space();
                let ns = self.iri_ref()?;
                self.prefixes.insert(name, ns);
                self.skip_space();
                self.expect('.')?;
            } else {
                self.triples()?;
            }
        }
    }

    fn triples(&mut self) -> Result<(), String> {
        let subject = self.node()?;
        loop {
            self.skip_space();
            let predicate = if self.peek() == Some('a') && self.chars.get(self.at + 1).is_some_and(|c| c.is_whitespace()) {
                self.at += 1;
                RDF_TYPE.to_string()
            } else {
                match self.node()? {
                    Node::Iri(i) => i,
                    other => return Err(format!("predicate {other:?} is not an IRI")),
                }
            };
            loop {
                self.skip_space();
                let object = self.node()?;
                self.out.insert((subject.clone(), predicate.clone(), object));
                self.skip_space();
                if self.peek() == Some(',') {
                    self.at += 1;
                } else {
                    break;
                }
            }
            match self.bump()? {
                ';' => {
                    self.skip_space();
                    if self.peek() == Some('.') {
                        self.at += 1;
                        return Ok(());
                    }
                }
                '.' => return Ok(()),
                c => return Err(format!("unexpected {c:?} after an object")),
            }
        }
    }

    fn node(&mut self) -> Result<Node, String> {
        self.skip_space();
        match self.peek().ok_or("missing term")? {
            '<' => Ok(Node::Iri(self.iri_ref()?)),
            '"' => self.literal(),
            '_' => {
                self.expect('_')?;
                self.expect(':')?;
                let mut label = String::new();
                while let Some(c) = self.peek().filter(|c| c.is_alphanumeric() || matches!(c, '_' | '-')) {
                    label.push(c);
                    self.at += 1;
                }
                Ok(Node::Blank(label))
            }
            _ => Ok(Node::Iri(self.prefixed_name()?)),
        }
    }

    fn iri_ref(&mut self) -> Result<String, String> {
        self.expect('<')?;
        let mut iri = String::new();
        loop {
            match self.bump()? {
                '>' => return Ok(iri),
                '\\' => iri.push(self.unicode_escape()?),
                c => iri.push(c),
            }
        }
    }

    fn prefixed_name(&mut self) -> Result<String, String> {
        let mut prefix = String::new();
        while let Some(c) = self.peek().filter(|&c| c != ':') {
            if c.is_whitespace() {
                return Err(format!("bare word {prefix:?}"));
            }
            prefix.push(c);
            self.at += 1;
        }
        self.expect(':')?;
        let ns = self.prefixes.get(&prefix).ok_or(format!("unknown prefix {prefix:?}"))?.clone();
        let mut local = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            local.push(c);
            self.at += 1;
        }
        // a trailing dot ends the statement
        while local.ends_with('.') {
            local.pop();
            self.at -= 1;
        }
        Ok(ns + &local)
    }

    fn unicode_escape(&mut self) -> Result<char, String> {
        let width = match self.bump()? {
            'u' => 4,
            'U' => 8,
            c => return Err(format!("bad escape \\{c}")),
        };
        let mut code = 0u32;
        for _ in 0..width {
            code = code * 16 + self.bump()?.to_digit(16).ok_or("bad hex digit")?;
        }
        char::from_u32(code).ok_or_else(|| format!("bad code point {code:x}"))
    }

    fn literal(&mut self) -> Result<Node, String> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump()? {
                '"' => break,
                '\\' => {
                    let c = match self.peek().ok_or("dangling escape")? {
                        't' => '\t',
                        'b' => '\u{8}',
                        'n' => '\n',
                        'r' => '\r',
                        'f' => '\u{c}',
                        '"' => '"',
                        '\'' => '\'',
                        '\\' => '\\',
                        _ => {
                            lexical.push(self.unicode_escape()?);
                            continue;
                        }
                    };
                    self.at += 1;
                    lexical.push(c);
                }
                '\n' | '\r' => return Err("raw line break inside a short string".into()),
                c => lexical.push(c),
            }
        }
        match self.peek() {
            Some('@') => {
                self.at += 1;
                let mut tag = String::new();
                while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '-') {
                    tag.push(c);
                    self.at += 1;
                }
                Ok(Node::Literal(lexical, Some(tag), None))
            }
            Some('^') => {
                self.expect('^')?;
                self.expect('^')?;
                let dt = match self.node()? {
                    Node::Iri(i) => i,
                    other => return Err(format!("datatype {other:?}")),
                };
                Ok(Node::Literal(lexical, None, Some(dt)))
            }
            _ => Ok(Node::Literal(lexical, None, None)),
        }
    }
}
