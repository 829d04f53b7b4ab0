use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ContainsFilter, PatternTerm, Query, QueryError, Selection, TriplePattern};
use crate::lex::{describe, Dialect, Lexer, Position, Token};
use crate::rdf::{ns, Iri, Literal, PrefixMap, Term};

/// Parses the supported SELECT form:
///
/// ```text
/// PREFIX p: <iri> ...
/// SELECT [DISTINCT] (?v ... | *) [WHERE] { tp ('.' tp)* ['.'] FILTER(CONTAINS(LCASE(STR(?v)), "s"))* }
/// [LIMIT n] [OFFSET n]
/// ```
///
/// The standard know-how prefixes are pre-declared.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let tokens = Lexer::new(text, Dialect::Sparql)
        .tokenize()
        .map_err(|e| QueryError::Syntax {
            position: e.position,
            message: e.message,
        })?;
    let mut p = Parser {
        tokens,
        at: 0,
        prefixes: PrefixMap::default(),
    };
    let query = p.query()?;
    query.validate()?;
    Ok(query)
}

struct Parser {
    tokens: Vec<(Token, Position)>,
    at: usize,
    prefixes: PrefixMap,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at).map(|(t, _)| t)
    }

    fn position(&self) -> Position {
        match self.tokens.get(self.at) {
            Some((_, p)) => *p,
            None => self.tokens.last().map(|(_, p)| *p).unwrap_or_default(),
        }
    }

    fn syntax(&self, message: impl Into<String>) -> QueryError {
        QueryError::Syntax {
            position: self.position(),
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> QueryError {
        self.syntax(format!("expected {wanted}, found {}", describe(self.peek())))
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Punct(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QueryError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn query(&mut self) -> Result<Query, QueryError> {
        while self.eat_keyword("PREFIX") {
            let prefix = match self.peek() {
                Some(Token::PrefixedName { prefix, local }) if local.is_empty() => prefix.clone(),
                _ => return Err(self.unexpected("a prefix label such as `ex:`")),
            };
            self.at += 1;
            let namespace = self.iri_ref()?;
            self.prefixes.insert(prefix, namespace);
        }

        self.expect_keyword("SELECT")?;
        let distinct = self.eat_keyword("DISTINCT");
        let selection = if self.eat_punct('*') {
            Selection::Star
        } else {
            let mut vars = Vec::new();
            while let Some(Token::Var(v)) = self.peek() {
                vars.push(v.clone());
                self.at += 1;
            }
            if vars.is_empty() {
                return Err(self.unexpected("`*` or a variable"));
            }
            Selection::Vars(vars)
        };

        self.eat_keyword("WHERE");
        self.expect_punct('{')?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            if self.eat_punct('}') {
                break;
            }
            if self.eat_keyword("FILTER") {
                filters.push(self.filter()?);
                continue;
            }
            patterns.push(self.triple_pattern()?);
            if !self.eat_punct('.') && !matches!(self.peek(), Some(Token::Punct('}'))) && !self.is_keyword("FILTER") {
                return Err(self.unexpected("`.` or `}`"));
            }
        }

        let mut limit = None;
        let mut offset = None;
        loop {
            if limit.is_none() && self.eat_keyword("LIMIT") {
                limit = Some(self.integer()?);
            } else if offset.is_none() && self.eat_keyword("OFFSET") {
                offset = Some(self.integer()?);
            } else {
                break;
            }
        }
        if self.peek().is_some() {
            return Err(self.unexpected("end of query"));
        }
        Ok(Query {
            selection,
            distinct,
            patterns,
            filters,
            limit,
            offset,
        })
    }

    fn integer(&mut self) -> Result<usize, QueryError> {
        match self.peek() {
            Some(Token::Integer(n)) => {
                let n = usize::try_from(*n).map_err(|_| self.syntax("integer out of range"))?;
                self.at += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("a non-negative integer")),
        }
    }

    fn filter(&mut self) -> Result<ContainsFilter, QueryError> {
        self.expect_punct('(')?;
        self.expect_keyword("CONTAINS")?;
        self.expect_punct('(')?;
        self.expect_keyword("LCASE")?;
        self.expect_punct('(')?;
        self.expect_keyword("STR")?;
        self.expect_punct('(')?;
        let var = match self.peek() {
            Some(Token::Var(v)) => v.clone(),
            _ => return Err(self.unexpected("a variable")),
        };
        self.at += 1;
        self.expect_punct(')')?;
        self.expect_punct(')')?;
        self.expect_punct(',')?;
        let needle = match self.peek() {
            Some(Token::Str(s)) => s.clone(),
            _ => return Err(self.unexpected("a string literal")),
        };
        self.at += 1;
        self.expect_punct(')')?;
        self.expect_punct(')')?;
        Ok(ContainsFilter { var, needle })
    }

    fn iri_ref(&mut self) -> Result<Iri, QueryError> {
        match self.peek() {
            Some(Token::IriRef(raw)) => {
                let iri = Iri::new(raw.clone())?;
                self.at += 1;
                Ok(iri)
            }
            _ => Err(self.unexpected("an absolute IRI in angle brackets")),
        }
    }

    fn iri(&mut self) -> Result<Option<Iri>, QueryError> {
        match self.peek() {
            Some(Token::IriRef(_)) => self.iri_ref().map(Some),
            Some(Token::PrefixedName { prefix, local }) => {
                let position = self.position();
                let Some(namespace) = self.prefixes.get(prefix) else {
                    return Err(QueryError::UnknownPrefix {
                        position,
                        prefix: prefix.clone(),
                    });
                };
                let iri = Iri::new(format!("{}{}", namespace.as_str(), local))?;
                self.at += 1;
                Ok(Some(iri))
            }
            _ => Ok(None),
        }
    }

    fn pattern_term(&mut self, position_name: &str) -> Result<PatternTerm, QueryError> {
        if let Some(Token::Var(v)) = self.peek() {
            let v = v.clone();
            self.at += 1;
            return Ok(PatternTerm::Var(v));
        }
        if let Some(iri) = self.iri()? {
            return Ok(PatternTerm::Term(Term::Iri(iri)));
        }
        match self.peek() {
            Some(Token::Word(w)) if w == "a" && position_name == "predicate" => {
                self.at += 1;
                Ok(PatternTerm::Term(Term::iri(format!("{}type", ns::RDF))?))
            }
            Some(Token::Str(lexical)) => {
                let lexical = lexical.clone();
                self.at += 1;
                let literal = match self.peek() {
                    Some(Token::At(tag)) => {
                        let tag = tag.clone();
                        self.at += 1;
                        Literal::with_language(lexical, tag)?
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
                Ok(PatternTerm::Term(Term::Literal(literal)))
            }
            Some(Token::BlankLabel(_)) => Err(QueryError::BlankNodeInPattern),
            _ => Err(self.unexpected(&format!("a {position_name}"))),
        }
    }

    fn triple_pattern(&mut self) -> Result<TriplePattern, QueryError> {
        let start = self.position();
        let s = self.pattern_term("subject")?;
        let p = self.pattern_term("predicate")?;
        let o = self.pattern_term("object")?;
        TriplePattern::new(s, p, o).map_err(|e| match e {
            QueryError::Term(t) => QueryError::Syntax {
                position: start,
                message: t.to_string(),
            },
            other => other,
        })
    }
}
