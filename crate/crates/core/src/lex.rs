//! Tokenizer shared by the Turtle and query parsers.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    IriRef(String),
    PrefixedName { prefix: String, local: String },
    BlankLabel(String),
    Str(String),
    /// `@word`: a language tag or a directive such as `@prefix`.
    At(String),
    DoubleCaret,
    Var(String),
    Integer(u64),
    Word(String),
    Punct(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::IriRef(v) => write!(f, "<{v}>"),
            Token::PrefixedName { prefix, local } => write!(f, "{prefix}:{local}"),
            Token::BlankLabel(v) => write!(f, "_:{v}"),
            Token::Str(_) => f.write_str("string literal"),
            Token::At(v) => write!(f, "@{v}"),
            Token::DoubleCaret => f.write_str("^^"),
            Token::Var(v) => write!(f, "?{v}"),
            Token::Integer(n) => write!(f, "{n}"),
            Token::Word(w) => f.write_str(w),
            Token::Punct(c) => write!(f, "`{c}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LexError {
    pub position: Position,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dialect {
    Turtle,
    Sparql,
}

pub(crate) struct Lexer<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    pos: Position,
    dialect: Dialect,
    out: Vec<(Token, Position)>,
}

impl<'a> Lexer<'a> {
    pub fn new(input: &'a str, dialect: Dialect) -> Self {
        Lexer {
            chars: input.chars().peekable(),
            pos: Position { line: 1, column: 1 },
            dialect,
            out: Vec::new(),
        }
    }

    pub fn tokenize(mut self) -> Result<Vec<(Token, Position)>, LexError> {
        while self.next_token()? {}
        Ok(self.out)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn err(&self, at: Position, message: impl Into<String>) -> LexError {
        LexError {
            position: at,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Emits the statement-terminating dots stripped off a name.
    fn push_trailing_dots(&mut self, dots: usize, start: Position) -> Result<(), LexError> {
        match dots {
            0 => Ok(()),
            1 => {
                let at = Position {
                    line: self.pos.line,
                    column: self.pos.column - 1,
                };
                self.out.push((Token::Punct('.'), at));
                Ok(())
            }
            _ => Err(self.err(start, "unexpected `..`")),
        }
    }

    fn next_token(&mut self) -> Result<bool, LexError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(false);
        };
        let mut dots = 0;
        let token = match c {
            '<' => self.iri_ref(start)?,
            '"' | '\'' => self.string(start)?,
            '@' => {
                self.bump();
                let word = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if word.is_empty() {
                    return Err(self.err(start, "expected a word after `@`"));
                }
                Token::At(word)
            }
            '^' => {
                self.bump();
                if self.peek() != Some('^') {
                    return Err(self.err(start, "expected `^^`"));
                }
                self.bump();
                Token::DoubleCaret
            }
            '?' | '$' if self.dialect == Dialect::Sparql => {
                self.bump();
                let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if name.is_empty() {
                    return Err(self.err(start, "empty variable name"));
                }
                Token::Var(name)
            }
            '_' => {
                self.bump();
                if self.peek() != Some(':') {
                    return Err(self.err(start, "unexpected `_`"));
                }
                self.bump();
                let label = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                if label.is_empty() {
                    return Err(self.err(start, "empty blank node label"));
                }
                Token::BlankLabel(label)
            }
            ':' => {
                self.bump();
                let (local, d) = self.local_name();
                dots = d;
                Token::PrefixedName {
                    prefix: String::new(),
                    local,
                }
            }
            c if c.is_alphanumeric() => {
                let raw = self.take_while(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'));
                let (word, d) = split_trailing_dots(raw);
                if d == 0 && self.peek() == Some(':') {
                    self.bump();
                    let (local, d) = self.local_name();
                    dots = d;
                    Token::PrefixedName { prefix: word, local }
                } else {
                    dots = d;
                    if !word.is_empty() && word.chars().all(|c| c.is_ascii_digit()) {
                        Token::Integer(
                            word.parse()
                                .map_err(|_| self.err(start, "integer out of range"))?,
                        )
                    } else {
                        Token::Word(word)
                    }
                }
            }
            '.' | ';' | ',' | '{' | '}' | '(' | ')' | '*' | '[' | ']' => {
                self.bump();
                Token::Punct(c)
            }
            other => return Err(self.err(start, alloc::format!("unexpected character {other:?}"))),
        };
        self.out.push((token, start));
        self.push_trailing_dots(dots, start)?;
        Ok(true)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn local_name(&mut self) -> (String, usize) {
        let raw = self.take_while(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'));
        split_trailing_dots(raw)
    }

    fn iri_ref(&mut self, start: Position) -> Result<Token, LexError> {
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(start, "unterminated IRI")),
                Some('>') => break,
                Some(c) if c.is_whitespace() => {
                    return Err(self.err(start, "whitespace inside IRI"));
                }
                Some(c) => value.push(c),
            }
        }
        Ok(Token::IriRef(value))
    }

    fn string(&mut self, start: Position) -> Result<Token, LexError> {
        let quote = self.bump().unwrap_or('"');
        let mut value = String::new();
        loop {
            match self.bump() {
                None | Some('\n') | Some('\r') => return Err(self.err(start, "unterminated string")),
                Some(c) if c == quote => break,
                Some('\\') => {
                    let esc_at = self.pos;
                    let c = match self.bump() {
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_escape(4, esc_at)?,
                        Some('U') => self.hex_escape(8, esc_at)?,
                        _ => return Err(self.err(esc_at, "invalid escape sequence")),
                    };
                    value.push(c);
                }
                Some(c) => value.push(c),
            }
        }
        Ok(Token::Str(value))
    }

    fn hex_escape(&mut self, digits: usize, at: Position) -> Result<char, LexError> {
        let mut code = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.err(at, "invalid hex escape"))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| self.err(at, "escape is not a scalar value"))
    }
}

fn split_trailing_dots(mut word: String) -> (String, usize) {
    let mut dots = 0;
    while word.ends_with('.') {
        word.pop();
        dots += 1;
    }
    (word, dots)
}

pub(crate) fn describe(token: Option<&Token>) -> String {
    match token {
        Some(t) => t.to_string(),
        None => "end of input".to_string(),
    }
}
