//! Minimal S-expression reader shared by every input format.
//!
//! Comments run from `;` to end of line. Atoms are either integers or
//! symbols; symbols may not contain `!`, `|`, `#` or `"` so that names
//! generated downstream (SMT helpers, solver model values) can never
//! collide with user identifiers.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Symbol(String, Pos),
    Int(i64, Pos),
    List(Vec<SExpr>, Pos),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            msg: msg.into(),
        }
    }
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Symbol(_, p) | SExpr::Int(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            _ => None,
        }
    }

    /// The head symbol of a non-empty list, if it has one.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(|h| h.as_symbol())
    }

    pub fn expect_symbol(&self, what: &str) -> Result<&str, SyntaxError> {
        self.as_symbol()
            .ok_or_else(|| SyntaxError::new(self.pos(), format!("expected {what}, found {self}")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[SExpr], SyntaxError> {
        self.as_list()
            .ok_or_else(|| SyntaxError::new(self.pos(), format!("expected {what}, found {self}")))
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Symbol(s, _) => write!(f, "{s}"),
            SExpr::Int(i, _) => write!(f, "{i}"),
            SExpr::List(items, _) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn is_symbol_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ';' | '!' | '|' | '#' | '"'))
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, col: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
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

    fn parse_expr(&mut self) -> Result<Option<SExpr>, SyntaxError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(SyntaxError::new(start, "unclosed parenthesis")),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(SExpr::List(items, start)));
                        }
                        Some(_) => {
                            let e = self.parse_expr()?.expect("peeked a character");
                            items.push(e);
                        }
                    }
                }
            }
            ')' => Err(SyntaxError::new(start, "unexpected ')'")),
            c if is_symbol_char(c) => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if !is_symbol_char(c) {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                if let Ok(i) = text.parse::<i64>() {
                    Ok(Some(SExpr::Int(i, start)))
                } else {
                    Ok(Some(SExpr::Symbol(text, start)))
                }
            }
            other => Err(SyntaxError::new(start, format!("illegal character {other:?}"))),
        }
    }
}

/// Parses every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, SyntaxError> {
    let mut lexer = Lexer::new(text);
    let mut out = Vec::new();
    while let Some(e) = lexer.parse_expr()? {
        out.push(e);
    }
    Ok(out)
}

/// Parses exactly one top-level expression.
pub fn parse_one(text: &str) -> Result<SExpr, SyntaxError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(SyntaxError::new(Pos { line: 1, col: 1 }, "empty input")),
        _ => Err(SyntaxError::new(all[1].pos(), "trailing input after expression")),
    }
}

/// Splits a keyword-argument list like `:parameters (..) :effect (..)` into
/// pairs. Keys must start with `:`.
pub fn keyword_pairs(items: &[SExpr]) -> Result<Vec<(&str, &SExpr)>, SyntaxError> {
    let mut out = Vec::new();
    let mut it = items.iter();
    while let Some(k) = it.next() {
        let key = k.expect_symbol("keyword")?;
        if !key.starts_with(':') {
            return Err(SyntaxError::new(k.pos(), format!("expected keyword, found {key}")));
        }
        let v = it
            .next()
            .ok_or_else(|| SyntaxError::new(k.pos(), format!("missing value for {key}")))?;
        out.push((key, v));
    }
    Ok(out)
}
