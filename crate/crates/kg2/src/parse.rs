//! Lexer and recursive descent parser for the formula surface syntax.

use std::fmt;

use thiserror::Error;

use crate::syntax::Formula;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at byte {offset}: found {found}, expected {}", expected.join(", "))]
pub struct ParseError {
    /// Byte offset of the offending token in the input.
    pub offset: usize,
    /// What the parser would have accepted at that point.
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Ident(&'a str),
    Zero,
    One,
    Bang,
    Tilde,
    Caret,
    BoxOp,
    DiaOp,
    Amp,
    Pipe,
    Arrow,
    Coarrow,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(i) => return write!(f, "identifier `{i}`"),
            Tok::Zero => "`0`",
            Tok::One => "`1`",
            Tok::Bang => "`!`",
            Tok::Tilde => "`~`",
            Tok::Caret => "`^`",
            Tok::BoxOp => "`[]`",
            Tok::DiaOp => "`<>`",
            Tok::Amp => "`&`",
            Tok::Pipe => "`|`",
            Tok::Arrow => "`->`",
            Tok::Coarrow => "`-<`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(text: &str) -> Result<Vec<(Tok<'_>, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let tok = match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'0' => Tok::Zero,
            b'1' => Tok::One,
            b'!' => Tok::Bang,
            b'~' => Tok::Tilde,
            b'^' => Tok::Caret,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => {
                if bytes.get(i + 1) == Some(&b']') {
                    i += 1;
                    Tok::BoxOp
                } else {
                    return Err(unexpected_char(text, start, &["`[]`"]));
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 1;
                    Tok::DiaOp
                } else {
                    return Err(unexpected_char(text, start, &["`<>`"]));
                }
            }
            b'-' => match bytes.get(i + 1) {
                Some(b'>') => {
                    i += 1;
                    Tok::Arrow
                }
                Some(b'<') => {
                    i += 1;
                    Tok::Coarrow
                }
                _ => return Err(unexpected_char(text, start, &["`->`", "`-<`"])),
            },
            b'a'..=b'z' => {
                let mut j = i + 1;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let ident = &text[i..j];
                i = j - 1;
                Tok::Ident(ident)
            }
            _ => return Err(unexpected_char(text, start, &["a formula token"])),
        };
        i += 1;
        toks.push((tok, start));
    }
    toks.push((Tok::Eof, text.len()));
    Ok(toks)
}

fn unexpected_char(text: &str, offset: usize, expected: &[&str]) -> ParseError {
    let ch = text[offset..].chars().next().map_or_else(
        || "end of input".to_string(),
        |c| format!("`{c}`"),
    );
    ParseError {
        offset,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: ch,
    }
}

struct Parser<'a> {
    toks: Vec<(Tok<'a>, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Tok<'a> {
        self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok<'a> {
        let t = self.peek();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    // impl := coimpl ('->' impl)?        (right-associative)
    fn parse_impl(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_coimpl()?;
        if self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.parse_impl()?;
            Ok(Formula::impl_(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // coimpl := or ('-<' or)*            (left-associative)
    fn parse_coimpl(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_or()?;
        while self.peek() == Tok::Coarrow {
            self.bump();
            let rhs = self.parse_or()?;
            lhs = Formula::coimpl(lhs, rhs);
        }
        Ok(lhs)
    }

    // or := and ('|' and)*
    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    // and := unary ('&' unary)*
    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_unary()?;
        while self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::neg(self.parse_unary()?))
            }
            Tok::Tilde => {
                self.bump();
                Ok(Formula::gneg(self.parse_unary()?))
            }
            Tok::Caret => {
                self.bump();
                Ok(Formula::delta(self.parse_unary()?))
            }
            Tok::BoxOp => {
                self.bump();
                Ok(Formula::box_(self.parse_unary()?))
            }
            Tok::DiaOp => {
                self.bump();
                Ok(Formula::dia(self.parse_unary()?))
            }
            Tok::Ident(name) => {
                let f = Formula::atom(name);
                self.bump();
                Ok(f)
            }
            Tok::Zero => {
                self.bump();
                Ok(Formula::Bot)
            }
            Tok::One => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.parse_impl()?;
                if self.peek() != Tok::RParen {
                    return Err(self.err(&["`)`"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.err(&[
                "an atom", "`0`", "`1`", "`!`", "`~`", "`^`", "`[]`", "`<>`", "`(`",
            ])),
        }
    }
}

/// Parses a formula from its surface syntax.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.parse_impl()?;
    if p.peek() != Tok::Eof {
        return Err(p.err(&["end of input", "a binary connective"]));
    }
    Ok(f)
}
