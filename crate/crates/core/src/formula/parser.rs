//! Recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! iff    := impl ( "<->" iff )?
//! impl   := coimpl ( "->" impl )?
//! coimpl := or ( "-<" coimpl )?
//! or     := and ( "|" and )*
//! and    := unary ( "&" unary )*
//! unary  := ("neg" | "~" | "box" | "dia") unary | atom | "0" | "1" | "(" iff ")"
//! ```
//!
//! The Unicode symbols ¬ ∼ ∧ ∨ → ⤙ ↔ ■ ♦ are accepted as aliases.

use thiserror::Error;

use super::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    /// Character offset into the input.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Atom(String),
    Zero,
    One,
    Neg,
    GNeg,
    Square,
    Diamond,
    And,
    Or,
    Arrow,
    CoArrow,
    Iff,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Atom(a) => format!("atom `{a}`"),
            Tok::Zero => "`0`".into(),
            Tok::One => "`1`".into(),
            Tok::Neg => "`neg`".into(),
            Tok::GNeg => "`~`".into(),
            Tok::Square => "`box`".into(),
            Tok::Diamond => "`dia`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::CoArrow => "`-<`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |i: usize, message: String| ParseError { position: i, message };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let single = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '&' | '∧' => Some(Tok::And),
            '|' | '∨' => Some(Tok::Or),
            '~' | '∼' => Some(Tok::GNeg),
            '¬' => Some(Tok::Neg),
            '■' => Some(Tok::Square),
            '♦' => Some(Tok::Diamond),
            '→' => Some(Tok::Arrow),
            '⤙' => Some(Tok::CoArrow),
            '↔' => Some(Tok::Iff),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '0' => Some(Tok::Zero),
            '1' => Some(Tok::One),
            _ => None,
        };
        if let Some(t) = single {
            out.push((start, t));
            i += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if rest.starts_with("<->") {
            out.push((start, Tok::Iff));
            i += 3;
        } else if rest.starts_with("->") {
            out.push((start, Tok::Arrow));
            i += 2;
        } else if rest.starts_with("-<") {
            out.push((start, Tok::CoArrow));
            i += 2;
        } else if c.is_ascii_lowercase() {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "neg" => Tok::Neg,
                "box" => Tok::Square,
                "dia" => Tok::Diamond,
                _ => Tok::Atom(word),
            };
            out.push((start, tok));
        } else {
            return Err(err(start, format!("unknown token `{c}`")));
        }
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let (position, tok) = &self.toks[self.pos];
        ParseError {
            position: *position,
            message: format!("expected {expected}, found {}", tok.describe()),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implication()?;
        if *self.peek() == Tok::Iff {
            self.bump();
            return Ok(Formula::iff(lhs, self.iff()?));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.coimplication()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            return Ok(Formula::implies(lhs, self.implication()?));
        }
        Ok(lhs)
    }

    fn coimplication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::CoArrow {
            self.bump();
            return Ok(Formula::coimpl(lhs, self.coimplication()?));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Neg => {
                self.bump();
                Ok(Formula::neg(self.unary()?))
            }
            Tok::GNeg => {
                self.bump();
                Ok(Formula::gneg(self.unary()?))
            }
            Tok::Square => {
                self.bump();
                Ok(Formula::square(self.unary()?))
            }
            Tok::Diamond => {
                self.bump();
                Ok(Formula::diamond(self.unary()?))
            }
            Tok::Atom(a) => {
                self.bump();
                Ok(Formula::Atom(a))
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
                let inner = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error("a formula")),
        }
    }
}

/// Parses a formula; the whole input must be consumed.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let f = p.iff()?;
    if *p.peek() != Tok::End {
        return Err(p.error("end of input"));
    }
    Ok(f)
}
