//! Whitespace-tokenized parsers for the infix and prefix transcriptions.
//!
//! Tokenization is strict whitespace splitting with case-sensitive matching;
//! no lexer-level normalization happens. Error positions are 1-based token
//! indices.

use super::{ApSet, Formula, LtlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Token<'a> {
    LParen,
    RParen,
    Not,
    Globally,
    Finally,
    And,
    Or,
    Until,
    Ident(&'a str),
}

impl<'a> Token<'a> {
    fn classify(raw: &'a str) -> Token<'a> {
        match raw {
            "(" => Token::LParen,
            ")" => Token::RParen,
            "!" => Token::Not,
            "G" => Token::Globally,
            "F" => Token::Finally,
            "&" => Token::And,
            "|" => Token::Or,
            "U" => Token::Until,
            other => Token::Ident(other),
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, raw)| (i + 1, Token::classify(raw)))
        .collect()
}

struct Cursor<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            tokens: tokenize(text),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<&(usize, Token<'a>)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<(usize, Token<'a>)> {
        let t = self.tokens.get(self.pos).copied();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    /// Position to report when the input ends early: one past the last token.
    fn end_position(&self) -> usize {
        self.tokens.len() + 1
    }

    fn malformed(&self, position: usize, reason: impl Into<String>) -> LtlError {
        LtlError::MalformedExpression {
            position,
            reason: reason.into(),
        }
    }
}

fn resolve_atom(name: &str, position: usize, aps: &ApSet) -> Result<Formula, LtlError> {
    if aps.contains(name) {
        Ok(Formula::Atom(name.to_string()))
    } else {
        Err(LtlError::UnknownToken {
            token: name.to_string(),
            position,
        })
    }
}

/// Parse the fully parenthesized infix transcription, e.g.
/// `F ( blue_room & F ( yellow_room ) )`.
///
/// At most one binary operator is accepted per parenthesis level; anything
/// deeper must be parenthesized explicitly. Ambiguous input like `a & b | c`
/// is rejected rather than resolved by a precedence guess.
pub fn parse_infix(text: &str, aps: &ApSet) -> Result<Formula, LtlError> {
    let mut cur = Cursor::new(text);
    let formula = parse_infix_expr(&mut cur, aps)?;
    if let Some((pos, _)) = cur.peek() {
        return Err(cur.malformed(*pos, "trailing tokens after a complete formula"));
    }
    Ok(formula)
}

fn parse_infix_expr(cur: &mut Cursor<'_>, aps: &ApSet) -> Result<Formula, LtlError> {
    let left = parse_infix_operand(cur, aps)?;
    match cur.peek().copied() {
        Some((_, Token::And)) => {
            cur.next();
            let right = parse_infix_operand(cur, aps)?;
            Ok(Formula::and(left, right))
        }
        Some((_, Token::Or)) => {
            cur.next();
            let right = parse_infix_operand(cur, aps)?;
            Ok(Formula::or(left, right))
        }
        Some((_, Token::Until)) => {
            cur.next();
            let right = parse_infix_operand(cur, aps)?;
            Ok(Formula::until(left, right))
        }
        _ => Ok(left),
    }
}

fn parse_infix_operand(cur: &mut Cursor<'_>, aps: &ApSet) -> Result<Formula, LtlError> {
    let Some((pos, token)) = cur.next() else {
        let pos = cur.end_position();
        return Err(cur.malformed(pos, "expected an operand, found end of input"));
    };
    match token {
        Token::Ident(name) => resolve_atom(name, pos, aps),
        Token::Not => Ok(Formula::not(parse_infix_operand(cur, aps)?)),
        Token::Globally => Ok(Formula::globally(parse_infix_operand(cur, aps)?)),
        Token::Finally => Ok(Formula::finally(parse_infix_operand(cur, aps)?)),
        Token::LParen => {
            let inner = parse_infix_expr(cur, aps)?;
            match cur.next() {
                Some((_, Token::RParen)) => Ok(inner),
                Some((p, _)) => Err(cur.malformed(p, "expected `)`")),
                None => {
                    let p = cur.end_position();
                    Err(cur.malformed(p, "expected `)`, found end of input"))
                }
            }
        }
        Token::RParen => Err(cur.malformed(pos, "expected an operand, found `)`")),
        Token::And | Token::Or | Token::Until => {
            Err(cur.malformed(pos, "expected an operand, found a binary operator"))
        }
    }
}

/// Parse the Polish-notation transcription, e.g. `F & R F X`.
///
/// The entire token stream must be consumed; leftover tokens are an error.
pub fn parse_prefix(text: &str, aps: &ApSet) -> Result<Formula, LtlError> {
    let mut cur = Cursor::new(text);
    let formula = parse_prefix_node(&mut cur, aps)?;
    if let Some((pos, _)) = cur.peek() {
        return Err(cur.malformed(*pos, "leftover tokens after a complete formula"));
    }
    Ok(formula)
}

fn parse_prefix_node(cur: &mut Cursor<'_>, aps: &ApSet) -> Result<Formula, LtlError> {
    let Some((pos, token)) = cur.next() else {
        let pos = cur.end_position();
        return Err(cur.malformed(pos, "expected an operator or AP, found end of input"));
    };
    match token {
        Token::Ident(name) => resolve_atom(name, pos, aps),
        Token::Not => Ok(Formula::not(parse_prefix_node(cur, aps)?)),
        Token::Globally => Ok(Formula::globally(parse_prefix_node(cur, aps)?)),
        Token::Finally => Ok(Formula::finally(parse_prefix_node(cur, aps)?)),
        Token::And => {
            let l = parse_prefix_node(cur, aps)?;
            let r = parse_prefix_node(cur, aps)?;
            Ok(Formula::and(l, r))
        }
        Token::Or => {
            let l = parse_prefix_node(cur, aps)?;
            let r = parse_prefix_node(cur, aps)?;
            Ok(Formula::or(l, r))
        }
        Token::Until => {
            let l = parse_prefix_node(cur, aps)?;
            let r = parse_prefix_node(cur, aps)?;
            Ok(Formula::until(l, r))
        }
        Token::LParen | Token::RParen => {
            Err(cur.malformed(pos, "parentheses are not part of the prefix transcription"))
        }
    }
}
