//! The LTL grammar, its AST, parsers, printers, and finite-trace satisfaction.
//!
//! Formulas follow the grammar
//!
//! ```text
//! φ ::= p | ¬φ | φ ∧ φ | φ ∨ φ | G φ | F φ | φ U φ
//! ```
//!
//! over named atomic propositions. Two textual transcriptions are supported:
//! a fully parenthesized infix form (`F ( blue_room & F ( yellow_room ) )`)
//! and a parenthesis-free Polish prefix form (`F & R F X`). Negation is
//! accepted on arbitrary subformulas, not just atoms, because real datasets
//! place `!` under binary operators (e.g. `U S ! C`).

mod parse;
mod trace;

pub use parse::{parse_infix, parse_prefix};
pub use trace::{evaluate_trace, parse_steps, Trace};

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tokens with fixed meaning in both transcriptions. AP names may not
/// collide with these.
pub const RESERVED_TOKENS: [&str; 8] = ["F", "G", "U", "&", "|", "!", "(", ")"];

#[derive(Debug, Error)]
pub enum LtlError {
    /// A token that is neither an operator, parenthesis, nor known AP name.
    /// Positions are 1-based token indices.
    #[error("unknown token `{token}` at token {position}")]
    UnknownToken { token: String, position: usize },
    /// Arity or parenthesis violation. Positions are 1-based token indices;
    /// a position one past the last token means the input ended early.
    #[error("malformed expression at token {position}: {reason}")]
    MalformedExpression { position: usize, reason: String },
    /// A formula atom that does not resolve against the trace's AP universe.
    #[error("unknown atom `{name}`")]
    UnknownAtom { name: String },
    #[error("trace must contain at least one step")]
    EmptyTrace,
    #[error("invalid atomic proposition `{name}`: {reason}")]
    InvalidAp { name: String, reason: String },
    #[error("duplicate atomic proposition `{name}`")]
    DuplicateAp { name: String },
    #[error("invalid trace step: {0}")]
    InvalidTrace(String),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A named atomic proposition with its English description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicProp {
    pub name: String,
    pub description: String,
}

impl AtomicProp {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
        }
    }

    fn validate(&self) -> Result<(), LtlError> {
        if self.name.is_empty() {
            return Err(LtlError::InvalidAp {
                name: self.name.clone(),
                reason: "name is empty".into(),
            });
        }
        if self.name.chars().any(char::is_whitespace) {
            return Err(LtlError::InvalidAp {
                name: self.name.clone(),
                reason: "name contains whitespace".into(),
            });
        }
        if RESERVED_TOKENS.contains(&self.name.as_str()) {
            return Err(LtlError::InvalidAp {
                name: self.name.clone(),
                reason: "name collides with a reserved grammar token".into(),
            });
        }
        if self.description.is_empty() {
            return Err(LtlError::InvalidAp {
                name: self.name.clone(),
                reason: "description is empty".into(),
            });
        }
        Ok(())
    }
}

/// The set of atomic propositions a formula may draw from.
///
/// Stored in insertion order; lookups and the sorted name view are what the
/// rest of the pipeline uses. Serialized as JSON Lines, one
/// `{"name": ..., "description": ...}` object per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApSet {
    props: Vec<AtomicProp>,
}

impl ApSet {
    pub fn new(props: Vec<AtomicProp>) -> Result<Self, LtlError> {
        let mut seen = BTreeSet::new();
        for p in &props {
            p.validate()?;
            if !seen.insert(p.name.clone()) {
                return Err(LtlError::DuplicateAp {
                    name: p.name.clone(),
                });
            }
        }
        Ok(Self { props })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.props.iter().any(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&AtomicProp> {
        self.props.iter().find(|p| p.name == name)
    }

    pub fn description(&self, name: &str) -> Option<&str> {
        self.get(name).map(|p| p.description.as_str())
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AtomicProp> {
        self.props.iter()
    }

    /// AP names in lexicographic order; the canonical enumeration order.
    pub fn sorted_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.props.iter().map(|p| p.name.clone()).collect();
        names.sort();
        names
    }

    pub fn name_set(&self) -> BTreeSet<String> {
        self.props.iter().map(|p| p.name.clone()).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LtlError> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn read(reader: impl BufRead) -> Result<Self, LtlError> {
        let mut props = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let prop: AtomicProp = serde_json::from_str(&line).map_err(|e| LtlError::Record {
                line: idx + 1,
                message: e.to_string(),
            })?;
            props.push(prop);
        }
        Self::new(props)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LtlError> {
        let mut out = std::fs::File::create(path)?;
        for p in &self.props {
            let line = serde_json::to_string(p).expect("AtomicProp serializes");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Which textual transcription to emit or accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Notation {
    Infix,
    Prefix,
}

/// An LTL formula over named atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Globally(Box<Formula>),
    Finally(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)] // AST constructor, not a negation operator
    pub fn not(child: Formula) -> Self {
        Formula::Not(Box::new(child))
    }

    pub fn and(left: Formula, right: Formula) -> Self {
        Formula::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: Formula, right: Formula) -> Self {
        Formula::Or(Box::new(left), Box::new(right))
    }

    pub fn globally(child: Formula) -> Self {
        Formula::Globally(Box::new(child))
    }

    pub fn finally(child: Formula) -> Self {
        Formula::Finally(Box::new(child))
    }

    pub fn until(left: Formula, right: Formula) -> Self {
        Formula::Until(Box::new(left), Box::new(right))
    }

    /// Node depth: atoms are 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(c) | Formula::Globally(c) | Formula::Finally(c) => 1 + c.depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => {
                1 + l.depth().max(r.depth())
            }
        }
    }

    /// All atom names, deduplicated.
    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a.as_str());
            }
            Formula::Not(c) | Formula::Globally(c) | Formula::Finally(c) => c.collect_atoms(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Render in the requested notation. Round trips through the matching
    /// parser: `parse(print(f)) == f` for both notations.
    pub fn print(&self, notation: Notation) -> String {
        match notation {
            Notation::Infix => self.print_infix(),
            Notation::Prefix => self.print_prefix(),
        }
    }

    /// Infix transcription. Unary operators always parenthesize their
    /// argument; binary operands are parenthesized only when they are
    /// themselves binary, which is exactly what the parser requires.
    fn print_infix(&self) -> String {
        fn operand(f: &Formula) -> String {
            match f {
                Formula::And(..) | Formula::Or(..) | Formula::Until(..) => {
                    format!("( {} )", f.print_infix())
                }
                _ => f.print_infix(),
            }
        }
        match self {
            Formula::Atom(a) => a.clone(),
            Formula::Not(c) => format!("! ( {} )", c.print_infix()),
            Formula::Globally(c) => format!("G ( {} )", c.print_infix()),
            Formula::Finally(c) => format!("F ( {} )", c.print_infix()),
            Formula::And(l, r) => format!("{} & {}", operand(l), operand(r)),
            Formula::Or(l, r) => format!("{} | {}", operand(l), operand(r)),
            Formula::Until(l, r) => format!("{} U {}", operand(l), operand(r)),
        }
    }

    fn print_prefix(&self) -> String {
        match self {
            Formula::Atom(a) => a.clone(),
            Formula::Not(c) => format!("! {}", c.print_prefix()),
            Formula::Globally(c) => format!("G {}", c.print_prefix()),
            Formula::Finally(c) => format!("F {}", c.print_prefix()),
            Formula::And(l, r) => format!("& {} {}", l.print_prefix(), r.print_prefix()),
            Formula::Or(l, r) => format!("| {} {}", l.print_prefix(), r.print_prefix()),
            Formula::Until(l, r) => format!("U {} {}", l.print_prefix(), r.print_prefix()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print_infix())
    }
}
