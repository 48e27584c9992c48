//! The English-like canonical form, a bijective rendering of a formula.
//!
//! A formula is transcribed by replacing each grammar element with an
//! English phrase and wrapping operator arguments in parentheses, with
//! commas separating the arguments of binary operators:
//!
//! ```text
//! F ( B | R )   ⇄   finally ( or ( go to the blue room , go to the red room ) )
//! ```
//!
//! Unary operators use the same `( … )` wrapping (`not ( scan )`) so the
//! transcription grammar stays uniform. Leaves are AP phrases, which may
//! span several tokens; they are delimited by `,`, `)`, or the end of input,
//! and must contain no parentheses or commas, so parsing them back is
//! unambiguous even when one phrase is a token-prefix of another.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{ApSet, Formula, LtlError};

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("no phrase for AP `{ap}` in the lexicon")]
    MissingPhrase { ap: String },
    #[error("unparsable canonical form at token {position}: {reason}")]
    UnparsableCanonical { position: usize, reason: String },
    #[error("leaf phrase `{phrase}` matches {matches} AP phrases, expected exactly 1")]
    AmbiguousPhrase { phrase: String, matches: usize },
    #[error("invalid lexicon: {reason}")]
    InvalidLexicon { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("lexicon file: {0}")]
    Format(#[from] serde_json::Error),
}

/// English phrases for the six non-atom node kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorPhrases {
    pub finally: String,
    pub globally: String,
    pub until: String,
    pub and: String,
    pub or: String,
    pub not: String,
}

impl Default for OperatorPhrases {
    fn default() -> Self {
        Self {
            finally: "finally".into(),
            globally: "globally".into(),
            until: "until".into(),
            and: "and".into(),
            or: "or".into(),
            not: "not".into(),
        }
    }
}

impl OperatorPhrases {
    fn entries(&self) -> [(&'static str, &str); 6] {
        [
            ("finally", &self.finally),
            ("globally", &self.globally),
            ("until", &self.until),
            ("and", &self.and),
            ("or", &self.or),
            ("not", &self.not),
        ]
    }
}

/// Operator phrases, AP phrases, and per-structure sentence templates.
///
/// Serialized as a single JSON document with `operator_phrases`,
/// `ap_phrases`, and `structure_templates` sections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    #[serde(default)]
    pub operator_phrases: OperatorPhrases,
    pub ap_phrases: BTreeMap<String, String>,
    #[serde(default)]
    pub structure_templates: BTreeMap<String, String>,
}

impl Lexicon {
    pub fn new(
        operator_phrases: OperatorPhrases,
        ap_phrases: BTreeMap<String, String>,
        structure_templates: BTreeMap<String, String>,
    ) -> Result<Self, CanonicalError> {
        let lex = Self {
            operator_phrases,
            ap_phrases,
            structure_templates,
        };
        lex.validate()?;
        Ok(lex)
    }

    /// A lexicon whose AP phrases are the APSet descriptions and whose
    /// operator phrases are the defaults.
    pub fn from_apset(aps: &ApSet) -> Self {
        let ap_phrases = aps
            .iter()
            .map(|p| (p.name.clone(), p.description.clone()))
            .collect();
        Self {
            operator_phrases: OperatorPhrases::default(),
            ap_phrases,
            structure_templates: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), CanonicalError> {
        let mut seen_ops = BTreeMap::new();
        for (kind, phrase) in self.operator_phrases.entries() {
            if phrase.is_empty()
                || phrase.chars().any(char::is_whitespace)
                || phrase.chars().any(|c| c.is_uppercase())
            {
                return Err(CanonicalError::InvalidLexicon {
                    reason: format!(
                        "operator phrase for `{kind}` must be a single lowercase token, got `{phrase}`"
                    ),
                });
            }
            if let Some(prev) = seen_ops.insert(phrase.to_string(), kind) {
                return Err(CanonicalError::InvalidLexicon {
                    reason: format!("operators `{prev}` and `{kind}` share the phrase `{phrase}`"),
                });
            }
        }
        let mut seen_phrases: BTreeMap<&str, &str> = BTreeMap::new();
        for (ap, phrase) in &self.ap_phrases {
            if phrase.trim().is_empty() {
                return Err(CanonicalError::InvalidLexicon {
                    reason: format!("AP `{ap}` has an empty phrase"),
                });
            }
            if phrase.contains(['(', ')', ',']) {
                return Err(CanonicalError::InvalidLexicon {
                    reason: format!("AP phrase `{phrase}` contains parentheses or commas"),
                });
            }
            if let Some(prev) = seen_phrases.insert(phrase.as_str(), ap.as_str()) {
                return Err(CanonicalError::InvalidLexicon {
                    reason: format!("APs `{prev}` and `{ap}` share the phrase `{phrase}`"),
                });
            }
        }
        Ok(())
    }

    pub fn ap_phrase(&self, ap: &str) -> Result<&str, CanonicalError> {
        self.ap_phrases
            .get(ap)
            .map(String::as_str)
            .ok_or_else(|| CanonicalError::MissingPhrase { ap: ap.to_string() })
    }

    /// APs whose phrase equals `phrase`, exactly.
    fn aps_for_phrase(&self, phrase: &str) -> Vec<&str> {
        self.ap_phrases
            .iter()
            .filter(|(_, p)| p.as_str() == phrase)
            .map(|(ap, _)| ap.as_str())
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CanonicalError> {
        let text = std::fs::read_to_string(path)?;
        let lex: Lexicon = serde_json::from_str(&text)?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CanonicalError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// The canonical transcription of a formula: space-separated tokens with
/// balanced parentheses and one comma per binary node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalForm(String);

impl CanonicalForm {
    pub fn new(text: impl Into<String>) -> Self {
        Self(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn token_count(&self) -> usize {
        self.0.split_whitespace().count()
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Render `formula` in the canonical form. Deterministic, and inverted
/// exactly by [`from_canonical`].
pub fn to_canonical(formula: &Formula, lex: &Lexicon) -> Result<CanonicalForm, CanonicalError> {
    fn render(f: &Formula, lex: &Lexicon, out: &mut String) -> Result<(), CanonicalError> {
        match f {
            Formula::Atom(a) => {
                out.push_str(lex.ap_phrase(a)?);
                Ok(())
            }
            Formula::Not(c) => render_unary(lex.operator_phrases.not.as_str(), c, lex, out),
            Formula::Finally(c) => render_unary(lex.operator_phrases.finally.as_str(), c, lex, out),
            Formula::Globally(c) => {
                render_unary(lex.operator_phrases.globally.as_str(), c, lex, out)
            }
            Formula::And(l, r) => render_binary(lex.operator_phrases.and.as_str(), l, r, lex, out),
            Formula::Or(l, r) => render_binary(lex.operator_phrases.or.as_str(), l, r, lex, out),
            Formula::Until(l, r) => {
                render_binary(lex.operator_phrases.until.as_str(), l, r, lex, out)
            }
        }
    }

    fn render_unary(
        op: &str,
        child: &Formula,
        lex: &Lexicon,
        out: &mut String,
    ) -> Result<(), CanonicalError> {
        out.push_str(op);
        out.push_str(" ( ");
        render(child, lex, out)?;
        out.push_str(" )");
        Ok(())
    }

    fn render_binary(
        op: &str,
        left: &Formula,
        right: &Formula,
        lex: &Lexicon,
        out: &mut String,
    ) -> Result<(), CanonicalError> {
        out.push_str(op);
        out.push_str(" ( ");
        render(left, lex, out)?;
        out.push_str(" , ");
        render(right, lex, out)?;
        out.push_str(" )");
        Ok(())
    }

    let mut out = String::new();
    render(formula, lex, &mut out)?;
    Ok(CanonicalForm(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arity {
    Unary,
    Binary,
}

/// Parse a canonical form back into a formula. Inverse of [`to_canonical`].
pub fn from_canonical(form: &CanonicalForm, lex: &Lexicon) -> Result<Formula, CanonicalError> {
    let tokens: Vec<&str> = form.as_str().split_whitespace().collect();
    let mut pos = 0;
    let formula = parse_node(&tokens, &mut pos, lex)?;
    if pos != tokens.len() {
        return Err(CanonicalError::UnparsableCanonical {
            position: pos + 1,
            reason: "trailing tokens after a complete form".into(),
        });
    }
    Ok(formula)
}

fn operator_kind(lex: &Lexicon, token: &str) -> Option<(&'static str, Arity)> {
    let ops = &lex.operator_phrases;
    if token == ops.finally {
        Some(("finally", Arity::Unary))
    } else if token == ops.globally {
        Some(("globally", Arity::Unary))
    } else if token == ops.not {
        Some(("not", Arity::Unary))
    } else if token == ops.and {
        Some(("and", Arity::Binary))
    } else if token == ops.or {
        Some(("or", Arity::Binary))
    } else if token == ops.until {
        Some(("until", Arity::Binary))
    } else {
        None
    }
}

fn build_node(kind: &str, children: Vec<Formula>) -> Formula {
    let mut it = children.into_iter();
    match kind {
        "finally" => Formula::finally(it.next().unwrap()),
        "globally" => Formula::globally(it.next().unwrap()),
        "not" => Formula::not(it.next().unwrap()),
        "and" => Formula::and(it.next().unwrap(), it.next().unwrap()),
        "or" => Formula::or(it.next().unwrap(), it.next().unwrap()),
        "until" => Formula::until(it.next().unwrap(), it.next().unwrap()),
        _ => unreachable!("operator kinds are fixed"),
    }
}

fn parse_node(tokens: &[&str], pos: &mut usize, lex: &Lexicon) -> Result<Formula, CanonicalError> {
    if *pos >= tokens.len() {
        return Err(CanonicalError::UnparsableCanonical {
            position: *pos + 1,
            reason: "expected an operator or AP phrase, found end of input".into(),
        });
    }
    // An operator node only when the phrase is immediately followed by `(`;
    // otherwise the token starts an AP-phrase leaf.
    if let Some((kind, arity)) = operator_kind(lex, tokens[*pos]) {
        if tokens.get(*pos + 1) == Some(&"(") {
            *pos += 2;
            let mut children = vec![parse_node(tokens, pos, lex)?];
            if arity == Arity::Binary {
                expect(tokens, pos, ",")?;
                children.push(parse_node(tokens, pos, lex)?);
            }
            expect(tokens, pos, ")")?;
            return Ok(build_node(kind, children));
        }
    }
    parse_leaf(tokens, pos, lex)
}

fn expect(tokens: &[&str], pos: &mut usize, want: &str) -> Result<(), CanonicalError> {
    match tokens.get(*pos) {
        Some(&t) if t == want => {
            *pos += 1;
            Ok(())
        }
        Some(&t) => Err(CanonicalError::UnparsableCanonical {
            position: *pos + 1,
            reason: format!("expected `{want}`, found `{t}`"),
        }),
        None => Err(CanonicalError::UnparsableCanonical {
            position: *pos + 1,
            reason: format!("expected `{want}`, found end of input"),
        }),
    }
}

fn parse_leaf(tokens: &[&str], pos: &mut usize, lex: &Lexicon) -> Result<Formula, CanonicalError> {
    let start = *pos;
    while *pos < tokens.len() && tokens[*pos] != "," && tokens[*pos] != ")" {
        if tokens[*pos] == "(" {
            return Err(CanonicalError::UnparsableCanonical {
                position: *pos + 1,
                reason: "`(` inside an AP-phrase leaf".into(),
            });
        }
        *pos += 1;
    }
    if *pos == start {
        return Err(CanonicalError::UnparsableCanonical {
            position: *pos + 1,
            reason: "expected an AP phrase".into(),
        });
    }
    let phrase = tokens[start..*pos].join(" ");
    let matches = lex.aps_for_phrase(&phrase);
    if matches.len() != 1 {
        return Err(CanonicalError::AmbiguousPhrase {
            phrase,
            matches: matches.len(),
        });
    }
    Ok(Formula::Atom(matches[0].to_string()))
}

impl From<LtlError> for CanonicalError {
    fn from(e: LtlError) -> Self {
        CanonicalError::InvalidLexicon {
            reason: e.to_string(),
        }
    }
}
