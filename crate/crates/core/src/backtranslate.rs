//! LTL → structured English generation.
//!
//! Two paths are provided. The rule path walks the syntax tree and realizes
//! it directly with English connective words. The template path matches a
//! formula against a list of [`LtlStructure`]s (formula templates with
//! AP-shaped holes) and fills the matching structure's sentence template
//! with the phrases of the bound APs; this is the path that keeps the human
//! annotation count at `#structures + #APs` instead of one sentence per
//! formula.
//!
//! A skeleton with zero holes is a concrete formula and its template is used
//! verbatim, which is how per-formula seed sentences are configured for
//! datasets too irregular for compositional templates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{CanonicalError, Lexicon};
use crate::ltl::{Formula, LtlError};

#[derive(Debug, Error)]
pub enum BacktranslateError {
    #[error("formula does not match any structure")]
    NoMatchingStructure,
    #[error("formula matches multiple structures: {}", ids.join(", "))]
    MultipleMatchingStructures { ids: Vec<String> },
    #[error("no template for structure `{structure_id}`")]
    MissingTemplate { structure_id: String },
    #[error("no phrase for AP `{ap}` in the lexicon")]
    MissingPhrase { ap: String },
    #[error("invalid structure `{id}`: {reason}")]
    InvalidStructure { id: String, reason: String },
    #[error("invalid template for `{structure_id}`: {reason}")]
    InvalidTemplate {
        structure_id: String,
        reason: String,
    },
    #[error("hole {hole} is unbound")]
    UnboundHole { hole: u32 },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<CanonicalError> for BacktranslateError {
    fn from(e: CanonicalError) -> Self {
        match e {
            CanonicalError::MissingPhrase { ap } => BacktranslateError::MissingPhrase { ap },
            other => BacktranslateError::InvalidStructure {
                id: String::new(),
                reason: other.to_string(),
            },
        }
    }
}

/// A formula template: the shape of a formula with holes in atom positions.
///
/// Holes are numbered from 1. Concrete atoms may appear alongside holes, and
/// a skeleton with no holes at all is simply a formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Skeleton {
    Hole(u32),
    Atom(String),
    Not(Box<Skeleton>),
    And(Box<Skeleton>, Box<Skeleton>),
    Or(Box<Skeleton>, Box<Skeleton>),
    Globally(Box<Skeleton>),
    Finally(Box<Skeleton>),
    Until(Box<Skeleton>, Box<Skeleton>),
}

impl Skeleton {
    /// Parse the prefix transcription with `H1..Hk` hole tokens, e.g.
    /// `F & H1 F H2`. Identifiers that are not hole tokens are concrete atoms.
    pub fn parse(text: &str) -> Result<Skeleton, BacktranslateError> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let mut pos = 0;
        let skel = Self::parse_node(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(BacktranslateError::InvalidStructure {
                id: String::new(),
                reason: format!("leftover tokens at token {}", pos + 1),
            });
        }
        Ok(skel)
    }

    fn parse_node(tokens: &[&str], pos: &mut usize) -> Result<Skeleton, BacktranslateError> {
        let Some(&token) = tokens.get(*pos) else {
            return Err(BacktranslateError::InvalidStructure {
                id: String::new(),
                reason: "unexpected end of skeleton".into(),
            });
        };
        *pos += 1;
        let unary = |pos: &mut usize| Self::parse_node(tokens, pos).map(Box::new);
        Ok(match token {
            "!" => Skeleton::Not(unary(pos)?),
            "G" => Skeleton::Globally(unary(pos)?),
            "F" => Skeleton::Finally(unary(pos)?),
            "&" => Skeleton::And(unary(pos)?, unary(pos)?),
            "|" => Skeleton::Or(unary(pos)?, unary(pos)?),
            "U" => Skeleton::Until(unary(pos)?, unary(pos)?),
            ident => match parse_hole_token(ident) {
                Some(k) => Skeleton::Hole(k),
                None => Skeleton::Atom(ident.to_string()),
            },
        })
    }

    /// Hole indices present, deduplicated.
    pub fn holes(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes(&self, out: &mut BTreeSet<u32>) {
        match self {
            Skeleton::Hole(k) => {
                out.insert(*k);
            }
            Skeleton::Atom(_) => {}
            Skeleton::Not(c) | Skeleton::Globally(c) | Skeleton::Finally(c) => c.collect_holes(out),
            Skeleton::And(l, r) | Skeleton::Or(l, r) | Skeleton::Until(l, r) => {
                l.collect_holes(out);
                r.collect_holes(out);
            }
        }
    }

    fn print_prefix(&self) -> String {
        match self {
            Skeleton::Hole(k) => format!("H{k}"),
            Skeleton::Atom(a) => a.clone(),
            Skeleton::Not(c) => format!("! {}", c.print_prefix()),
            Skeleton::Globally(c) => format!("G {}", c.print_prefix()),
            Skeleton::Finally(c) => format!("F {}", c.print_prefix()),
            Skeleton::And(l, r) => format!("& {} {}", l.print_prefix(), r.print_prefix()),
            Skeleton::Or(l, r) => format!("| {} {}", l.print_prefix(), r.print_prefix()),
            Skeleton::Until(l, r) => format!("U {} {}", l.print_prefix(), r.print_prefix()),
        }
    }
}

impl fmt::Display for Skeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print_prefix())
    }
}

fn parse_hole_token(token: &str) -> Option<u32> {
    let rest = token.strip_prefix('H')?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok().filter(|&k| k >= 1)
}

/// Replace every atom with a hole, numbering holes by first occurrence.
/// Repeated atoms map to the same hole, so `G & U S ! C F C` and
/// `G & U a ! b F b` share a skeleton. Returns the skeleton and the AP bound
/// to each hole.
pub fn skeletonize(formula: &Formula) -> (Skeleton, BTreeMap<u32, String>) {
    fn walk(f: &Formula, next: &mut u32, seen: &mut BTreeMap<String, u32>) -> Skeleton {
        match f {
            Formula::Atom(a) => {
                let k = *seen.entry(a.clone()).or_insert_with(|| {
                    let k = *next;
                    *next += 1;
                    k
                });
                Skeleton::Hole(k)
            }
            Formula::Not(c) => Skeleton::Not(Box::new(walk(c, next, seen))),
            Formula::Globally(c) => Skeleton::Globally(Box::new(walk(c, next, seen))),
            Formula::Finally(c) => Skeleton::Finally(Box::new(walk(c, next, seen))),
            Formula::And(l, r) => {
                Skeleton::And(Box::new(walk(l, next, seen)), Box::new(walk(r, next, seen)))
            }
            Formula::Or(l, r) => {
                Skeleton::Or(Box::new(walk(l, next, seen)), Box::new(walk(r, next, seen)))
            }
            Formula::Until(l, r) => {
                Skeleton::Until(Box::new(walk(l, next, seen)), Box::new(walk(r, next, seen)))
            }
        }
    }
    let mut next = 1;
    let mut seen = BTreeMap::new();
    let skeleton = walk(formula, &mut next, &mut seen);
    let binding = seen.into_iter().map(|(ap, k)| (k, ap)).collect();
    (skeleton, binding)
}

/// A named structure: a skeleton plus its slot metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtlStructure {
    pub id: String,
    pub skeleton: Skeleton,
    pub slot_count: u32,
    pub distinct_slots: bool,
}

impl LtlStructure {
    pub fn new(
        id: impl Into<String>,
        skeleton: Skeleton,
        distinct_slots: bool,
    ) -> Result<Self, BacktranslateError> {
        let id = id.into();
        let holes = skeleton.holes();
        let slot_count = holes.iter().max().copied().unwrap_or(0);
        for k in 1..=slot_count {
            if !holes.contains(&k) {
                return Err(BacktranslateError::InvalidStructure {
                    id,
                    reason: format!("holes are not numbered contiguously: H{k} is missing"),
                });
            }
        }
        Ok(Self {
            id,
            skeleton,
            slot_count,
            distinct_slots,
        })
    }

    /// Fill every hole with the bound AP name.
    pub fn instantiate(
        &self,
        binding: &BTreeMap<u32, String>,
    ) -> Result<Formula, BacktranslateError> {
        if self.distinct_slots {
            let values: BTreeSet<&String> = binding.values().collect();
            if values.len() != binding.len() {
                return Err(BacktranslateError::InvalidStructure {
                    id: self.id.clone(),
                    reason: "distinct_slots structure bound twice to the same AP".into(),
                });
            }
        }
        fn fill(
            s: &Skeleton,
            binding: &BTreeMap<u32, String>,
        ) -> Result<Formula, BacktranslateError> {
            Ok(match s {
                Skeleton::Hole(k) => Formula::Atom(
                    binding
                        .get(k)
                        .ok_or(BacktranslateError::UnboundHole { hole: *k })?
                        .clone(),
                ),
                Skeleton::Atom(a) => Formula::Atom(a.clone()),
                Skeleton::Not(c) => Formula::not(fill(c, binding)?),
                Skeleton::Globally(c) => Formula::globally(fill(c, binding)?),
                Skeleton::Finally(c) => Formula::finally(fill(c, binding)?),
                Skeleton::And(l, r) => Formula::and(fill(l, binding)?, fill(r, binding)?),
                Skeleton::Or(l, r) => Formula::or(fill(l, binding)?, fill(r, binding)?),
                Skeleton::Until(l, r) => Formula::until(fill(l, binding)?, fill(r, binding)?),
            })
        }
        fill(&self.skeleton, binding)
    }

    /// Unify a formula against this structure's skeleton. Returns the hole
    /// binding when the operator tree matches and bindings are consistent
    /// (same hole → same AP everywhere; injective when `distinct_slots`).
    pub fn unify(&self, formula: &Formula) -> Option<BTreeMap<u32, String>> {
        fn go(s: &Skeleton, f: &Formula, binding: &mut BTreeMap<u32, String>) -> bool {
            match (s, f) {
                (Skeleton::Hole(k), Formula::Atom(a)) => match binding.get(k) {
                    Some(bound) => bound == a,
                    None => {
                        binding.insert(*k, a.clone());
                        true
                    }
                },
                (Skeleton::Atom(sa), Formula::Atom(fa)) => sa == fa,
                (Skeleton::Not(sc), Formula::Not(fc))
                | (Skeleton::Globally(sc), Formula::Globally(fc))
                | (Skeleton::Finally(sc), Formula::Finally(fc)) => go(sc, fc, binding),
                (Skeleton::And(sl, sr), Formula::And(fl, fr))
                | (Skeleton::Or(sl, sr), Formula::Or(fl, fr))
                | (Skeleton::Until(sl, sr), Formula::Until(fl, fr)) => {
                    go(sl, fl, binding) && go(sr, fr, binding)
                }
                _ => false,
            }
        }
        let mut binding = BTreeMap::new();
        if !go(&self.skeleton, formula, &mut binding) {
            return None;
        }
        if self.distinct_slots {
            let values: BTreeSet<&String> = binding.values().collect();
            if values.len() != binding.len() {
                return None;
            }
        }
        Some(binding)
    }
}

/// A sentence template for one structure, with `{k}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTemplate {
    pub structure_id: String,
    pub sentence: String,
}

impl AnnotationTemplate {
    /// Check that every placeholder `{1}..{slot_count}` appears exactly once
    /// and no other placeholders occur.
    pub fn validate(&self, structure: &LtlStructure) -> Result<(), BacktranslateError> {
        let found = placeholder_indices(&self.sentence);
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for k in &found {
            *counts.entry(*k).or_default() += 1;
        }
        for k in 1..=structure.slot_count {
            match counts.get(&k) {
                Some(1) => {}
                Some(n) => {
                    return Err(BacktranslateError::InvalidTemplate {
                        structure_id: self.structure_id.clone(),
                        reason: format!("placeholder {{{k}}} appears {n} times"),
                    })
                }
                None => {
                    return Err(BacktranslateError::InvalidTemplate {
                        structure_id: self.structure_id.clone(),
                        reason: format!("placeholder {{{k}}} is missing"),
                    })
                }
            }
        }
        if let Some(k) = found.iter().find(|k| **k > structure.slot_count) {
            return Err(BacktranslateError::InvalidTemplate {
                structure_id: self.structure_id.clone(),
                reason: format!(
                    "placeholder {{{k}}} exceeds slot count {}",
                    structure.slot_count
                ),
            });
        }
        Ok(())
    }

    fn fill(&self, phrases: &BTreeMap<u32, &str>) -> String {
        let mut out = self.sentence.clone();
        for (k, phrase) in phrases {
            out = out.replace(&format!("{{{k}}}"), phrase);
        }
        out
    }
}

fn placeholder_indices(sentence: &str) -> Vec<u32> {
    let mut out = Vec::new();
    let bytes = sentence.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = sentence[i + 1..].find('}') {
                let inner = &sentence[i + 1..i + 1 + end];
                if !inner.is_empty() && inner.bytes().all(|b| b.is_ascii_digit()) {
                    if let Ok(k) = inner.parse() {
                        out.push(k);
                    }
                }
                i += end + 2;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// On-disk record for the structures/templates JSON Lines file.
#[derive(Debug, Serialize, Deserialize)]
struct StructureRecord {
    id: String,
    skeleton: String,
    distinct_slots: bool,
    template: String,
}

/// Load structures and their templates from a JSON Lines file. Each record
/// carries the structure id, its skeleton in prefix notation with `H1..Hk`
/// hole tokens, the distinct-slots flag, and the sentence template.
pub fn load_structures(
    path: impl AsRef<Path>,
) -> Result<(Vec<LtlStructure>, Vec<AnnotationTemplate>), BacktranslateError> {
    let file = std::fs::File::open(path)?;
    read_structures(std::io::BufReader::new(file))
}

pub fn read_structures(
    reader: impl BufRead,
) -> Result<(Vec<LtlStructure>, Vec<AnnotationTemplate>), BacktranslateError> {
    let mut structures = Vec::new();
    let mut templates = Vec::new();
    let mut ids = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StructureRecord =
            serde_json::from_str(&line).map_err(|e| BacktranslateError::Record {
                line: idx + 1,
                message: e.to_string(),
            })?;
        if !ids.insert(record.id.clone()) {
            return Err(BacktranslateError::Record {
                line: idx + 1,
                message: format!("duplicate structure id `{}`", record.id),
            });
        }
        let skeleton =
            Skeleton::parse(&record.skeleton).map_err(|e| BacktranslateError::Record {
                line: idx + 1,
                message: e.to_string(),
            })?;
        let structure = LtlStructure::new(record.id.clone(), skeleton, record.distinct_slots)
            .map_err(|e| BacktranslateError::Record {
                line: idx + 1,
                message: e.to_string(),
            })?;
        let template = AnnotationTemplate {
            structure_id: record.id,
            sentence: record.template,
        };
        template
            .validate(&structure)
            .map_err(|e| BacktranslateError::Record {
                line: idx + 1,
                message: e.to_string(),
            })?;
        structures.push(structure);
        templates.push(template);
    }
    Ok((structures, templates))
}

pub fn save_structures(
    path: impl AsRef<Path>,
    structures: &[LtlStructure],
    templates: &[AnnotationTemplate],
) -> Result<(), BacktranslateError> {
    let mut out = std::fs::File::create(path)?;
    for s in structures {
        let template = templates
            .iter()
            .find(|t| t.structure_id == s.id)
            .ok_or_else(|| BacktranslateError::MissingTemplate {
                structure_id: s.id.clone(),
            })?;
        let record = StructureRecord {
            id: s.id.clone(),
            skeleton: s.skeleton.to_string(),
            distinct_slots: s.distinct_slots,
            template: template.sentence.clone(),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&record).expect("record serializes")
        )?;
    }
    Ok(())
}

/// Number of human-supplied strings a back-translation config needs: one
/// sentence template per structure, plus one description per AP when any
/// structure has holes to fill. Zero-hole (per-formula) configs need no AP
/// descriptions at all.
pub fn annotation_count(structures: &[LtlStructure], ap_count: usize) -> usize {
    let needs_ap_descriptions = structures.iter().any(|s| s.slot_count > 0);
    structures.len() + if needs_ap_descriptions { ap_count } else { 0 }
}

/// Find the unique structure a formula instantiates and its hole binding.
pub fn match_structure(
    formula: &Formula,
    structures: &[LtlStructure],
) -> Result<(String, BTreeMap<u32, String>), BacktranslateError> {
    let mut matches: Vec<(String, BTreeMap<u32, String>)> = structures
        .iter()
        .filter_map(|s| s.unify(formula).map(|b| (s.id.clone(), b)))
        .collect();
    match matches.len() {
        0 => Err(BacktranslateError::NoMatchingStructure),
        1 => Ok(matches.pop().unwrap()),
        _ => Err(BacktranslateError::MultipleMatchingStructures {
            ids: matches.into_iter().map(|(id, _)| id).collect(),
        }),
    }
}

/// Rule-based LTL → English, realized from the syntax tree.
///
/// Realization rules: atoms are their lexicon phrases; `or`/`until` read as
/// infix English; `x ∧ F y` reads as the sequencing idiom "x to finally y";
/// a root `F` over a compound command is implied by the imperative and is
/// dropped, while `F p` alone reads as "eventually p". Formulas deeper than
/// two nodes are smoothed into a sentence (leading capital, trailing
/// period); shallow ones are left as bare phrases.
pub fn back_translate_rule(formula: &Formula, lex: &Lexicon) -> Result<String, BacktranslateError> {
    fn realize(f: &Formula, lex: &Lexicon) -> Result<String, BacktranslateError> {
        Ok(match f {
            Formula::Atom(a) => lex.ap_phrase(a)?.to_string(),
            Formula::Not(c) => format!("not {}", realize(c, lex)?),
            Formula::Finally(c) => format!("finally {}", realize(c, lex)?),
            Formula::Globally(c) => format!("always {}", realize(c, lex)?),
            Formula::And(l, r) => match r.as_ref() {
                Formula::Finally(inner) => {
                    format!("{} to finally {}", realize(l, lex)?, realize(inner, lex)?)
                }
                _ => format!("{} and {}", realize(l, lex)?, realize(r, lex)?),
            },
            Formula::Or(l, r) => format!("{} or {}", realize(l, lex)?, realize(r, lex)?),
            Formula::Until(l, r) => format!("{} until {}", realize(l, lex)?, realize(r, lex)?),
        })
    }

    let core = match formula {
        Formula::Finally(c) => match c.as_ref() {
            Formula::Atom(a) => format!("eventually {}", lex.ap_phrase(a)?),
            Formula::And(..) | Formula::Or(..) => realize(c, lex)?,
            _ => realize(formula, lex)?,
        },
        _ => realize(formula, lex)?,
    };

    if formula.depth() <= 2 {
        return Ok(core);
    }
    let mut chars = core.chars();
    let sentence = match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => core,
    };
    Ok(sentence + ".")
}

/// Template-based LTL → English: unify the formula with its structure and
/// fill the structure's template with the bound AP phrases.
pub fn back_translate_template(
    formula: &Formula,
    structures: &[LtlStructure],
    templates: &[AnnotationTemplate],
    lex: &Lexicon,
) -> Result<String, BacktranslateError> {
    let (structure_id, binding) = match_structure(formula, structures)?;
    let template = templates
        .iter()
        .find(|t| t.structure_id == structure_id)
        .ok_or(BacktranslateError::MissingTemplate { structure_id })?;
    let mut phrases = BTreeMap::new();
    for (k, ap) in &binding {
        phrases.insert(*k, lex.ap_phrase(ap)?);
    }
    Ok(template.fill(&phrases))
}

impl From<LtlError> for BacktranslateError {
    fn from(e: LtlError) -> Self {
        BacktranslateError::InvalidStructure {
            id: String::new(),
            reason: e.to_string(),
        }
    }
}
