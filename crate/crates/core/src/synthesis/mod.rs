//! Synthetic corpus construction.
//!
//! The pipeline enumerates the task's possible formulas (from structures ×
//! AP combinations, or an explicit list when the task's formula set is given
//! by a dataset), back-translates each into a structured-English seed
//! sentence, and augments each seed with paraphrases from a
//! [`ParaphraseService`]. The deterministic [`FallbackParaphraser`] keeps
//! tests and CI independent of any network service.

mod paraphrase;

pub use paraphrase::{
    build_prompt, parse_numbered_list, FallbackParaphraser, HttpParaphraseService,
    ParaphraseService, RetryPolicy,
};

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtranslate::{
    back_translate_rule, back_translate_template, AnnotationTemplate, BacktranslateError,
    LtlStructure,
};
use crate::canonical::{from_canonical, to_canonical, CanonicalError, CanonicalForm, Lexicon};
use crate::ltl::{parse_infix, parse_prefix, ApSet, Formula, LtlError, Notation};
use crate::util::fnv1a;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("structure needs {needed} distinct APs but only {available} are available")]
    InsufficientAPs { needed: usize, available: usize },
    #[error("paraphrase count must be at least 1")]
    InvalidParaphraseCount,
    #[error("paraphrase service unavailable: {detail}")]
    ServiceUnavailable { detail: String },
    #[error("malformed paraphrase service response: {detail}")]
    MalformedServiceResponse { detail: String },
    #[error("missing environment variable `{var}`")]
    MissingEnv { var: String },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Backtranslate(#[from] BacktranslateError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which rendering of the target formula is used as the training label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRepr {
    RawPrefix,
    RawInfix,
    Canonical,
}

impl TargetRepr {
    pub fn render(&self, formula: &Formula, lex: &Lexicon) -> Result<String, SynthesisError> {
        Ok(match self {
            TargetRepr::RawPrefix => formula.print(Notation::Prefix),
            TargetRepr::RawInfix => formula.print(Notation::Infix),
            TargetRepr::Canonical => to_canonical(formula, lex)?.into_string(),
        })
    }

    pub fn parse(&self, text: &str, aps: &ApSet, lex: &Lexicon) -> Result<Formula, SynthesisError> {
        Ok(match self {
            TargetRepr::RawPrefix => parse_prefix(text, aps)?,
            TargetRepr::RawInfix => parse_infix(text, aps)?,
            TargetRepr::Canonical => from_canonical(&CanonicalForm::new(text), lex)?,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TargetRepr::RawPrefix => "raw-prefix",
            TargetRepr::RawInfix => "raw-infix",
            TargetRepr::Canonical => "canonical",
        }
    }
}

/// Where an example came from. The ordering (golden < backtranslated <
/// paraphrased) is the canonical within-formula file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Golden,
    Backtranslated,
    Paraphrased,
}

/// One (natural-language command, target formula) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub text: String,
    pub target: Formula,
    /// `target` rendered in `repr`; the training label.
    pub target_text: String,
    pub repr: TargetRepr,
    pub provenance: Provenance,
    /// Prefix rendering of the originating formula.
    pub source_id: String,
}

impl Example {
    pub fn new(
        text: impl Into<String>,
        target: Formula,
        repr: TargetRepr,
        provenance: Provenance,
        lex: &Lexicon,
    ) -> Result<Self, SynthesisError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SynthesisError::Record {
                line: 0,
                message: "example text is empty".into(),
            });
        }
        let target_text = repr.render(&target, lex)?;
        let source_id = target.print(Notation::Prefix);
        Ok(Self {
            text,
            target,
            target_text,
            repr,
            provenance,
            source_id,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ExampleRecord {
    text: String,
    target: String,
    repr: TargetRepr,
    provenance: Provenance,
    source_id: String,
}

/// Hashes of everything that shaped a corpus, for reproducibility checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigFingerprint {
    pub apset: String,
    pub structures: String,
    pub paraphrase: String,
}

pub fn fingerprint_apset(aps: &ApSet) -> String {
    let mut buf = String::new();
    for name in aps.sorted_names() {
        buf.push_str(&name);
        buf.push('\0');
        buf.push_str(aps.description(&name).unwrap_or(""));
        buf.push('\n');
    }
    format!("{:016x}", fnv1a(buf.as_bytes()))
}

pub fn fingerprint_structures(
    structures: &[LtlStructure],
    templates: &[AnnotationTemplate],
) -> String {
    let mut buf = String::new();
    for s in structures {
        buf.push_str(&s.id);
        buf.push('\0');
        buf.push_str(&s.skeleton.to_string());
        buf.push('\0');
        buf.push_str(if s.distinct_slots { "1" } else { "0" });
        buf.push('\n');
    }
    for t in templates {
        buf.push_str(&t.structure_id);
        buf.push('\0');
        buf.push_str(&t.sentence);
        buf.push('\n');
    }
    format!("{:016x}", fnv1a(buf.as_bytes()))
}

const CORPUS_SCHEMA: &str = "nl2ltl-corpus/v1";

#[derive(Debug, Serialize, Deserialize)]
struct CorpusHeader {
    schema: String,
    fingerprint: ConfigFingerprint,
}

/// An ordered, deduplicated set of examples plus its config fingerprint.
///
/// Serialized as JSON Lines: a header record first, then one example per
/// line, in canonical order (source_id, then provenance, then text) so that
/// corpus files diff cleanly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub examples: Vec<Example>,
    pub fingerprint: ConfigFingerprint,
}

impl Corpus {
    pub fn new(examples: Vec<Example>, fingerprint: ConfigFingerprint) -> Self {
        let mut corpus = Self {
            examples,
            fingerprint,
        };
        corpus.canonicalize();
        corpus
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Sort into canonical order and drop duplicate (text, target) pairs.
    /// Idempotent: merging two identical builds and canonicalizing yields
    /// the same corpus.
    pub fn canonicalize(&mut self) {
        self.examples.sort_by(|a, b| {
            (&a.source_id, a.provenance, &a.text).cmp(&(&b.source_id, b.provenance, &b.text))
        });
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        self.examples
            .retain(|e| seen.insert((e.text.clone(), e.target_text.clone())));
    }

    /// Append another corpus's examples (fingerprint must match) and
    /// re-canonicalize.
    pub fn merge(&mut self, other: Corpus) {
        self.examples.extend(other.examples);
        self.canonicalize();
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SynthesisError> {
        let mut out = std::fs::File::create(path)?;
        let header = CorpusHeader {
            schema: CORPUS_SCHEMA.to_string(),
            fingerprint: self.fingerprint.clone(),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&header).expect("header serializes")
        )?;
        for e in &self.examples {
            let record = ExampleRecord {
                text: e.text.clone(),
                target: e.target_text.clone(),
                repr: e.repr,
                provenance: e.provenance,
                source_id: e.source_id.clone(),
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&record).expect("record serializes")
            )?;
        }
        Ok(())
    }

    pub fn load(
        path: impl AsRef<Path>,
        aps: &ApSet,
        lex: &Lexicon,
    ) -> Result<Self, SynthesisError> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header_line = lines.next().ok_or_else(|| SynthesisError::Record {
            line: 1,
            message: "empty corpus file".into(),
        })??;
        let header: CorpusHeader =
            serde_json::from_str(&header_line).map_err(|e| SynthesisError::Record {
                line: 1,
                message: format!("bad corpus header: {e}"),
            })?;
        if header.schema != CORPUS_SCHEMA {
            return Err(SynthesisError::Record {
                line: 1,
                message: format!("unsupported corpus schema `{}`", header.schema),
            });
        }
        let mut examples = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 2;
            let record: ExampleRecord =
                serde_json::from_str(&line).map_err(|e| SynthesisError::Record {
                    line: lineno,
                    message: e.to_string(),
                })?;
            let target = record.repr.parse(&record.target, aps, lex).map_err(|e| {
                SynthesisError::Record {
                    line: lineno,
                    message: format!("target does not parse: {e}"),
                }
            })?;
            let rendered = record.repr.render(&target, lex)?;
            if rendered != record.target {
                return Err(SynthesisError::Record {
                    line: lineno,
                    message: format!(
                        "target `{}` is not in canonical rendering (expected `{rendered}`)",
                        record.target
                    ),
                });
            }
            examples.push(Example {
                text: record.text,
                target,
                target_text: record.target,
                repr: record.repr,
                provenance: record.provenance,
                source_id: record.source_id,
            });
        }
        Ok(Self {
            examples,
            fingerprint: header.fingerprint,
        })
    }
}

/// All instantiations of the structures over the AP set, in deterministic
/// order: structures in input order, hole assignments lexicographic over
/// sorted AP names (later holes vary fastest). `distinct_slots` structures
/// never repeat an AP across holes.
pub fn enumerate_formulas(
    structures: &[LtlStructure],
    aps: &ApSet,
) -> Result<Vec<Formula>, SynthesisError> {
    let names = aps.sorted_names();
    let mut out = Vec::new();
    for s in structures {
        let slots = s.slot_count as usize;
        if s.distinct_slots && slots > names.len() {
            return Err(SynthesisError::InsufficientAPs {
                needed: slots,
                available: names.len(),
            });
        }
        if slots == 0 {
            out.push(s.instantiate(&Default::default())?);
            continue;
        }
        let mut assignment = vec![0usize; slots];
        'outer: loop {
            let distinct_ok =
                !s.distinct_slots || assignment.iter().collect::<BTreeSet<_>>().len() == slots;
            if distinct_ok {
                let binding = assignment
                    .iter()
                    .enumerate()
                    .map(|(hole, &idx)| (hole as u32 + 1, names[idx].clone()))
                    .collect();
                out.push(s.instantiate(&binding)?);
            }
            // lexicographic odometer: last hole varies fastest
            let mut i = slots;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                assignment[i] += 1;
                if assignment[i] < names.len() {
                    break;
                }
                assignment[i] = 0;
            }
        }
    }
    Ok(out)
}

/// Filtered paraphrase request: at most `n` non-empty variants, each
/// distinct from the input after whitespace/case normalization.
pub fn paraphrase(
    sentence: &str,
    n: usize,
    svc: &dyn ParaphraseService,
) -> Result<Vec<String>, SynthesisError> {
    if n == 0 {
        return Err(SynthesisError::InvalidParaphraseCount);
    }
    let raw = svc.paraphrase(sentence, n)?;
    let base = normalize_for_compare(sentence);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for candidate in raw {
        let trimmed = candidate.trim();
        if trimmed.is_empty() {
            continue;
        }
        let norm = normalize_for_compare(trimmed);
        if norm == base || !seen.insert(norm) {
            continue;
        }
        out.push(trimmed.to_string());
        if out.len() == n {
            break;
        }
    }
    Ok(out)
}

fn normalize_for_compare(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Knobs for [`build_corpus`].
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub repr: TargetRepr,
    pub n_paraphrases: usize,
    /// Paraphrase requests in flight at once.
    pub max_in_flight: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            repr: TargetRepr::RawPrefix,
            n_paraphrases: 10,
            max_in_flight: 4,
        }
    }
}

/// A paraphrase call that ultimately failed; the formula keeps its
/// backtranslated seed example.
#[derive(Debug, Clone)]
pub struct ParaphraseFailure {
    pub source_id: String,
    pub error: String,
}

#[derive(Debug)]
pub struct CorpusBuild {
    pub corpus: Corpus,
    pub failures: Vec<ParaphraseFailure>,
}

/// Build the synthetic corpus for a formula set: one backtranslated seed per
/// formula plus up to `n_paraphrases` paraphrases of it.
///
/// Seeds come from the template path when `structures` is non-empty,
/// otherwise from the rule-based translator. Paraphrase requests may run
/// concurrently (bounded by `max_in_flight`); assembly is a deterministic
/// in-order reduce, so the result is reproducible whenever the service is.
pub fn build_corpus(
    formulas: &[Formula],
    structures: &[LtlStructure],
    templates: &[AnnotationTemplate],
    aps: &ApSet,
    lex: &Lexicon,
    svc: &dyn ParaphraseService,
    options: &BuildOptions,
) -> Result<CorpusBuild, SynthesisError> {
    let mut seeds: Vec<(Formula, String)> = Vec::with_capacity(formulas.len());
    let mut seen_targets = BTreeSet::new();
    for f in formulas {
        if !seen_targets.insert(f.print(Notation::Prefix)) {
            continue;
        }
        let sentence = if structures.is_empty() {
            back_translate_rule(f, lex)?
        } else {
            back_translate_template(f, structures, templates, lex)?
        };
        seeds.push((f.clone(), sentence));
    }

    let paraphrases: Vec<Result<Vec<String>, String>> = if options.n_paraphrases == 0 {
        seeds.iter().map(|_| Ok(Vec::new())).collect()
    } else {
        run_paraphrases(&seeds, options, svc)
    };

    let fingerprint = ConfigFingerprint {
        apset: fingerprint_apset(aps),
        structures: fingerprint_structures(structures, templates),
        paraphrase: format!("{};n={}", svc.fingerprint(), options.n_paraphrases),
    };

    let mut examples = Vec::new();
    let mut failures = Vec::new();
    for ((formula, sentence), result) in seeds.into_iter().zip(paraphrases) {
        let seed = Example::new(
            sentence,
            formula.clone(),
            options.repr,
            Provenance::Backtranslated,
            lex,
        )?;
        let source_id = seed.source_id.clone();
        examples.push(seed);
        match result {
            Ok(variants) => {
                for v in variants {
                    examples.push(Example::new(
                        v,
                        formula.clone(),
                        options.repr,
                        Provenance::Paraphrased,
                        lex,
                    )?);
                }
            }
            Err(error) => failures.push(ParaphraseFailure { source_id, error }),
        }
    }

    Ok(CorpusBuild {
        corpus: Corpus::new(examples, fingerprint),
        failures,
    })
}

type ParaphraseSlot = Option<Result<Vec<String>, String>>;

fn run_paraphrases(
    seeds: &[(Formula, String)],
    options: &BuildOptions,
    svc: &dyn ParaphraseService,
) -> Vec<Result<Vec<String>, String>> {
    let n = options.n_paraphrases;
    let workers = options.max_in_flight.max(1).min(seeds.len().max(1));
    if workers <= 1 {
        return seeds
            .iter()
            .map(|(_, s)| paraphrase(s, n, svc).map_err(|e| e.to_string()))
            .collect();
    }
    let slots: Mutex<Vec<ParaphraseSlot>> = Mutex::new(vec![None; seeds.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= seeds.len() {
                    break;
                }
                let result = paraphrase(&seeds[i].1, n, svc).map_err(|e| e.to_string());
                slots.lock().expect("paraphrase slot lock")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("paraphrase slot lock")
        .into_iter()
        .map(|r| r.expect("every seed paraphrased"))
        .collect()
}
