//! Dataset manifests, format adapters, and validated ingestion.
//!
//! A dataset ships as a JSON manifest naming its declared statistics, a
//! small declarative column-mapping adapter, and relative paths to the AP
//! set and the data file. Ingestion recomputes every statistic from the raw
//! records and fails with a stat mismatch when the data does not support
//! the declaration.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::backtranslate::skeletonize;
use crate::canonical::Lexicon;
use crate::ltl::{parse_infix, parse_prefix, ApSet, Formula, Notation};
use crate::synthesis::{
    fingerprint_apset, ConfigFingerprint, Corpus, Example, Provenance, TargetRepr,
};

/// Declared (and recomputed) dataset statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_structures: usize,
    pub n_formulas: usize,
    pub n_aps: usize,
    pub n_commands: usize,
}

/// Declarative mapping from a data file onto (command, formula) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatAdapter {
    /// Only `jsonl` is defined: one JSON object per line.
    pub format: String,
    pub text_field: String,
    pub target_field: String,
    /// Transcription of the target formula in the data file.
    pub notation: Notation,
}

#[derive(Debug, Deserialize, Serialize)]
struct Manifest {
    name: String,
    stats: DatasetStats,
    adapter: FormatAdapter,
    /// Path to the data file, relative to the manifest.
    data: String,
    /// Path to the AP set file, relative to the manifest.
    apset: String,
}

/// A validated golden dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub aps: ApSet,
    pub examples: Vec<Example>,
    pub declared: DatasetStats,
    pub notation: Notation,
}

impl Dataset {
    /// Build from already-parsed parts, validating declared against
    /// computed stats.
    pub fn from_parts(
        name: impl Into<String>,
        aps: ApSet,
        examples: Vec<Example>,
        declared: DatasetStats,
        notation: Notation,
    ) -> Result<Self, EvalError> {
        let dataset = Self {
            name: name.into(),
            aps,
            examples,
            declared,
            notation,
        };
        let computed = dataset.computed_stats();
        check_stat("n_commands", declared.n_commands, computed.n_commands)?;
        check_stat("n_formulas", declared.n_formulas, computed.n_formulas)?;
        check_stat("n_structures", declared.n_structures, computed.n_structures)?;
        check_stat("n_aps", declared.n_aps, computed.n_aps)?;
        Ok(dataset)
    }

    /// Statistics recomputed from the examples: command count, distinct
    /// formulas, distinct structures (formulas skeletonized by replacing
    /// atoms with first-occurrence-numbered holes), and APs observed in the
    /// formulas.
    pub fn computed_stats(&self) -> DatasetStats {
        let mut formulas = BTreeSet::new();
        let mut skeletons = BTreeSet::new();
        let mut aps = BTreeSet::new();
        for e in &self.examples {
            formulas.insert(e.target.print(Notation::Prefix));
            let (skeleton, _) = skeletonize(&e.target);
            skeletons.insert(skeleton);
            for atom in e.target.atoms() {
                aps.insert(atom.to_string());
            }
        }
        DatasetStats {
            n_structures: skeletons.len(),
            n_formulas: formulas.len(),
            n_aps: aps.len(),
            n_commands: self.examples.len(),
        }
    }

    /// Distinct target formulas in first-appearance order.
    pub fn formulas(&self) -> Vec<Formula> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in &self.examples {
            if seen.insert(e.target.print(Notation::Prefix)) {
                out.push(e.target.clone());
            }
        }
        out
    }

    /// The valid output set: every distinct formula rendered in `repr`.
    pub fn valid_outputs(&self, repr: TargetRepr, lex: &Lexicon) -> Result<Vec<String>, EvalError> {
        self.formulas()
            .iter()
            .map(|f| repr.render(f, lex).map_err(EvalError::from))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

fn check_stat(field: &'static str, declared: usize, computed: usize) -> Result<(), EvalError> {
    if declared != computed {
        return Err(EvalError::StatMismatch {
            field,
            declared,
            computed,
        });
    }
    Ok(())
}

/// Ingest a dataset from its manifest path.
pub fn ingest(manifest_path: impl AsRef<Path>) -> Result<Dataset, EvalError> {
    let manifest_path = manifest_path.as_ref();
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    if manifest.adapter.format != "jsonl" {
        return Err(EvalError::InvalidConfig(format!(
            "unsupported data format `{}`",
            manifest.adapter.format
        )));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let aps = ApSet::load(base.join(&manifest.apset))?;
    let lex = Lexicon::from_apset(&aps);
    let repr = match manifest.adapter.notation {
        Notation::Prefix => TargetRepr::RawPrefix,
        Notation::Infix => TargetRepr::RawInfix,
    };

    let data = std::fs::File::open(base.join(&manifest.data))?;
    let mut examples = Vec::new();
    for (idx, line) in std::io::BufReader::new(data).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| EvalError::ParseFailure {
                line: lineno,
                reason: e.to_string(),
            })?;
        let text = field_str(&value, &manifest.adapter.text_field, lineno)?;
        let target_text = field_str(&value, &manifest.adapter.target_field, lineno)?;
        let target = match manifest.adapter.notation {
            Notation::Prefix => parse_prefix(target_text, &aps),
            Notation::Infix => parse_infix(target_text, &aps),
        }
        .map_err(|e| EvalError::ParseFailure {
            line: lineno,
            reason: e.to_string(),
        })?;
        let example = Example::new(text, target, repr, Provenance::Golden, &lex).map_err(|e| {
            EvalError::ParseFailure {
                line: lineno,
                reason: e.to_string(),
            }
        })?;
        examples.push(example);
    }

    Dataset::from_parts(
        manifest.name,
        aps,
        examples,
        manifest.stats,
        manifest.adapter.notation,
    )
}

fn field_str<'v>(
    value: &'v serde_json::Value,
    field: &str,
    line: usize,
) -> Result<&'v str, EvalError> {
    value
        .get(field)
        .and_then(|v| v.as_str())
        .ok_or_else(|| EvalError::ParseFailure {
            line,
            reason: format!("missing or non-string field `{field}`"),
        })
}

/// The dataset's golden examples as a training corpus rendered in `repr`.
pub fn golden_corpus(
    dataset: &Dataset,
    repr: TargetRepr,
    lex: &Lexicon,
) -> Result<Corpus, EvalError> {
    golden_corpus_of(&dataset.examples, &dataset.aps, repr, lex)
}

/// As [`golden_corpus`], over an explicit subset of examples (a fold).
pub fn golden_corpus_of(
    examples: &[Example],
    aps: &ApSet,
    repr: TargetRepr,
    lex: &Lexicon,
) -> Result<Corpus, EvalError> {
    let rebuilt: Result<Vec<Example>, _> = examples
        .iter()
        .map(|e| {
            Example::new(
                e.text.clone(),
                e.target.clone(),
                repr,
                Provenance::Golden,
                lex,
            )
        })
        .collect();
    let fingerprint = ConfigFingerprint {
        apset: fingerprint_apset(aps),
        structures: "golden".into(),
        paraphrase: "none".into(),
    };
    Ok(Corpus::new(rebuilt?, fingerprint))
}
