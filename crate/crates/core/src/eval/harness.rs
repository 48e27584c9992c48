//! Exact-match scoring, fold splitting, and the evaluation driver.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{golden_corpus_of, Dataset};
use super::EvalError;
use crate::backtranslate::{AnnotationTemplate, LtlStructure};
use crate::canonical::Lexicon;
use crate::decoder::{
    build_trie, constrained_decode, train_lexical, unconstrained_decode, LexicalConfig,
    OracleScorer, OutputTrie, RemoteScorer, Scorer,
};
use crate::synthesis::{build_corpus, BuildOptions, Example, ParaphraseService, TargetRepr};
use crate::util::normalize_ws;

/// Exact-match criterion: string equality after collapsing whitespace runs.
/// No token reordering or semantic equivalence is applied.
pub fn exact_match(predicted: &str, gold: &str) -> bool {
    normalize_ws(predicted) == normalize_ws(gold)
}

/// Split `n_examples` into `k` disjoint test folds covering everything,
/// sizes differing by at most one. Indices are shuffled by the seed before
/// folding, and the same seed always produces the same folds. Returns
/// `(train, test)` index pairs.
/// Train and test index sets for one fold.
pub type FoldIndices = (Vec<usize>, Vec<usize>);

pub fn kfold_split(n_examples: usize, k: usize, seed: u64) -> Result<Vec<FoldIndices>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if n_examples < k {
        return Err(EvalError::TooFewExamples {
            have: n_examples,
            need: k,
        });
    }
    let mut indices: Vec<usize> = (0..n_examples).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let base = n_examples / k;
    let extra = n_examples % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let test: Vec<usize> = indices[start..start + size].to_vec();
        let train: Vec<usize> = indices[..start]
            .iter()
            .chain(&indices[start + size..])
            .copied()
            .collect();
        folds.push((train, test));
        start += size;
    }
    Ok(folds)
}

/// Which experiment layout to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Train on k-1 golden folds, test on the held-out fold, micro-averaged.
    GoldenCv,
    /// Train on synthetic data only, test on the full golden set.
    LowResource,
}

/// Which scorer sits behind decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    Lexical,
    /// One-hot oracle per example; a plumbing self-check.
    Oracle,
    /// Operator-supplied scoring endpoint (`NL2LTL_SCORER_URL`).
    Remote,
}

/// Full evaluation configuration; echoed into the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub scenario: Scenario,
    pub repr: TargetRepr,
    /// False runs the no-constrained-decoding ablation.
    pub constrained: bool,
    /// 0 runs the no-augmentation ablation.
    pub n_paraphrases: usize,
    pub k_folds: usize,
    pub seed: u64,
    pub beam: usize,
    /// Token cap for unconstrained decoding.
    pub max_len: usize,
    pub scorer: ScorerKind,
    pub lexical: LexicalConfig,
    pub max_in_flight: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::GoldenCv,
            repr: TargetRepr::RawPrefix,
            constrained: true,
            n_paraphrases: 10,
            k_folds: 5,
            seed: 0,
            beam: 1,
            max_len: 64,
            scorer: ScorerKind::Lexical,
            lexical: LexicalConfig::default(),
            max_in_flight: 4,
        }
    }
}

/// One decoded test example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub input: String,
    pub gold: String,
    pub predicted: String,
    pub correct: bool,
}

/// Per-gold-formula tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaCell {
    pub total: usize,
    pub correct: usize,
}

/// Evaluation outcome: accuracy, per-formula tallies, the full prediction
/// list, and the resolved config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub config: EvalConfig,
    pub n_examples: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub per_formula: BTreeMap<String, FormulaCell>,
    pub predictions: Vec<Prediction>,
}

impl EvalReport {
    fn from_predictions(dataset: &str, config: &EvalConfig, predictions: Vec<Prediction>) -> Self {
        let n_examples = predictions.len();
        let n_correct = predictions.iter().filter(|p| p.correct).count();
        let mut per_formula: BTreeMap<String, FormulaCell> = BTreeMap::new();
        for p in &predictions {
            let cell = per_formula.entry(p.gold.clone()).or_default();
            cell.total += 1;
            cell.correct += usize::from(p.correct);
        }
        let accuracy = if n_examples == 0 {
            0.0
        } else {
            n_correct as f64 / n_examples as f64
        };
        Self {
            dataset: dataset.to_string(),
            config: config.clone(),
            n_examples,
            n_correct,
            accuracy,
            per_formula,
            predictions,
        }
    }

    /// Self-audit: the headline numbers must equal a recount of the stored
    /// predictions.
    pub fn verify(&self) -> bool {
        let recount = self.predictions.iter().filter(|p| p.correct).count();
        let per_formula_total: usize = self.per_formula.values().map(|c| c.total).sum();
        let per_formula_correct: usize = self.per_formula.values().map(|c| c.correct).sum();
        recount == self.n_correct
            && self.predictions.len() == self.n_examples
            && per_formula_total == self.n_examples
            && per_formula_correct == self.n_correct
            && (self.n_examples == 0
                || (self.accuracy - self.n_correct as f64 / self.n_examples as f64).abs()
                    < f64::EPSILON)
    }

    pub fn to_json_string(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "dataset: {}  scenario: {:?}  repr: {}  constrained: {}  n_paraphrases: {}  k_folds: {}  seed: {}  beam: {}  scorer: {:?}\n",
            self.dataset,
            self.config.scenario,
            self.config.repr.as_str(),
            self.config.constrained,
            self.config.n_paraphrases,
            self.config.k_folds,
            self.config.seed,
            self.config.beam,
            self.config.scorer,
        ));
        out.push_str(&format!(
            "accuracy: {:.4} ({}/{})\n",
            self.accuracy, self.n_correct, self.n_examples
        ));
        let mut worst: Vec<(&String, &FormulaCell)> = self
            .per_formula
            .iter()
            .filter(|(_, c)| c.correct < c.total)
            .collect();
        worst.sort_by_key(|(_, c)| (c.correct * 1000) / c.total.max(1));
        if !worst.is_empty() {
            out.push_str("hardest formulas:\n");
            for (gold, cell) in worst.iter().take(5) {
                out.push_str(&format!(
                    "  {:>4}/{:<4} {}\n",
                    cell.correct, cell.total, gold
                ));
            }
        }
        out
    }
}

struct DecodeContext<'a> {
    trie: &'a OutputTrie,
    vocab: Vec<String>,
    config: &'a EvalConfig,
}

impl DecodeContext<'_> {
    fn decode(&self, input: &str, scorer: &dyn Scorer) -> String {
        if self.config.constrained {
            constrained_decode(input, scorer, self.trie, self.config.beam)
        } else {
            unconstrained_decode(input, scorer, &self.vocab, self.config.max_len)
        }
    }
}

/// Run the configured evaluation. `structures`, `templates`, and `svc` feed
/// the synthetic corpus in the low-resource scenario and are unused for
/// golden cross-validation.
pub fn run_eval(
    dataset: &Dataset,
    structures: &[LtlStructure],
    templates: &[AnnotationTemplate],
    lex: &Lexicon,
    svc: &dyn ParaphraseService,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if config.beam == 0 {
        return Err(EvalError::InvalidConfig("beam must be at least 1".into()));
    }
    let valid_outputs = dataset.valid_outputs(config.repr, lex)?;
    let trie = build_trie(&valid_outputs)?;

    let remote = if config.scorer == ScorerKind::Remote {
        Some(RemoteScorer::from_env().ok_or_else(|| {
            EvalError::InvalidConfig("NL2LTL_SCORER_URL is not set for the remote scorer".into())
        })?)
    } else {
        None
    };

    let mut predictions = Vec::new();
    match config.scenario {
        Scenario::GoldenCv => {
            let folds = kfold_split(dataset.len(), config.k_folds, config.seed)?;
            for (train_idx, test_idx) in folds {
                let train: Vec<Example> = train_idx
                    .iter()
                    .map(|&i| dataset.examples[i].clone())
                    .collect();
                let model = match config.scorer {
                    ScorerKind::Lexical => {
                        let corpus = golden_corpus_of(&train, &dataset.aps, config.repr, lex)?;
                        Some(train_lexical(&corpus, &config.lexical)?)
                    }
                    _ => None,
                };
                let ctx = DecodeContext {
                    trie: &trie,
                    vocab: model
                        .as_ref()
                        .map(|m| m.output_vocabulary().to_vec())
                        .unwrap_or_else(|| trie_vocab(&valid_outputs)),
                    config,
                };
                for &i in &test_idx {
                    predictions.push(evaluate_one(
                        &dataset.examples[i],
                        config,
                        lex,
                        &ctx,
                        model.as_ref(),
                        remote.as_ref(),
                    )?);
                }
            }
        }
        Scenario::LowResource => {
            let model = match config.scorer {
                ScorerKind::Lexical => {
                    let formulas = dataset.formulas();
                    let options = BuildOptions {
                        repr: config.repr,
                        n_paraphrases: config.n_paraphrases,
                        max_in_flight: config.max_in_flight,
                    };
                    let build = build_corpus(
                        &formulas,
                        structures,
                        templates,
                        &dataset.aps,
                        lex,
                        svc,
                        &options,
                    )?;
                    Some(train_lexical(&build.corpus, &config.lexical)?)
                }
                _ => None,
            };
            let ctx = DecodeContext {
                trie: &trie,
                vocab: model
                    .as_ref()
                    .map(|m| m.output_vocabulary().to_vec())
                    .unwrap_or_else(|| trie_vocab(&valid_outputs)),
                config,
            };
            for example in &dataset.examples {
                predictions.push(evaluate_one(
                    example,
                    config,
                    lex,
                    &ctx,
                    model.as_ref(),
                    remote.as_ref(),
                )?);
            }
        }
    }

    let report = EvalReport::from_predictions(&dataset.name, config, predictions);
    debug_assert!(report.verify());
    Ok(report)
}

fn trie_vocab(valid_outputs: &[String]) -> Vec<String> {
    let mut vocab: Vec<String> = valid_outputs
        .iter()
        .flat_map(|s| s.split_whitespace().map(str::to_string))
        .collect();
    vocab.sort();
    vocab.dedup();
    vocab
}

fn evaluate_one(
    example: &Example,
    config: &EvalConfig,
    lex: &Lexicon,
    ctx: &DecodeContext<'_>,
    model: Option<&crate::decoder::LexicalModel>,
    remote: Option<&RemoteScorer>,
) -> Result<Prediction, EvalError> {
    let gold = config.repr.render(&example.target, lex)?;
    let predicted = match config.scorer {
        ScorerKind::Lexical => {
            let model = model.expect("lexical scorer requires a trained model");
            ctx.decode(&example.text, model)
        }
        ScorerKind::Oracle => {
            let oracle = OracleScorer::for_target(&gold);
            ctx.decode(&example.text, &oracle)
        }
        ScorerKind::Remote => {
            let remote = remote.expect("remote scorer configured");
            ctx.decode(&example.text, remote)
        }
    };
    let correct = exact_match(&predicted, &gold);
    Ok(Prediction {
        input: example.text.clone(),
        gold,
        predicted,
        correct,
    })
}
