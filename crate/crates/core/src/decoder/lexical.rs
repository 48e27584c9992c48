//! A count-based lexical scorer: a lightweight stand-in for a finetuned
//! sequence model behind the [`Scorer`] contract.
//!
//! Training fills two tables from the corpus: co-occurrence counts between
//! input features and (output token, output position), and output-token
//! bigram counts. Bag-of-words counts alone cannot separate order-swapped
//! formulas — `F & A F B` and `F & B F A` pair with the same word multiset
//! — so each input word is tagged with a relative-position bucket, which is
//! enough for the counts to carry word order. A sentence-length bucket is
//! added as one extra feature: relative positions alias short commands with
//! the tails of long ones, and the length prior separates single-goal from
//! multi-goal phrasings.
//!
//! Scoring mixes the tables. Each input feature contributes an additively
//! smoothed conditional over the candidate set, measured against the
//! candidate's prefix-conditional baseline — its rate among training
//! targets that begin with the decoded prefix (pointwise mutual
//! information). Features that merely restate what the prefix already
//! implies contribute nothing; discriminative features move the score no
//! matter how many common words surround them, and the sequence prior
//! enters once, through the bigram term. Candidates additionally pay an
//! absence penalty for each of their characteristic words missing from the
//! input — presence features alone cannot tell `the red room` from `the
//! red room with chair` targets apart. The summed evidence is renormalized
//! into a candidate distribution and mixed with the smoothed bigram
//! distribution by fixed weights.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scorer::{Candidate, Scorer, STOP_TOKEN};
use super::DecoderError;
use crate::synthesis::Corpus;

const BOS_TOKEN: &str = "<s>";
const MODEL_SCHEMA: &str = "nl2ltl-lexical/v1";

/// Smoothing and mixture knobs. The defaults are plain choices, not tuned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalConfig {
    /// Additive smoothing over the candidate set.
    pub alpha: f64,
    pub cooc_weight: f64,
    pub bigram_weight: f64,
    /// Number of relative-position buckets on the input side.
    pub position_bins: usize,
}

impl Default for LexicalConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            cooc_weight: 0.5,
            bigram_weight: 0.5,
            position_bins: 5,
        }
    }
}

/// Input-side normalization: whitespace split, edge punctuation stripped,
/// lowercased, empties dropped. Applied identically at train and decode
/// time so positions line up.
pub fn tokenize_input(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| ".,!?;:'\"".contains(c))
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn normalize_tokens(tokens: &[&str]) -> Vec<String> {
    tokens
        .iter()
        .map(|w| {
            w.trim_matches(|c: char| ".,!?;:'\"".contains(c))
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn position_bin(index: usize, len: usize, bins: usize) -> u8 {
    if len == 0 || bins == 0 {
        return 0;
    }
    ((index * bins) / len).min(bins - 1) as u8
}

/// Reserved bin for the sentence-length feature.
const LENGTH_FEATURE_BIN: u8 = u8::MAX;
/// Reserved bin for position-free word features.
const ANY_POSITION_BIN: u8 = 254;
/// Bin-space base for relative positions conditioned on the length bucket.
const LENGTH_BIN_BASE: u8 = 170;
/// Bin-space offset for absolute-position features. Relative bins live
/// below this; `position_bins` must stay under it.
const ABSOLUTE_BIN_BASE: u8 = 100;
/// Absolute positions are capped here; later words share the last slot.
/// Keeps the absolute range below [`LENGTH_BIN_BASE`].
const ABSOLUTE_POSITION_CAP: usize = 60;
/// Sentence-length buckets (words / 3, capped).
const LENGTH_BUCKETS: usize = 9;

fn length_bucket(n: usize) -> usize {
    (n / 3).min(LENGTH_BUCKETS - 1)
}

/// The input features of a normalized sentence. Each word is tagged four
/// ways — relative-position bucket, absolute position, relative bucket
/// conditioned on the sentence-length bucket, and position-free — plus one
/// sentence-length token. The views are complementary: relative buckets
/// survive length variation, absolute positions separate fixed-prefix
/// phrasings that differ by a one-word shift, length-conditioned buckets
/// keep distinct surface patterns (which differ in length) from colliding
/// in one positional table, and the position-free view keeps content words
/// in evidence when a phrasing shifts them out of their usual bucket.
fn input_features(words: &[String], bins: usize) -> Vec<(String, u8)> {
    let n = words.len();
    let len_bucket = length_bucket(n);
    let mut out: Vec<(String, u8)> = Vec::with_capacity(4 * n + 1);
    for (i, w) in words.iter().enumerate() {
        let rel = position_bin(i, n, bins);
        out.push((w.clone(), rel));
        let abs = i.min(ABSOLUTE_POSITION_CAP);
        out.push((w.clone(), ABSOLUTE_BIN_BASE + abs as u8));
        out.push((w.clone(), LENGTH_BIN_BASE + (len_bucket * bins) as u8 + rel));
        out.push((w.clone(), ANY_POSITION_BIN));
    }
    out.push((format!("<len:{len_bucket}>"), LENGTH_FEATURE_BIN));
    out
}

type CoocKey = (String, u8, String, u16);
type BigramKey = (String, String);
type PrefixKey = (String, String);

fn prefix_key(prefix: &[&str]) -> String {
    prefix.join(" ")
}

/// Trained count tables. Deterministic: identical corpora produce identical
/// models (and identical serialized bytes).
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalModel {
    config: LexicalConfig,
    cooc: BTreeMap<CoocKey, u64>,
    bigram: BTreeMap<BigramKey, u64>,
    output_tokens: Vec<String>,
    /// How often each target prefix continues with each token, over the
    /// training examples. The PMI baseline during scoring.
    prefix_next: BTreeMap<PrefixKey, u64>,
    /// How often each (token, position) occurs across training examples.
    /// Derived from the length-feature rows of `cooc` (each example carries
    /// exactly one length feature), so it is not serialized separately.
    position_unigram: BTreeMap<(String, u16), u64>,
    /// Words characteristic of each (token, position): input words present
    /// in at least [`PRESENCE_THRESHOLD`] of that class's training
    /// examples, with their presence fraction. Derived from `cooc`.
    class_words: BTreeMap<(String, u16), Vec<(String, f64)>>,
}

/// A word must appear in at least this fraction of a class's examples to
/// count as characteristic of it. The bar is high on purpose: classes that
/// mix several phrasings (a visit and a sequence both start with `F`) must
/// not punish inputs for missing the majority phrasing's words.
const PRESENCE_THRESHOLD: f64 = 0.9;

/// Train the lexical model on a corpus. Targets are taken in the corpus's
/// stored rendering (the label space the corpus was built with).
pub fn train_lexical(
    corpus: &Corpus,
    config: &LexicalConfig,
) -> Result<LexicalModel, DecoderError> {
    if corpus.is_empty() {
        return Err(DecoderError::EmptyCorpus);
    }
    if !config.alpha.is_finite() || config.alpha <= 0.0 {
        return Err(DecoderError::Model {
            reason: "alpha must be positive".into(),
        });
    }
    // length-conditioned bins must fit between LENGTH_BIN_BASE and the
    // reserved bins above it
    let max_bins = (ANY_POSITION_BIN - LENGTH_BIN_BASE) as usize / LENGTH_BUCKETS;
    if config.position_bins == 0 || config.position_bins > max_bins {
        return Err(DecoderError::Model {
            reason: format!("position_bins must be in 1..={max_bins}"),
        });
    }
    let mut cooc: BTreeMap<CoocKey, u64> = BTreeMap::new();
    let mut bigram: BTreeMap<BigramKey, u64> = BTreeMap::new();
    let mut prefix_next: BTreeMap<PrefixKey, u64> = BTreeMap::new();
    let mut output_tokens: BTreeMap<String, ()> = BTreeMap::new();

    for example in &corpus.examples {
        let words = tokenize_input(&example.text);
        let features = input_features(&words, config.position_bins);
        let mut targets: Vec<&str> = example.target_text.split_whitespace().collect();
        targets.push(STOP_TOKEN);

        let mut prev = BOS_TOKEN;
        let mut prefix = String::new();
        for (j, token) in targets.iter().enumerate() {
            if *token != STOP_TOKEN {
                output_tokens.entry((*token).to_string()).or_default();
            }
            *bigram
                .entry((prev.to_string(), (*token).to_string()))
                .or_default() += 1;
            prev = token;
            *prefix_next
                .entry((prefix.clone(), (*token).to_string()))
                .or_default() += 1;
            if j > 0 {
                prefix.push(' ');
            }
            prefix.push_str(token);
            let pos = j.min(u16::MAX as usize) as u16;
            for (word, bin) in &features {
                *cooc
                    .entry((word.clone(), *bin, (*token).to_string(), pos))
                    .or_default() += 1;
            }
        }
    }

    Ok(LexicalModel::from_tables(
        config.clone(),
        cooc,
        bigram,
        prefix_next,
        output_tokens.into_keys().collect(),
    ))
}

impl LexicalModel {
    fn from_tables(
        config: LexicalConfig,
        cooc: BTreeMap<CoocKey, u64>,
        bigram: BTreeMap<BigramKey, u64>,
        prefix_next: BTreeMap<PrefixKey, u64>,
        output_tokens: Vec<String>,
    ) -> Self {
        let mut position_unigram: BTreeMap<(String, u16), u64> = BTreeMap::new();
        for ((_, bin, token, pos), count) in &cooc {
            if *bin == LENGTH_FEATURE_BIN {
                *position_unigram.entry((token.clone(), *pos)).or_default() += count;
            }
        }
        // word presence per class, aggregated over the relative-position
        // rows only (absolute rows would double-count every occurrence)
        let mut word_class: BTreeMap<(String, String, u16), u64> = BTreeMap::new();
        for ((word, bin, token, pos), count) in &cooc {
            if *bin >= ABSOLUTE_BIN_BASE {
                continue;
            }
            *word_class
                .entry((word.clone(), token.clone(), *pos))
                .or_default() += count;
        }
        let mut class_words: BTreeMap<(String, u16), Vec<(String, f64)>> = BTreeMap::new();
        for ((word, token, pos), count) in word_class {
            let Some(&total) = position_unigram.get(&(token.clone(), pos)) else {
                continue;
            };
            // one pseudo-example of absence: a class seen once cannot claim
            // any word with certainty
            let fraction = (count as f64 / (total as f64 + 1.0)).min(1.0);
            if fraction >= PRESENCE_THRESHOLD {
                class_words
                    .entry((token, pos))
                    .or_default()
                    .push((word, fraction));
            }
        }
        Self {
            config,
            cooc,
            bigram,
            prefix_next,
            output_tokens,
            position_unigram,
            class_words,
        }
    }

    pub fn config(&self) -> &LexicalConfig {
        &self.config
    }

    /// Distinct output tokens seen in training (stop excluded): the open
    /// vocabulary for unconstrained decoding.
    pub fn output_vocabulary(&self) -> &[String] {
        &self.output_tokens
    }

    pub fn cooc_count(&self, word: &str, bin: u8, token: &str, pos: u16) -> u64 {
        self.cooc
            .get(&(word.to_string(), bin, token.to_string(), pos))
            .copied()
            .unwrap_or(0)
    }

    /// Bigram count; `prev = None` means sequence start.
    pub fn bigram_count(&self, prev: Option<&str>, next: &str) -> u64 {
        let prev = prev.unwrap_or(BOS_TOKEN);
        self.bigram
            .get(&(prev.to_string(), next.to_string()))
            .copied()
            .unwrap_or(0)
    }

    fn cooc_count_at(&self, word: &str, bin: u8, token: &str, pos: u16) -> u64 {
        self.cooc
            .get(&(word.to_string(), bin, token.to_string(), pos))
            .copied()
            .unwrap_or(0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DecoderError> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DecoderError> {
        Self::from_json_string(&std::fs::read_to_string(path)?)
    }

    /// Serialize to the documented JSON model format: sorted count records,
    /// byte-stable for identical models.
    pub fn to_json_string(&self) -> Result<String, DecoderError> {
        let file = ModelFile {
            schema: MODEL_SCHEMA.to_string(),
            config: self.config.clone(),
            output_vocab: self.output_tokens.clone(),
            cooc: self
                .cooc
                .iter()
                .map(|((w, b, t, p), c)| (w.clone(), *b, t.clone(), *p, *c))
                .collect(),
            bigrams: self
                .bigram
                .iter()
                .map(|((a, b), c)| (a.clone(), b.clone(), *c))
                .collect(),
            prefixes: self
                .prefix_next
                .iter()
                .map(|((p, t), c)| (p.clone(), t.clone(), *c))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json_string(text: &str) -> Result<Self, DecoderError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema != MODEL_SCHEMA {
            return Err(DecoderError::Model {
                reason: format!("unsupported model schema `{}`", file.schema),
            });
        }
        Ok(LexicalModel::from_tables(
            file.config,
            file.cooc
                .into_iter()
                .map(|(w, b, t, p, c)| ((w, b, t, p), c))
                .collect(),
            file.bigrams
                .into_iter()
                .map(|(a, b, c)| ((a, b), c))
                .collect(),
            file.prefixes
                .into_iter()
                .map(|(p, t, c)| ((p, t), c))
                .collect(),
            file.output_vocab,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: String,
    config: LexicalConfig,
    output_vocab: Vec<String>,
    /// (input word, input bin, output token, output position, count)
    cooc: Vec<(String, u8, String, u16, u64)>,
    /// (previous token, next token, count)
    bigrams: Vec<(String, String, u64)>,
    /// (space-joined target prefix, next token, count)
    prefixes: Vec<(String, String, u64)>,
}

impl Scorer for LexicalModel {
    fn score_next(
        &self,
        input_tokens: &[&str],
        output_prefix: &[&str],
        candidates: &[Candidate<'_>],
    ) -> Vec<f64> {
        let words = normalize_tokens(input_tokens);
        let features = input_features(&words, self.config.position_bins);
        let pos = output_prefix.len().min(u16::MAX as usize) as u16;
        let prev = output_prefix.last().copied();
        let alpha = self.config.alpha;

        // baseline: each candidate's smoothed continuation rate among
        // training targets that begin with the decoded prefix
        let key = prefix_key(output_prefix);
        let base_counts: Vec<f64> = candidates
            .iter()
            .map(|c| {
                self.prefix_next
                    .get(&(key.clone(), c.as_str().to_string()))
                    .copied()
                    .unwrap_or(0) as f64
                    + alpha
            })
            .collect();
        let base_total: f64 = base_counts.iter().sum();
        let baseline: Vec<f64> = base_counts.iter().map(|b| (b / base_total).ln()).collect();

        // per-feature smoothed conditionals scored against the baseline
        // (pointwise mutual information), combined in log space; a
        // zero-count candidate never gains from a feature, whatever the
        // relative smoothing floors
        let mut evidence = vec![0.0f64; candidates.len()];
        for (word, bin) in &features {
            let counts: Vec<u64> = candidates
                .iter()
                .map(|c| self.cooc_count_at(word, *bin, c.as_str(), pos))
                .collect();
            if counts.iter().all(|&c| c == 0) {
                continue; // unseen feature: no evidence either way
            }
            let total: f64 = counts.iter().map(|&c| c as f64 + alpha).sum();
            for ((e, &count), base) in evidence.iter_mut().zip(&counts).zip(&baseline) {
                let pmi = ((count as f64 + alpha) / total).ln() - base;
                *e += if count == 0 { pmi.min(0.0) } else { pmi };
            }
        }

        // absence penalties: a candidate whose characteristic words are
        // missing from the input loses mass per missing word
        let input_set: std::collections::BTreeSet<&str> =
            words.iter().map(String::as_str).collect();
        for (e, candidate) in evidence.iter_mut().zip(candidates) {
            let Some(class_words) = self.class_words.get(&(candidate.as_str().to_string(), pos))
            else {
                continue;
            };
            for (word, fraction) in class_words {
                if !input_set.contains(word.as_str()) {
                    *e += (1.0 - fraction.min(0.95)).ln();
                }
            }
        }
        // renormalize the combined evidence into a candidate distribution
        let max_evidence = evidence.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp_sum: f64 = evidence.iter().map(|e| (e - max_evidence).exp()).sum();
        let cooc_log_probs: Vec<f64> = evidence
            .iter()
            .map(|e| (e - max_evidence) - exp_sum.ln())
            .collect();

        let bigram_weights: Vec<f64> = candidates
            .iter()
            .map(|c| self.bigram_count(prev, c.as_str()) as f64 + alpha)
            .collect();
        let bigram_total: f64 = bigram_weights.iter().sum();

        cooc_log_probs
            .iter()
            .zip(&bigram_weights)
            .map(|(cooc_lp, bw)| {
                self.config.cooc_weight * cooc_lp
                    + self.config.bigram_weight * (bw / bigram_total).ln()
            })
            .collect()
    }
}
