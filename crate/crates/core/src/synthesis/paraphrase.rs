//! Paraphrase backends.
//!
//! [`HttpParaphraseService`] talks to an operator-configured text-completion
//! endpoint; [`FallbackParaphraser`] is a deterministic offline stand-in
//! (synonym substitution from a fixed table plus a leading-clause reorder)
//! so that corpus builds and tests never need network access or keys.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::util::fnv1a;

/// Next-sentence provider contract. Implementations must be safe to call
/// from several threads at once; corpus assembly fans requests out.
pub trait ParaphraseService: Sync {
    /// Up to `n` paraphrases of `sentence`. Raw output; the caller filters
    /// empties, duplicates, and echoes of the input.
    fn paraphrase(&self, sentence: &str, n: usize) -> Result<Vec<String>, SynthesisError>;

    /// Stable identity string folded into corpus fingerprints.
    fn fingerprint(&self) -> String;
}

/// The completion prompt sent for each sentence.
pub fn build_prompt(sentence: &str, n: usize) -> String {
    format!(
        "Rephrase the source sentence in {n} different ways. Make the outputs as diverse as possible.\n\nSource: {sentence}\n\nOutputs:"
    )
}

/// Extract the `1. …` numbered entries from a completion. Empty lines and
/// lines without leading `k.`/`k)` numbering are dropped, as are exact
/// duplicates.
pub fn parse_numbered_list(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let digits = line.bytes().take_while(|b| b.is_ascii_digit()).count();
        if digits == 0 {
            continue;
        }
        let rest = &line[digits..];
        let Some(body) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) else {
            continue;
        };
        let body = body.trim();
        if body.is_empty() || out.iter().any(|seen| seen == body) {
            continue;
        }
        out.push(body.to_string());
    }
    out
}

/// Transient-failure retry policy for the HTTP service.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: String,
    max_tokens: u32,
    temperature: f32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    text: String,
}

/// Client for an OpenAI-style text-completion endpoint.
///
/// Endpoint URL, model name, and auth token come from the environment:
/// `NL2LTL_PARAPHRASE_URL`, `NL2LTL_PARAPHRASE_MODEL`, and
/// `NL2LTL_PARAPHRASE_API_KEY` (the key is optional). Both transport
/// failures and malformed responses are retried with exponential backoff.
pub struct HttpParaphraseService {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpParaphraseService {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            retry: RetryPolicy::default(),
            agent,
        }
    }

    pub fn from_env() -> Result<Self, SynthesisError> {
        let endpoint =
            std::env::var("NL2LTL_PARAPHRASE_URL").map_err(|_| SynthesisError::MissingEnv {
                var: "NL2LTL_PARAPHRASE_URL".into(),
            })?;
        let model =
            std::env::var("NL2LTL_PARAPHRASE_MODEL").map_err(|_| SynthesisError::MissingEnv {
                var: "NL2LTL_PARAPHRASE_MODEL".into(),
            })?;
        let mut svc = Self::new(endpoint, model);
        svc.api_key = std::env::var("NL2LTL_PARAPHRASE_API_KEY").ok();
        Ok(svc)
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn request_once(&self, sentence: &str, n: usize) -> Result<Vec<String>, SynthesisError> {
        let body = CompletionRequest {
            model: &self.model,
            prompt: build_prompt(sentence, n),
            max_tokens: 512,
            temperature: 0.9,
        };
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("authorization", &format!("Bearer {key}"));
        }
        let mut response =
            req.send_json(&body)
                .map_err(|e| SynthesisError::ServiceUnavailable {
                    detail: e.to_string(),
                })?;
        let parsed: CompletionResponse = response.body_mut().read_json().map_err(|e| {
            SynthesisError::MalformedServiceResponse {
                detail: e.to_string(),
            }
        })?;
        let text = parsed
            .choices
            .first()
            .map(|c| c.text.as_str())
            .ok_or_else(|| SynthesisError::MalformedServiceResponse {
                detail: "response has no choices".into(),
            })?;
        let outputs = parse_numbered_list(text);
        if outputs.is_empty() {
            return Err(SynthesisError::MalformedServiceResponse {
                detail: "no numbered outputs in completion".into(),
            });
        }
        Ok(outputs)
    }
}

impl ParaphraseService for HttpParaphraseService {
    fn paraphrase(&self, sentence: &str, n: usize) -> Result<Vec<String>, SynthesisError> {
        let mut last_err = None;
        for attempt in 0..self.retry.attempts {
            match self.request_once(sentence, n) {
                Ok(outputs) => return Ok(outputs),
                Err(e) => {
                    last_err = Some(e);
                    if attempt + 1 < self.retry.attempts {
                        std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt));
                    }
                }
            }
        }
        Err(last_err.unwrap_or(SynthesisError::ServiceUnavailable {
            detail: "no attempts made".into(),
        }))
    }

    fn fingerprint(&self) -> String {
        format!("service(endpoint={},model={})", self.endpoint, self.model)
    }
}

/// Word → substitutes used by the offline paraphraser. Multi-word
/// substitutes are allowed.
const SYNONYMS: &[(&str, &[&str])] = &[
    ("go", &["move", "head", "proceed", "travel"]),
    ("visit", &["reach", "stop by", "call at"]),
    ("enter", &["walk into", "step into"]),
    ("room", &["area", "space"]),
    ("finally", &["eventually", "in the end", "at last"]),
    ("eventually", &["finally", "at some point"]),
    ("then", &["afterwards", "next", "after that"]),
    ("never", &["at no point", "do not ever"]),
    (
        "avoid",
        &["stay away from", "keep away from", "steer clear of"],
    ),
    ("until", &["till", "up until"]),
    ("scan", &["sweep", "survey", "examine"]),
    ("bring", &["carry", "take", "deliver"]),
    ("move", &["shift", "relocate"]),
    ("pick", &["grab", "lift"]),
    ("cubes", &["blocks", "pieces"]),
    ("basket", &["bin", "container"]),
    ("table", &["desk", "surface"]),
    ("reach", &["arrive at", "get to"]),
    ("through", &["via", "by way of"]),
    ("make", &["be"]),
    ("first", &["beforehand", "to begin with"]),
    ("landmark", &["marker", "waypoint"]),
    ("floor", &["level", "storey"]),
    ("station", &["dock", "point"]),
];

fn lookup_synonyms(word: &str) -> Option<&'static [&'static str]> {
    SYNONYMS
        .iter()
        .find(|(k, _)| *k == word)
        .map(|(_, subs)| *subs)
}

/// Deterministic offline paraphraser: single- and double-word synonym
/// substitutions plus one leading-clause reorder. Minimal edits come first
/// (singles, then the reorder, then doubles); the seed shuffles within each
/// tier, mixed with the sentence so each input gets its own stable order.
#[derive(Debug, Clone)]
pub struct FallbackParaphraser {
    seed: u64,
}

impl FallbackParaphraser {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn candidate_tiers(&self, sentence: &str) -> (Vec<String>, Vec<String>) {
        let words: Vec<&str> = sentence.split_whitespace().collect();
        let mut singles: Vec<(usize, String)> = Vec::new();
        for (i, raw) in words.iter().enumerate() {
            let (core, trail) = split_trailing_punct(raw);
            let lowered = core.to_lowercase();
            let Some(subs) = lookup_synonyms(&lowered) else {
                continue;
            };
            let capitalized = core.chars().next().is_some_and(|c| c.is_uppercase());
            for sub in subs {
                let replacement = if capitalized {
                    capitalize(sub)
                } else {
                    (*sub).to_string()
                };
                singles.push((i, format!("{replacement}{trail}")));
            }
        }

        let rebuild = |edits: &[(usize, &str)]| -> String {
            words
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    edits
                        .iter()
                        .find(|(j, _)| *j == i)
                        .map(|(_, r)| (*r).to_string())
                        .unwrap_or_else(|| (*w).to_string())
                })
                .collect::<Vec<_>>()
                .join(" ")
        };

        let mut minimal: Vec<String> = Vec::new();
        for (i, r) in &singles {
            minimal.push(rebuild(&[(*i, r.as_str())]));
        }
        if let Some(reordered) = reorder_leading_clause(sentence) {
            minimal.push(reordered);
        }
        // compound tier: pairs over the first substitute of each slot
        let mut compound: Vec<String> = Vec::new();
        let mut first_per_slot: Vec<(usize, &str)> = Vec::new();
        for (i, r) in &singles {
            if !first_per_slot.iter().any(|(j, _)| j == i) {
                first_per_slot.push((*i, r.as_str()));
            }
        }
        for a in 0..first_per_slot.len() {
            for b in a + 1..first_per_slot.len() {
                compound.push(rebuild(&[first_per_slot[a], first_per_slot[b]]));
            }
        }
        (minimal, compound)
    }
}

fn split_trailing_punct(word: &str) -> (&str, &str) {
    let trimmed = word.trim_end_matches(['.', ',', '!', '?', ';', ':']);
    (trimmed, &word[trimmed.len()..])
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn decapitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// `"A to finally B"` → `"To finally B, A"`, keeping a trailing period if
/// the source had one.
fn reorder_leading_clause(sentence: &str) -> Option<String> {
    let idx = sentence.find(" to finally ")?;
    let head = &sentence[..idx];
    let tail = sentence[idx + " to finally ".len()..].trim_end_matches('.');
    if head.is_empty() || tail.is_empty() {
        return None;
    }
    let period = if sentence.trim_end().ends_with('.') {
        "."
    } else {
        ""
    };
    Some(format!("To finally {tail}, {}{period}", decapitalize(head)))
}

impl ParaphraseService for FallbackParaphraser {
    fn paraphrase(&self, sentence: &str, _n: usize) -> Result<Vec<String>, SynthesisError> {
        let (mut minimal, mut compound) = self.candidate_tiers(sentence);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(sentence.as_bytes()));
        minimal.shuffle(&mut rng);
        compound.shuffle(&mut rng);
        minimal.extend(compound);
        Ok(minimal)
    }

    fn fingerprint(&self) -> String {
        format!("fallback(seed={})", self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_matches_wire_contract_for_ten() {
        let prompt = build_prompt(
            "Go to the blue room or go to the red room to finally go to the yellow room.",
            10,
        );
        assert_eq!(
            prompt,
            "Rephrase the source sentence in 10 different ways. Make the outputs as diverse as possible.\n\nSource: Go to the blue room or go to the red room to finally go to the yellow room.\n\nOutputs:"
        );
    }

    #[test]
    fn numbered_list_parser_filters_junk() {
        let text = "\n1. First variant.\nnot numbered\n\n2) Second variant\n2) Second variant\nx. nope\n10. Tenth\n";
        let out = parse_numbered_list(text);
        assert_eq!(out, vec!["First variant.", "Second variant", "Tenth"]);
    }

    #[test]
    fn numbered_list_parser_empty_on_prose() {
        assert!(parse_numbered_list("Sorry, I cannot do that.").is_empty());
    }

    #[test]
    fn fallback_is_deterministic_per_seed() {
        let a = FallbackParaphraser::new(9)
            .paraphrase("go to the blue room", 10)
            .unwrap();
        let b = FallbackParaphraser::new(9)
            .paraphrase("go to the blue room", 10)
            .unwrap();
        assert_eq!(a, b);
        let c = FallbackParaphraser::new(10)
            .paraphrase("go to the blue room", 10)
            .unwrap();
        assert_eq!(
            a.iter().collect::<std::collections::BTreeSet<_>>(),
            c.iter().collect::<std::collections::BTreeSet<_>>(),
            "seed changes order, not the candidate set"
        );
    }

    #[test]
    fn fallback_reorders_sequencing_sentences() {
        let out = FallbackParaphraser::new(0)
            .paraphrase("Go to the blue room to finally go to the yellow room.", 20)
            .unwrap();
        assert!(
            out.iter()
                .any(|v| v == "To finally go to the yellow room, go to the blue room."),
            "{out:?}"
        );
    }

    #[test]
    fn fallback_preserves_capitalization_and_punctuation() {
        let out = FallbackParaphraser::new(1)
            .paraphrase("Go to the blue room.", 30)
            .unwrap();
        assert!(out.iter().any(|v| v == "Move to the blue room."), "{out:?}");
    }
}
