//! The next-token scoring contract and baseline scorers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Wire spelling of the end-of-sequence pseudo-token. At terminal trie nodes
/// it is scored like any other candidate.
pub const STOP_TOKEN: &str = "</s>";

/// A continuation offered to the scorer: either an output token or stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate<'a> {
    Token(&'a str),
    Stop,
}

impl<'a> Candidate<'a> {
    pub fn as_str(&self) -> &'a str {
        match self {
            Candidate::Token(t) => t,
            Candidate::Stop => STOP_TOKEN,
        }
    }
}

/// Next-token log-score provider.
///
/// Given the input tokens, the output prefix decoded so far, and the
/// candidate continuations, returns one finite log-score per candidate (in
/// candidate order). Implementations must be deterministic for fixed state;
/// decoding relies on that for reproducibility, and on nothing else — the
/// membership guarantee of constrained decoding holds for any output.
pub trait Scorer: Sync {
    fn score_next(
        &self,
        input_tokens: &[&str],
        output_prefix: &[&str],
        candidates: &[Candidate<'_>],
    ) -> Vec<f64>;
}

/// Scores every candidate identically.
pub struct UniformScorer;

impl Scorer for UniformScorer {
    fn score_next(&self, _: &[&str], _: &[&str], candidates: &[Candidate<'_>]) -> Vec<f64> {
        vec![0.0; candidates.len()]
    }
}

/// One-hot oracle: follows a fixed target token sequence and stops at its
/// end. Off-target candidates score a large negative constant.
pub struct OracleScorer {
    target: Vec<String>,
}

impl OracleScorer {
    pub fn for_target(target: &str) -> Self {
        Self {
            target: target.split_whitespace().map(str::to_string).collect(),
        }
    }
}

impl Scorer for OracleScorer {
    fn score_next(&self, _: &[&str], prefix: &[&str], candidates: &[Candidate<'_>]) -> Vec<f64> {
        let want = self.target.get(prefix.len());
        candidates
            .iter()
            .map(|c| match (c, want) {
                (Candidate::Token(t), Some(w)) if t == w => 0.0,
                (Candidate::Stop, None) => 0.0,
                _ => -1.0e4,
            })
            .collect()
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    input_tokens: &'a [&'a str],
    output_prefix: &'a [&'a str],
    candidates: Vec<&'a str>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// Adapter for an operator-supplied next-token-probability endpoint, so a
/// finetuned model can sit behind the [`Scorer`] contract without code
/// changes.
///
/// Wire format: POST `{"input_tokens": [...], "output_prefix": [...],
/// "candidates": [...]}` (stop spelled as `</s>`) returning
/// `{"scores": [...]}` with one finite log-score per candidate.
/// Configured from `NL2LTL_SCORER_URL` and optional `NL2LTL_SCORER_API_KEY`.
///
/// The trait has no error channel; transport or shape failures score the
/// candidates uniformly and are tallied in [`RemoteScorer::failure_count`].
pub struct RemoteScorer {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    failures: AtomicUsize,
}

impl RemoteScorer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            agent,
            failures: AtomicUsize::new(0),
        }
    }

    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("NL2LTL_SCORER_URL").ok()?;
        let mut scorer = Self::new(endpoint);
        scorer.api_key = std::env::var("NL2LTL_SCORER_API_KEY").ok();
        Some(scorer)
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    pub fn failure_count(&self) -> usize {
        self.failures.load(Ordering::SeqCst)
    }

    fn request(
        &self,
        input_tokens: &[&str],
        output_prefix: &[&str],
        candidates: &[Candidate<'_>],
    ) -> Result<Vec<f64>, String> {
        let body = ScoreRequest {
            input_tokens,
            output_prefix,
            candidates: candidates.iter().map(Candidate::as_str).collect(),
        };
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = req.send_json(&body).map_err(|e| e.to_string())?;
        let parsed: ScoreResponse = response.body_mut().read_json().map_err(|e| e.to_string())?;
        if parsed.scores.len() != candidates.len() {
            return Err(format!(
                "endpoint returned {} scores for {} candidates",
                parsed.scores.len(),
                candidates.len()
            ));
        }
        if parsed.scores.iter().any(|s| !s.is_finite()) {
            return Err("endpoint returned non-finite scores".into());
        }
        Ok(parsed.scores)
    }
}

impl Scorer for RemoteScorer {
    fn score_next(
        &self,
        input_tokens: &[&str],
        output_prefix: &[&str],
        candidates: &[Candidate<'_>],
    ) -> Vec<f64> {
        match self.request(input_tokens, output_prefix, candidates) {
            Ok(scores) => scores,
            Err(_) => {
                self.failures.fetch_add(1, Ordering::SeqCst);
                vec![0.0; candidates.len()]
            }
        }
    }
}
