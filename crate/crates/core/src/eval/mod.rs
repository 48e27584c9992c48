//! Evaluation harness: dataset ingestion, exact-match scoring, k-fold
//! cross-validation, and the low-resource protocol (train on synthetic,
//! test on the full golden set), plus the two ablations (no constrained
//! decoding, no augmentation).

mod dataset;
mod harness;

pub use dataset::{golden_corpus, ingest, Dataset, DatasetStats, FormatAdapter};
pub use harness::{
    exact_match, kfold_split, run_eval, EvalConfig, EvalReport, FormulaCell, Prediction, Scenario,
    ScorerKind,
};

use thiserror::Error;

use crate::backtranslate::BacktranslateError;
use crate::canonical::CanonicalError;
use crate::decoder::DecoderError;
use crate::ltl::LtlError;
use crate::synthesis::SynthesisError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {reason}")]
    ParseFailure { line: usize, reason: String },
    #[error("stat mismatch for {field}: declared {declared}, computed {computed}")]
    StatMismatch {
        field: &'static str,
        declared: usize,
        computed: usize,
    },
    #[error("need at least {need} examples, have {have}")]
    TooFewExamples { have: usize, need: usize },
    #[error("invalid eval config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Backtranslate(#[from] BacktranslateError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error("manifest: {0}")]
    Format(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
