//! Output-set-constrained decoding.
//!
//! A [`OutputTrie`] is built over every valid target string; decoding walks
//! the trie and only ever offers trie-legal continuations to the
//! [`Scorer`], so the returned string is guaranteed to be a member of the
//! valid set no matter what the scorer says. The unconstrained variant
//! decodes over the open vocabulary and may emit malformed output, which is
//! exactly the ablation it exists for.

mod lexical;
mod scorer;
mod search;
mod trie;

pub use lexical::{train_lexical, LexicalConfig, LexicalModel};
pub use scorer::{Candidate, OracleScorer, RemoteScorer, Scorer, UniformScorer, STOP_TOKEN};
pub use search::{constrained_decode, unconstrained_decode};
pub use trie::{build_trie, OutputTrie};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecoderError {
    #[error("the valid output set is empty")]
    EmptyOutputSet,
    #[error("valid output {index} is blank")]
    BlankOutput { index: usize },
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("model file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("model file: {reason}")]
    Model { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
