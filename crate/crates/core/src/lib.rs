//! Natural-language → linear temporal logic translation pipeline.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! * [`ltl`] — the LTL grammar, its AST, infix/prefix parsers and printers,
//!   and finite-trace satisfaction (used as a semantic test oracle).
//! * [`canonical`] — the bijective English-like canonical form sitting
//!   between a formula and free natural language.
//! * [`backtranslate`] — rule- and template-based LTL→English generation,
//!   including formula templates ("structures") with AP-shaped holes.
//! * [`synthesis`] — synthetic corpus construction: enumerate formulas,
//!   back-translate, and augment with a paraphrase service (a deterministic
//!   offline paraphraser is built in for hermetic runs).
//! * [`decoder`] — output-set-constrained decoding over a token trie with a
//!   pluggable next-token scorer, plus a statistical lexical scorer.
//! * [`eval`] — dataset ingestion with stat validation, exact-match scoring,
//!   k-fold cross-validation, and the low-resource evaluation protocol.

pub mod backtranslate;
pub mod canonical;
pub mod decoder;
pub mod eval;
pub mod ltl;
pub mod synthesis;
pub mod testing;
pub(crate) mod util;

pub use backtranslate::{AnnotationTemplate, LtlStructure, Skeleton};
pub use canonical::{CanonicalForm, Lexicon};
pub use decoder::{LexicalModel, OutputTrie, Scorer};
pub use eval::{Dataset, DatasetStats, EvalConfig, EvalReport};
pub use ltl::{ApSet, AtomicProp, Formula, Notation, Trace};
pub use synthesis::{Corpus, Example, Provenance, TargetRepr};
