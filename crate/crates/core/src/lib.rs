//! Multiple-choice cloze item generation with an LLM: word-group
//! preprocessing, stem generation and validation, distractor selection,
//! and evaluation of human review results.

pub mod distractor;
pub mod evalkit;
pub mod gateway;
pub mod morphology;
pub mod pipeline;
pub mod stem;
pub mod wordlist;

pub use distractor::{CandidatePool, DistractorSet, JudgmentVerdict, SelectionConfig};
pub use evalkit::{AgreementStats, EvalError, Rate, Verdict};
pub use gateway::{CompletionRequest, CompletionResponse, Gateway, GatewayError, RequestTag};
pub use morphology::{Morphology, PosTag, WordGroup};
pub use pipeline::{run_pipeline, QuestionItem, RunConfig, RunSummary};
pub use stem::{QuestionStem, StemConstraints, TaggedKey};
pub use wordlist::WordGroupSet;

/// Agreement statistics in double precision.
pub type AgreementStats64 = evalkit::AgreementStats64;
/// Rates in double precision.
pub type Rate64 = evalkit::Rate64;
