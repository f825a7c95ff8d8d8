//! Conversational retrieval-augmented generation with reflection-token
//! scoring.
//!
//! Each turn decides whether to retrieve, optionally condenses the
//! conversation into a search query, generates one candidate per passage,
//! scores candidates with reflection-token probabilities and picks the best
//! one with a segment-level beam search. The language model sits behind
//! [`backend::LanguageModel`], so the whole pipeline runs deterministically
//! against [`backend::ScriptedBackend`].
//!
//! Numeric code is generic over [`Real`]; the aliases below fix it to `f64`,
//! which is what the pipeline, evaluation and service use.

pub mod backend;
pub mod config;
pub mod conversation;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod jsonl;
pub mod logprob;
pub mod orchestrator;
pub mod reflection;
pub mod retrieval;
pub mod scalar;

pub use config::{validate_config, PipelineConfig};
pub use conversation::{validate_conversation, Conversation, Passage, Role, Turn, Validation};
pub use scalar::Real;

pub type GroupScores = reflection::GroupScores<f64>;
pub type ScoringWeights = reflection::ScoringWeights<f64>;
pub type CandidateScore = reflection::CandidateScore<f64>;
pub type RankedList = retrieval::RankedList<f64>;
pub type RankedEntry = retrieval::RankedEntry<f64>;
pub type Bm25Index = retrieval::Bm25Index<f64>;
pub type Bm25Params = retrieval::Bm25Params<f64>;
