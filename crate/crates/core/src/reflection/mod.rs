//! Reflection tokens: vocabulary, inline parsing and candidate scoring.

mod annotate;
mod scoring;
mod tokens;

pub use annotate::{parse_annotated, strip_tokens, AnnotatedOutput, AnnotatedSegment, TokenMark};
pub use scoring::{
    compose_score, desirable_score, group_score, normalize_group, CandidateScore, GroupScores,
    ScoreError, ScoringMode, ScoringWeights,
};
pub use tokens::{
    ReflectionToken, TokenGroup, UnknownToken, CANONICAL_TOKENS, TOKEN_ALIASES, TOKEN_TABLE_VERSION,
};
