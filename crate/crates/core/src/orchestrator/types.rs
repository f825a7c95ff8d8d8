use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendError;
use crate::conversation::Passage;
use crate::reflection::ScoreError;
use crate::retrieval::RetrieveError;
use crate::{CandidateScore, GroupScores, RankedList};

/// Outcome of the three-way retrieval decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Retrieve,
    NoRetrieve,
    ContinueToUseEvidence,
}

impl Decision {
    pub const ALL: [Decision; 3] = [Decision::Retrieve, Decision::NoRetrieve, Decision::ContinueToUseEvidence];

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Retrieve => "Retrieve",
            Decision::NoRetrieve => "NoRetrieve",
            Decision::ContinueToUseEvidence => "ContinueToUseEvidence",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalDecision {
    pub choice: Decision,
    /// Normalized distribution over the three retrieval tokens, after
    /// masking.
    pub group_scores: GroupScores,
    /// Whether continuing with prior evidence was allowed (prior passages
    /// existed).
    pub continue_eligible: bool,
}

/// Search query built from the conversation. `summary` and `question` are
/// empty when the model output carried no section markers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalQuery {
    pub summary: String,
    pub question: String,
    pub combined: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSegment {
    pub text: String,
    pub score: CandidateScore,
}

/// One generated answer. A failed candidate has no segments, a zero total
/// and a `failure` message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResponse {
    pub passage: Option<Passage>,
    /// Generator output as returned, inline tokens included.
    pub raw_text: String,
    /// Response text with reflection tokens removed.
    pub text: String,
    pub segments: Vec<CandidateSegment>,
    /// Sum of segment composites.
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl CandidateResponse {
    pub fn failed(passage: Option<Passage>, reason: impl Into<String>) -> Self {
        Self {
            passage,
            raw_text: String::new(),
            text: String::new(),
            segments: Vec::new(),
            total: 0.0,
            failure: Some(reason.into()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn passage_id(&self) -> Option<&str> {
        self.passage.as_ref().map(|p| p.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Decision { decision: RetrievalDecision },
    Query { query: RetrievalQuery },
    Retrieved { retrieved: RankedList },
    Candidate { index: usize, candidate: CandidateResponse },
    Selected { index: usize, text: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Decision { .. } => "decision",
            EventKind::Query { .. } => "query",
            EventKind::Retrieved { .. } => "retrieved",
            EventKind::Candidate { .. } => "candidate",
            EventKind::Selected { .. } => "selected",
        }
    }
}

/// One pipeline stage completion. `seq` counts from 0 within a turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnEvent {
    pub turn_index: usize,
    pub seq: usize,
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Everything one pipeline turn produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    /// Index of the user turn within the conversation.
    pub turn_index: usize,
    pub user_text: String,
    pub decision: RetrievalDecision,
    /// Passages the continue path could reuse, most recent first.
    pub prior_passage_ids: Vec<String>,
    pub query: Option<RetrievalQuery>,
    pub retrieved: RankedList,
    pub candidates: Vec<CandidateResponse>,
    pub selected_index: usize,
    pub selected: CandidateResponse,
    pub retriever_calls: usize,
    pub events: Vec<TurnEvent>,
}

impl TurnResult {
    pub fn response_text(&self) -> &str {
        &self.selected.text
    }

    /// Structural invariants: selected is one of the candidates, the query
    /// exists only on the retrieve path, and only that path retrieves.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.candidates.get(self.selected_index) != Some(&self.selected) {
            return Err("selected candidate is not among the candidates".into());
        }
        let retrieve = self.decision.choice == Decision::Retrieve;
        if self.query.is_some() != retrieve {
            return Err("query must be present exactly on the retrieve path".into());
        }
        if !retrieve && !self.retrieved.is_empty() {
            return Err("retrieved passages on a non-retrieve path".into());
        }
        if self.retriever_calls != usize::from(retrieve) {
            return Err(format!("{} retriever calls on a {} turn", self.retriever_calls, self.decision.choice));
        }
        for c in self.candidates.iter().filter(|c| !c.is_failed()) {
            let sum: f64 = c.segments.iter().map(|s| s.score.composite).sum();
            if sum != c.total {
                return Err("candidate total differs from the sum of its segments".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TurnError {
    #[error("invalid session: {0}")]
    InvalidSession(String),
    #[error("empty message")]
    EmptyMessage,
    #[error("unknown passage id {0:?}")]
    UnknownPassage(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("empty query")]
    EmptyQuery,
    #[error("all {} candidates failed: {}", .0.len(), .0.join("; "))]
    AllCandidatesFailed(Vec<String>),
}

impl TurnError {
    /// True when the failure came from the language model rather than the
    /// input.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            TurnError::Backend(_) | TurnError::AllCandidatesFailed(_) | TurnError::EmptyQuery | TurnError::Score(_)
        )
    }
}
