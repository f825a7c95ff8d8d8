use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::reflection::ReflectionToken;

/// A labeling task. The kind fixes the template, the label alphabet and the
/// instance fields that must be present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticTask {
    Retrieval2,
    Retrieval3,
    Relevance,
    Groundedness,
    Utility,
    Summarization,
    JudgeEval,
}

/// Instance fields a task may require.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Evidence,
    Response,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Evidence => "evidence",
            Field::Response => "response",
        })
    }
}

impl CriticTask {
    pub const ALL: [CriticTask; 7] = [
        CriticTask::Retrieval2,
        CriticTask::Retrieval3,
        CriticTask::Relevance,
        CriticTask::Groundedness,
        CriticTask::Utility,
        CriticTask::Summarization,
        CriticTask::JudgeEval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriticTask::Retrieval2 => "retrieval2",
            CriticTask::Retrieval3 => "retrieval3",
            CriticTask::Relevance => "relevance",
            CriticTask::Groundedness => "groundedness",
            CriticTask::Utility => "utility",
            CriticTask::Summarization => "summarization",
            CriticTask::JudgeEval => "judge_eval",
        }
    }

    pub fn required_fields(self) -> &'static [Field] {
        match self {
            CriticTask::Retrieval2 | CriticTask::Summarization => &[],
            CriticTask::Relevance => &[Field::Evidence],
            CriticTask::Retrieval3 | CriticTask::Groundedness => &[Field::Evidence, Field::Response],
            CriticTask::Utility | CriticTask::JudgeEval => &[Field::Response],
        }
    }

    /// Token alphabet for token-labeled tasks, in display order. Empty for
    /// rating and free-text tasks.
    pub fn token_alphabet(self) -> &'static [ReflectionToken] {
        use ReflectionToken::*;
        match self {
            CriticTask::Retrieval2 => &[Retrieve, NoRetrieve],
            CriticTask::Retrieval3 => &[Retrieve, NoRetrieve, ContinueToUseEvidence],
            CriticTask::Relevance => &[Relevant, NonRelevant],
            CriticTask::Groundedness => &[FullySupported, PartiallySupported, NoSupport],
            CriticTask::Utility => &[Utility(1), Utility(2), Utility(3), Utility(4), Utility(5)],
            CriticTask::Summarization | CriticTask::JudgeEval => &[],
        }
    }

    /// Inclusive rating range of the external judge score.
    pub fn rating_range(self) -> Option<(u8, u8)> {
        match self {
            CriticTask::JudgeEval => Some((0, 5)),
            _ => None,
        }
    }
}

impl fmt::Display for CriticTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriticTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CriticTask::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = CriticTask::ALL.iter().map(|t| t.as_str()).collect();
                format!("unknown task {s:?} (expected one of {})", names.join(", "))
            })
    }
}
