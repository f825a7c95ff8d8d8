//! Few-shot prompt templates for label collection, summarization and
//! response judging.
//!
//! Each template is a fixed preamble followed by the instance layout, with
//! `{{slot}}` placeholders filled at render time. The SHA-256 of the asset
//! text is recorded in every dataset record.

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::task::{CriticTask, Field};
use crate::conversation::{Conversation, Passage, Role};

/// Bumped whenever an asset changes.
pub const TEMPLATE_VERSION: u32 = 1;

const RETRIEVAL2: &str = include_str!("../../templates/retrieval2.txt");
const RETRIEVAL3: &str = include_str!("../../templates/retrieval3.txt");
const RELEVANCE: &str = include_str!("../../templates/relevance.txt");
const GROUNDEDNESS: &str = include_str!("../../templates/groundedness.txt");
const UTILITY: &str = include_str!("../../templates/utility.txt");
const SUMMARIZATION: &str = include_str!("../../templates/summarization.txt");
const JUDGE_EVAL: &str = include_str!("../../templates/judge_eval.txt");

pub fn template_text(task: CriticTask) -> &'static str {
    match task {
        CriticTask::Retrieval2 => RETRIEVAL2,
        CriticTask::Retrieval3 => RETRIEVAL3,
        CriticTask::Relevance => RELEVANCE,
        CriticTask::Groundedness => GROUNDEDNESS,
        CriticTask::Utility => UTILITY,
        CriticTask::Summarization => SUMMARIZATION,
        CriticTask::JudgeEval => JUDGE_EVAL,
    }
}

/// Hex SHA-256 of the task's template asset.
pub fn template_hash(task: CriticTask) -> String {
    Sha256::digest(template_text(task).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// The material a prompt is rendered from.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Instance {
    pub conversation: Conversation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Passage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preceding: Option<String>,
    /// Opaque origin tag (e.g. the source dataset name).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Reference label, when the instance comes from an annotated set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
}

impl Instance {
    pub fn new(conversation: Conversation) -> Self {
        Self {
            conversation,
            ..Self::default()
        }
    }

    pub fn with_evidence(mut self, passage: Passage) -> Self {
        self.evidence = Some(passage);
        self
    }

    pub fn with_response(mut self, response: impl Into<String>) -> Self {
        self.response = Some(response.into());
        self
    }

    pub fn with_preceding(mut self, preceding: impl Into<String>) -> Self {
        self.preceding = Some(preceding.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("{field} required for {task}")]
    MissingField { task: CriticTask, field: Field },
    #[error("{task} needs a conversation with at least one user turn")]
    NoQuestion { task: CriticTask },
}

fn join_turns(conv: &Conversation, sep: &str) -> String {
    conv.turns.iter().map(|t| t.text.trim()).collect::<Vec<_>>().join(sep)
}

fn fill(template: &str, slot: impl Fn(&str) -> String) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        let Some(close) = rest[open..].find("}}") else {
            break;
        };
        out.push_str(&rest[..open]);
        out.push_str(&slot(&rest[open + 2..open + close]));
        rest = &rest[open + close + 2..];
    }
    out.push_str(rest);
    out
}

/// Renders the task prompt for one instance. Pure in `(task, instance)`.
pub fn render_prompt(task: CriticTask, instance: &Instance) -> Result<String, RenderError> {
    for field in task.required_fields() {
        let present = match field {
            Field::Evidence => instance.evidence.is_some(),
            Field::Response => instance.response.is_some(),
        };
        if !present {
            return Err(RenderError::MissingField { task, field: *field });
        }
    }
    let evidence = instance
        .evidence
        .as_ref()
        .map(|p| p.index_text())
        .unwrap_or_default();
    let response = instance.response.clone().unwrap_or_default();
    let preceding = instance
        .preceding
        .as_ref()
        .map(|p| format!("Preceding sentences: {p}\n\n"))
        .unwrap_or_default();

    let (conversation, question) = match task {
        CriticTask::Summarization => (join_turns(&instance.conversation, "\n"), String::new()),
        CriticTask::JudgeEval => {
            let turns = &instance.conversation.turns;
            let last_user = turns
                .iter()
                .rposition(|t| t.role == Role::User)
                .ok_or(RenderError::NoQuestion { task })?;
            let before = Conversation::with_turns("", turns[..last_user].to_vec());
            (join_turns(&before, "\n"), turns[last_user].text.trim().to_string())
        }
        _ => (join_turns(&instance.conversation, "\n\n"), String::new()),
    };

    Ok(fill(template_text(task), |name| match name {
        "conversation" => conversation.clone(),
        "evidence" => evidence.clone(),
        "response" | "generated_response" => response.clone(),
        "preceding" => preceding.clone(),
        "question" => question.clone(),
        other => format!("{{{{{other}}}}}"),
    }))
}
