//! Prompts for the inference-time pipeline calls.
//!
//! Each prompt ends with a `### Task:` line naming the step, so scripted
//! backends can route requests by step.

use std::fmt::Write as _;

use crate::conversation::{Conversation, Passage, Role};
use crate::datagen::{render_prompt, CriticTask, Instance};

pub const TASK_DECISION: &str = "### Task: retrieval decision";
pub const TASK_RESPOND: &str = "### Task: respond";
pub const TASK_RELEVANCE: &str = "### Task: relevance";
pub const TASK_GROUNDEDNESS: &str = "### Task: groundedness";
pub const TASK_UTILITY: &str = "### Task: utility";

pub fn render_history(conv: &Conversation) -> String {
    let mut out = String::new();
    for turn in &conv.turns {
        let who = match turn.role {
            Role::User => "User",
            Role::Assistant => "Assistant",
        };
        let _ = writeln!(out, "{who}: {}", turn.text.trim());
    }
    out
}

fn render_passage(p: &Passage) -> String {
    if p.title.is_empty() {
        p.text.clone()
    } else {
        format!("{}\n{}", p.title, p.text)
    }
}

fn history_block(conv: &Conversation) -> String {
    format!("### Conversation History:\n{}\n", render_history(conv))
}

fn evidence_block(p: &Passage) -> String {
    format!("### Evidence:\n{}\n\n", render_passage(p))
}

/// Retrieval decision prompt. Prior passages are included verbatim when
/// there are any.
pub fn decision_prompt(conv: &Conversation, prior: &[Passage]) -> String {
    let mut out = history_block(conv);
    if !prior.is_empty() {
        out.push_str("### Previously Retrieved Passages:\n");
        for (i, p) in prior.iter().enumerate() {
            let _ = writeln!(out, "[{}] {}", i + 1, render_passage(p));
        }
        out.push('\n');
        out.push_str(TASK_DECISION);
        out.push_str(
            "\nAnswer [Retrieve] if new passages are needed, [Continue to Use Evidence] if the passages and history above suffice, or [No Retrieve] if no evidence is needed.\n",
        );
    } else {
        out.push_str(TASK_DECISION);
        out.push_str("\nAnswer [Retrieve] if passages are needed for the next response, or [No Retrieve] otherwise.\n");
    }
    out
}

pub fn summarization_prompt(conv: &Conversation) -> String {
    render_prompt(CriticTask::Summarization, &Instance::new(conv.clone()))
        .expect("summarization needs no optional fields")
}

pub fn generation_prompt(conv: &Conversation, passage: Option<&Passage>) -> String {
    let mut out = history_block(conv);
    if let Some(p) = passage {
        out.push_str(&evidence_block(p));
    }
    out.push_str(TASK_RESPOND);
    out.push_str("\nRespond to the last user turn.\n### Response:\n");
    out
}

pub fn relevance_prompt(conv: &Conversation, passage: &Passage) -> String {
    let mut out = history_block(conv);
    out.push_str(&evidence_block(passage));
    out.push_str(TASK_RELEVANCE);
    out.push_str("\nIs the evidence relevant to the conversation? Answer [Relevant] or [Non Relevant].\n");
    out
}

pub fn groundedness_prompt(conv: &Conversation, passage: &Passage, preceding: &str, segment: &str) -> String {
    let mut out = history_block(conv);
    out.push_str(&evidence_block(passage));
    if !preceding.is_empty() {
        let _ = write!(out, "### Preceding sentences:\n{preceding}\n\n");
    }
    let _ = write!(out, "### Segment:\n{segment}\n\n");
    out.push_str(TASK_GROUNDEDNESS);
    out.push_str("\nIs the segment supported by the evidence? Answer [Fully supported], [Partially supported] or [No support].\n");
    out
}

pub fn utility_prompt(conv: &Conversation, preceding: &str, segment: &str) -> String {
    let mut out = history_block(conv);
    let _ = write!(out, "### Response:\n{preceding}{segment}\n\n");
    out.push_str(TASK_UTILITY);
    out.push_str("\nRate the usefulness of the response from [Utility:1] to [Utility:5].\n");
    out
}
