//! Conversations, turns and passages, plus structural validation.

use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::User => f.write_str("user"),
            Role::Assistant => f.write_str("assistant"),
        }
    }
}

/// One utterance in a conversation.
///
/// `attached_passage_ids` covers both passages a user pasted into the question
/// and passages retrieved on an earlier turn; the retrieval decision treats them
/// the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attached_passage_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_passage_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_rewrite: Option<String>,
}

impl Turn {
    pub fn user(text: impl Into<String>) -> Self {
        Self::new(Role::User, text)
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self::new(Role::Assistant, text)
    }

    pub fn new(role: Role, text: impl Into<String>) -> Self {
        Self {
            role,
            text: text.into(),
            attached_passage_ids: Vec::new(),
            gold_passage_ids: None,
            gold_rewrite: None,
        }
    }

    pub fn with_passages<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.attached_passage_ids = ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_gold<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.gold_passage_ids = Some(ids.into_iter().map(Into::into).collect());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    #[serde(default)]
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            turns: Vec::new(),
        }
    }

    pub fn with_turns(id: impl Into<String>, turns: Vec<Turn>) -> Self {
        Self {
            id: id.into(),
            turns,
        }
    }

    pub fn last_user_text(&self) -> Option<&str> {
        self.turns
            .iter()
            .rev()
            .find(|t| t.role == Role::User)
            .map(|t| t.text.as_str())
    }

    pub fn ends_with_user(&self) -> bool {
        matches!(self.turns.last(), Some(t) if t.role == Role::User)
    }

    /// The first `len` turns as a new conversation with the same id.
    pub fn prefix(&self, len: usize) -> Conversation {
        Conversation {
            id: self.id.clone(),
            turns: self.turns[..len.min(self.turns.len())].to_vec(),
        }
    }
}

/// A retrieval unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            text: text.into(),
        }
    }

    /// Text fed to the indexers: `title + " " + text` when a title is present.
    pub fn index_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{} {}", self.title, self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.turn {
            Some(i) => write!(f, "turn {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Outcome of a validation pass. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn push(&mut self, turn: Option<usize>, message: impl Into<String>) {
        self.violations.push(Violation {
            turn,
            message: message.into(),
        });
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let joined = self.messages().join("; ");
        f.write_str(&joined)
    }
}

/// Checks role alternation (user first) and non-empty turn text.
pub fn validate_conversation(conv: &Conversation) -> Validation {
    let mut out = Validation::default();
    for (i, turn) in conv.turns.iter().enumerate() {
        let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
        if turn.role != expected {
            if i == 0 {
                out.push(Some(0), "must start with user");
            } else {
                out.push(Some(i), format!("expected {expected} turn, found {}", turn.role));
            }
        }
        if turn.text.trim().is_empty() {
            out.push(Some(i), "empty turn text");
        }
    }
    out
}

/// [`validate_conversation`] plus resolution of every attached passage id
/// through `resolves`.
pub fn validate_conversation_with_corpus<'a, F>(conv: &'a Conversation, resolves: F) -> Validation
where
    F: Fn(&'a str) -> bool,
{
    let mut out = validate_conversation(conv);
    for (i, turn) in conv.turns.iter().enumerate() {
        for id in &turn.attached_passage_ids {
            if !resolves(id) {
                out.push(Some(i), format!("unresolvable passage id {id:?}"));
            }
        }
    }
    out
}

/// Extra precondition of the pipeline: the conversation is well formed and
/// its final turn is a user turn.
pub fn validate_for_turn(conv: &Conversation) -> Validation {
    let mut out = validate_conversation(conv);
    if !conv.ends_with_user() {
        out.push(None, "final turn must be a user turn");
    }
    out
}

/// Reads line-delimited conversation records. Blank lines are skipped.
pub fn read_conversations<R: BufRead>(reader: R) -> Result<Vec<Conversation>, FormatError> {
    crate::jsonl::read_records(reader)
}

pub fn write_conversations<W: std::io::Write>(
    mut writer: W,
    convs: &[Conversation],
) -> std::io::Result<()> {
    for c in convs {
        serde_json::to_writer(&mut writer, c)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_alternation_is_ok() {
        let conv = Conversation::with_turns(
            "c",
            vec![Turn::user("q1"), Turn::assistant("a1"), Turn::user("q2")],
        );
        assert!(validate_conversation(&conv).is_ok());
        assert!(validate_for_turn(&conv).is_ok());
    }

    #[test]
    fn must_start_with_user() {
        let conv = Conversation::with_turns("c", vec![Turn::assistant("a1")]);
        let v = validate_conversation(&conv);
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].message, "must start with user");
        assert_eq!(v.violations[0].turn, Some(0));
    }

    #[test]
    fn empty_text_is_a_violation() {
        let conv = Conversation::with_turns("c", vec![Turn::user("   ")]);
        let v = validate_conversation(&conv);
        assert_eq!(v.messages(), vec!["turn 0: empty turn text"]);
    }

    #[test]
    fn every_violation_is_enumerated() {
        let conv = Conversation::with_turns(
            "c",
            vec![Turn::user("q"), Turn::user(""), Turn::assistant("a")],
        );
        let v = validate_conversation(&conv);
        assert_eq!(v.violations.len(), 3);
    }

    #[test]
    fn pipeline_needs_trailing_user_turn() {
        let conv = Conversation::with_turns("c", vec![Turn::user("q"), Turn::assistant("a")]);
        assert!(validate_conversation(&conv).is_ok());
        assert!(!validate_for_turn(&conv).is_ok());
    }

    #[test]
    fn unresolvable_attachment_is_reported() {
        let conv = Conversation::with_turns(
            "c",
            vec![Turn::user("q"), Turn::assistant("a").with_passages(["p1", "zz"])],
        );
        let v = validate_conversation_with_corpus(&conv, |id| id == "p1");
        assert_eq!(v.messages(), vec!["turn 1: unresolvable passage id \"zz\""]);
    }

    #[test]
    fn file_format_field_names() {
        let line = r#"{"id":"c1","turns":[{"role":"user","text":"q","gold_passage_ids":["p3"]},{"role":"assistant","text":"a","attached_passage_ids":["p3"]}]}"#;
        let convs = read_conversations(line.as_bytes()).unwrap();
        assert_eq!(convs[0].turns[0].gold_passage_ids.as_deref(), Some(&["p3".to_string()][..]));
        assert_eq!(convs[0].turns[1].attached_passage_ids, vec!["p3"]);
        let mut buf = Vec::new();
        write_conversations(&mut buf, &convs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), line);
    }

    #[test]
    fn index_text_joins_title() {
        assert_eq!(Passage::new("p", "", "body").index_text(), "body");
        assert_eq!(Passage::new("p", "T", "body").index_text(), "T body");
    }
}
