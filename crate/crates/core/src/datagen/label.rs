use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use super::task::CriticTask;
use crate::reflection::ReflectionToken;

/// A collected label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    Token(ReflectionToken),
    /// Integer judge score.
    Rating(u8),
    /// Free text (summaries).
    Text(String),
}

impl Label {
    /// Canonical string form: the token surface, the decimal rating, or the
    /// text itself.
    pub fn canonical(&self) -> String {
        match self {
            Label::Token(t) => t.as_str().to_string(),
            Label::Rating(r) => r.to_string(),
            Label::Text(s) => s.clone(),
        }
    }

    /// Every label a task can produce, for closed alphabets.
    pub fn alphabet(task: CriticTask) -> Vec<Label> {
        if let Some((lo, hi)) = task.rating_range() {
            return (lo..=hi).map(Label::Rating).collect();
        }
        task.token_alphabet().iter().map(|t| Label::Token(*t)).collect()
    }

    /// Strict parse of a label already in canonical form. Token aliases are
    /// accepted; utility also accepts a bare level `1`..`5`.
    pub fn from_canonical(task: CriticTask, s: &str) -> Option<Label> {
        let s = s.trim();
        let label = if task == CriticTask::Summarization {
            Label::Text(s.to_string())
        } else if task.rating_range().is_some() {
            Label::Rating(s.parse().ok()?)
        } else if let Some(t) = ReflectionToken::from_surface(s) {
            Label::Token(t)
        } else if task == CriticTask::Utility {
            Label::Token(ReflectionToken::Utility(s.parse().ok()?))
        } else {
            return None;
        };
        label.belongs_to(task).then_some(label)
    }

    pub fn belongs_to(&self, task: CriticTask) -> bool {
        match self {
            Label::Token(t) => task.token_alphabet().contains(t),
            Label::Rating(r) => task.rating_range().is_some_and(|(lo, hi)| (lo..=hi).contains(r)),
            Label::Text(s) => task == CriticTask::Summarization && !s.trim().is_empty(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no {task} label found in judge output {raw:?}")]
pub struct LabelParseError {
    pub task: CriticTask,
    pub raw: String,
}

const ANSWER_PREFIXES: [&str; 4] = ["gpt-4-rating", "rating", "perceived utility", "score"];

static INTEGER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[^0-9A-Za-z\-])(\d+)").expect("static pattern"));

/// Lines that look like an answer line, with everything up to the first
/// colon removed.
fn answer_lines(text: &str) -> Vec<&str> {
    text.lines()
        .filter_map(|line| {
            let bare = line.trim_start_matches(|c: char| c.is_whitespace() || c == '*' || c == '#');
            let lower = bare.to_ascii_lowercase();
            ANSWER_PREFIXES
                .iter()
                .any(|p| lower.starts_with(p))
                .then(|| bare.split_once(':').map_or(bare, |(_, rest)| rest))
        })
        .collect()
}

fn first_token(text: &str, alphabet: &[ReflectionToken]) -> Option<ReflectionToken> {
    let mut search = 0;
    while let Some(rel) = text[search..].find('[') {
        let open = search + rel;
        let close = open + text[open..].find(']')?;
        if let Some(t) = ReflectionToken::from_surface(&text[open..=close]) {
            if alphabet.contains(&t) {
                return Some(t);
            }
        }
        search = open + 1;
    }
    None
}

fn first_integer_in(text: &str, lo: u8, hi: u8) -> Option<u8> {
    INTEGER
        .captures_iter(text)
        .filter_map(|c| c[1].parse::<u8>().ok())
        .find(|n| (lo..=hi).contains(n))
}

fn extract(task: CriticTask, text: &str) -> Option<Label> {
    let alphabet = task.token_alphabet();
    if !alphabet.is_empty() {
        if let Some(t) = first_token(text, alphabet) {
            return Some(Label::Token(t));
        }
        if task == CriticTask::Utility {
            return first_integer_in(text, 1, 5).map(|k| Label::Token(ReflectionToken::Utility(k)));
        }
        return None;
    }
    let (lo, hi) = task.rating_range()?;
    first_integer_in(text, lo, hi).map(Label::Rating)
}

/// Extracts a label from a judge reply.
///
/// Answer lines (`Rating:`, `GPT-4-Rating:`, `Perceived utility:`, `Score:`)
/// are searched first, then the whole reply. Token tasks take the first
/// bracketed token of the task alphabet, aliases included; utility also
/// accepts a bare level, and the judge task a bare 0-5 score. Summaries are
/// the trimmed reply.
pub fn parse_judge_label(task: CriticTask, text: &str) -> Result<Label, LabelParseError> {
    let fail = || LabelParseError {
        task,
        raw: text.to_string(),
    };
    if task == CriticTask::Summarization {
        let trimmed = text.trim();
        return if trimmed.is_empty() {
            Err(fail())
        } else {
            Ok(Label::Text(trimmed.to_string()))
        };
    }
    answer_lines(text)
        .into_iter()
        .find_map(|line| extract(task, line))
        .or_else(|| extract(task, text))
        .ok_or_else(fail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ReflectionToken::*;

    #[test]
    fn appendix_answer_formats() {
        assert_eq!(
            parse_judge_label(CriticTask::Retrieval2, "GPT-4-Rating: [Retrieval]").unwrap(),
            Label::Token(Retrieve)
        );
        assert_eq!(
            parse_judge_label(CriticTask::Utility, "Perceived utility: 2\nExplanation: meh").unwrap(),
            Label::Token(Utility(2))
        );
        assert_eq!(
            parse_judge_label(CriticTask::JudgeEval, "Score: 4\nThe answer is fine.").unwrap(),
            Label::Rating(4)
        );
        assert!(parse_judge_label(CriticTask::Retrieval2, "I cannot decide.").is_err());
    }

    #[test]
    fn aliases_map_to_canonical_tokens() {
        assert_eq!(
            parse_judge_label(CriticTask::Relevance, "Rating: [Irrelevant]").unwrap(),
            Label::Token(NonRelevant)
        );
        assert_eq!(
            parse_judge_label(CriticTask::Groundedness, "Rating: [No support / Contradictory]").unwrap(),
            Label::Token(NoSupport)
        );
    }

    #[test]
    fn answer_line_wins_over_earlier_mentions() {
        let reply = "Neither [No Retrieval] nor anything else is obvious.\nRating: [Retrieval]";
        assert_eq!(parse_judge_label(CriticTask::Retrieval2, reply).unwrap(), Label::Token(Retrieve));
        let reply = "GPT-4-Rating: 5";
        assert_eq!(parse_judge_label(CriticTask::Utility, reply).unwrap(), Label::Token(Utility(5)));
        let reply = "As GPT-4 I would say 3 overall.";
        assert_eq!(parse_judge_label(CriticTask::JudgeEval, reply).unwrap(), Label::Rating(3));
    }

    #[test]
    fn out_of_alphabet_tokens_are_skipped() {
        assert!(parse_judge_label(CriticTask::Retrieval2, "Rating: [Continue to Use Evidence]").is_err());
        assert!(parse_judge_label(CriticTask::Utility, "Perceived utility: 7").is_err());
    }

    #[test]
    fn canonical_forms_round_trip() {
        for task in CriticTask::ALL {
            for label in Label::alphabet(task) {
                assert!(label.belongs_to(task));
                assert_eq!(parse_judge_label(task, &label.canonical()).unwrap(), label, "{task}");
            }
        }
        let summary = Label::Text("Summary: S. Question: Q?".into());
        assert_eq!(parse_judge_label(CriticTask::Summarization, &summary.canonical()).unwrap(), summary);
    }
}
