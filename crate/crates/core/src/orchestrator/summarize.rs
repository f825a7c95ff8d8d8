use super::prompts::summarization_prompt;
use super::types::{RetrievalQuery, TurnError};
use crate::backend::{GenerationRequest, LanguageModel};
use crate::conversation::Conversation;

const SUMMARY: &str = "Summary:";
const QUESTION: &str = "Question:";

/// Splits model output into summary and question sections. Without either
/// marker the whole trimmed text becomes the combined query.
pub fn parse_summary(text: &str) -> Option<RetrievalQuery> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let s = text.find(SUMMARY);
    let q = text.find(QUESTION);
    let (summary, question) = match (s, q) {
        (None, None) => {
            return Some(RetrievalQuery {
                summary: String::new(),
                question: String::new(),
                combined: text.to_string(),
            })
        }
        (Some(s), None) => (&text[s + SUMMARY.len()..], ""),
        (None, Some(q)) => (&text[..q], &text[q + QUESTION.len()..]),
        (Some(s), Some(q)) if s < q => (&text[s + SUMMARY.len()..q], &text[q + QUESTION.len()..]),
        (Some(s), Some(q)) => (&text[s + SUMMARY.len()..], &text[q + QUESTION.len()..s]),
    };
    let summary = summary.trim().to_string();
    let question = question.trim().to_string();
    let combined = match (summary.is_empty(), question.is_empty()) {
        (false, false) => format!("{summary} {question}"),
        (false, true) => summary.clone(),
        (true, false) => question.clone(),
        (true, true) => return None,
    };
    Some(RetrievalQuery {
        summary,
        question,
        combined,
    })
}

/// Condenses the conversation into a summary plus question used as the
/// search query.
pub fn summarize_for_retrieval(
    history: &Conversation,
    backend: &dyn LanguageModel,
    max_tokens: usize,
) -> Result<RetrievalQuery, TurnError> {
    let req = GenerationRequest::new(summarization_prompt(history), max_tokens).with_stop(["Converation History:"]);
    let out = backend.generate(&req)?;
    parse_summary(&out.text).ok_or(TurnError::EmptyQuery)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marked_output() {
        let q = parse_summary("Summary: S. Question: Q?").unwrap();
        assert_eq!((q.summary.as_str(), q.question.as_str(), q.combined.as_str()), ("S.", "Q?", "S. Q?"));
    }

    #[test]
    fn marker_free_output() {
        let q = parse_summary("just a rewrite").unwrap();
        assert_eq!(q.combined, "just a rewrite");
        assert!(q.summary.is_empty() && q.question.is_empty());
    }

    #[test]
    fn empty_output() {
        assert!(parse_summary("  \n").is_none());
        assert!(parse_summary("Summary: Question:").is_none());
    }
}
