use std::collections::BTreeMap;

use super::prompts::decision_prompt;
use super::types::{Decision, RetrievalDecision, TurnError};
use crate::backend::{LanguageModel, ScoreRequest};
use crate::conversation::{Conversation, Passage};
use crate::reflection::{normalize_group, ReflectionToken, TokenGroup};

/// Scores the three retrieval tokens and picks the most probable one.
///
/// `[Continue to Use Evidence]` is masked to `-inf` when there are no prior
/// passages. Ties resolve Retrieve, then Continue, then No Retrieve.
pub fn decide_retrieval(
    history: &Conversation,
    prior_passages: &[Passage],
    backend: &dyn LanguageModel,
) -> Result<RetrievalDecision, TurnError> {
    if !history.ends_with_user() {
        return Err(TurnError::InvalidSession("history must end with a user turn".into()));
    }
    let group = TokenGroup::Retrieval;
    let req = ScoreRequest::new(decision_prompt(history, prior_passages), group.surface_forms());
    let scores = backend.score_continuations(&req)?;
    let continue_eligible = !prior_passages.is_empty();
    let raw: BTreeMap<ReflectionToken, f64> = group
        .tokens()
        .iter()
        .map(|t| {
            let lp = scores.get(t.as_str()).copied().unwrap_or(f64::NEG_INFINITY);
            let masked = *t == ReflectionToken::ContinueToUseEvidence && !continue_eligible;
            (*t, if masked { f64::NEG_INFINITY } else { lp })
        })
        .collect();
    let group_scores = normalize_group(&raw, group)?;

    let prob = |t| group_scores.prob(t).unwrap_or(0.0);
    let mut choice = Decision::Retrieve;
    let mut best = prob(ReflectionToken::Retrieve);
    for (decision, token) in [
        (Decision::ContinueToUseEvidence, ReflectionToken::ContinueToUseEvidence),
        (Decision::NoRetrieve, ReflectionToken::NoRetrieve),
    ] {
        if prob(token) > best {
            best = prob(token);
            choice = decision;
        }
    }
    Ok(RetrievalDecision {
        choice,
        group_scores,
        continue_eligible,
    })
}
