use std::collections::BTreeMap;

use super::prompts::{generation_prompt, groundedness_prompt, relevance_prompt, utility_prompt};
use super::types::{CandidateResponse, CandidateSegment, TurnError};
use crate::backend::{sequence_logprob_norm, Generation, GenerationRequest, LanguageModel, ScoreRequest, TokenLogprob};
use crate::config::PipelineConfig;
use crate::conversation::{Conversation, Passage};
use crate::reflection::{group_score, normalize_group, parse_annotated, ReflectionToken, TokenGroup};
use crate::{CandidateScore, GroupScores};

/// Constrained scoring of one token group.
pub fn score_group(backend: &dyn LanguageModel, prompt: String, group: TokenGroup) -> Result<GroupScores, TurnError> {
    let req = ScoreRequest::new(prompt, group.surface_forms());
    let scores = backend.score_continuations(&req)?;
    let raw: BTreeMap<ReflectionToken, f64> = group
        .tokens()
        .iter()
        .map(|t| (*t, scores.get(t.as_str()).copied().unwrap_or(f64::NEG_INFINITY)))
        .collect();
    Ok(normalize_group(&raw, group)?)
}

/// Tokens overlapping the byte span `start..end` of the generated text.
fn tokens_in(tokens: &[TokenLogprob], start: usize, end: usize) -> Vec<TokenLogprob> {
    let mut offset = 0;
    let mut out = Vec::new();
    for t in tokens {
        let (a, b) = (offset, offset + t.text.len());
        offset = b;
        if a < end && b > start {
            out.push(t.clone());
        }
    }
    out
}

fn build_candidate(
    history: &Conversation,
    passage: Option<&Passage>,
    cfg: &PipelineConfig,
    backend: &dyn LanguageModel,
) -> Result<CandidateResponse, TurnError> {
    let mut req = GenerationRequest::new(generation_prompt(history, passage), cfg.max_tokens);
    req.temperature = cfg.temperature;
    req.seed = cfg.seed;
    let generation: Generation = backend.generate(&req)?;

    let annotated = parse_annotated(&generation.text);
    let pieces: Vec<_> = annotated
        .segments
        .iter()
        .filter(|s| !s.text.trim().is_empty())
        .take(cfg.max_segments)
        .collect();
    if pieces.is_empty() {
        return Err(TurnError::AllCandidatesFailed(vec!["empty generation".into()]));
    }

    let s_rel = match passage {
        Some(p) => Some(group_score(
            &score_group(backend, relevance_prompt(history, p), TokenGroup::Relevance)?,
            cfg.scoring_mode,
        )?),
        None => None,
    };

    let mut segments = Vec::with_capacity(pieces.len());
    let mut preceding = String::new();
    for seg in pieces {
        let own = tokens_in(&generation.tokens, seg.start, seg.end);
        let (p_norm, p_available) = if own.is_empty() {
            (cfg.p_fallback, false)
        } else {
            (sequence_logprob_norm(&own)?, true)
        };
        let s_grd = match passage {
            Some(p) => Some(group_score(
                &score_group(backend, groundedness_prompt(history, p, &preceding, &seg.text), TokenGroup::Groundedness)?,
                cfg.scoring_mode,
            )?),
            None => None,
        };
        let s_utl = group_score(
            &score_group(backend, utility_prompt(history, &preceding, &seg.text), TokenGroup::Utility)?,
            cfg.scoring_mode,
        )?;
        let mut score = CandidateScore::new(p_norm, s_rel, s_grd, s_utl, &cfg.weights);
        score.p_available = p_available;
        segments.push(CandidateSegment {
            text: seg.text.clone(),
            score,
        });
        preceding.push_str(&seg.text);
    }

    let total = segments.iter().map(|s| s.score.composite).sum();
    Ok(CandidateResponse {
        passage: passage.cloned(),
        raw_text: generation.text,
        text: preceding.trim().to_string(),
        segments,
        total,
        failure: None,
    })
}

/// One candidate per passage, or a single passage-free candidate when
/// `passages` is empty. Candidates are generated concurrently and returned
/// in passage order. A failing candidate is marked failed; the call fails
/// only when every candidate does.
pub fn generate_candidates(
    history: &Conversation,
    passages: &[Passage],
    cfg: &PipelineConfig,
    backend: &dyn LanguageModel,
) -> Result<Vec<CandidateResponse>, TurnError> {
    let slots: Vec<Option<&Passage>> = if passages.is_empty() {
        vec![None]
    } else {
        passages.iter().map(Some).collect()
    };
    let results: Vec<Result<CandidateResponse, TurnError>> = std::thread::scope(|s| {
        let handles: Vec<_> = slots
            .iter()
            .map(|p| s.spawn(move || build_candidate(history, *p, cfg, backend)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("candidate thread panicked"))
            .collect()
    });

    let candidates: Vec<CandidateResponse> = results
        .into_iter()
        .zip(slots)
        .map(|(r, p)| match r {
            Ok(c) => c,
            Err(TurnError::AllCandidatesFailed(reasons)) => CandidateResponse::failed(p.cloned(), reasons.join("; ")),
            Err(e) => CandidateResponse::failed(p.cloned(), e.to_string()),
        })
        .collect();
    if candidates.iter().all(CandidateResponse::is_failed) {
        return Err(TurnError::AllCandidatesFailed(
            candidates.iter().filter_map(|c| c.failure.clone()).collect(),
        ));
    }
    Ok(candidates)
}
