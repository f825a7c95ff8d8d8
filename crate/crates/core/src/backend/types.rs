use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::logprob;

/// Candidate string to log-probability (`-inf` when unscorable).
pub type ScoreMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_tokens: usize,
    #[serde(default)]
    pub stop: Vec<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, max_tokens: usize) -> Self {
        Self {
            prompt: prompt.into(),
            max_tokens,
            stop: Vec::new(),
            temperature: 0.0,
            seed: None,
        }
    }

    pub fn with_stop(mut self, stop: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.stop = stop.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(BackendError::InvalidRequest("temperature must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    #[serde(rename = "t")]
    pub text: String,
    #[serde(rename = "lp", with = "logprob")]
    pub logprob: f64,
}

impl TokenLogprob {
    pub fn new(text: impl Into<String>, logprob: f64) -> Self {
        Self {
            text: text.into(),
            logprob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    #[default]
    Stop,
    Length,
}

/// Generated text. When `tokens` is non-empty their texts concatenate to
/// `text`; an empty list means the backend exposed no log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<TokenLogprob>,
    #[serde(default)]
    pub finish: FinishReason,
}

impl Generation {
    pub fn new(text: impl Into<String>, tokens: Vec<TokenLogprob>) -> Self {
        Self {
            text: text.into(),
            tokens,
            finish: FinishReason::Stop,
        }
    }

    /// Generation whose tokens are given as `(text, logprob)` pairs; `text`
    /// is their concatenation.
    pub fn from_tokens(tokens: &[(&str, f64)]) -> Self {
        let tokens: Vec<TokenLogprob> = tokens.iter().map(|(t, lp)| TokenLogprob::new(*t, *lp)).collect();
        Self::new(tokens.iter().map(|t| t.text.as_str()).collect::<String>(), tokens)
    }

    pub fn text_only(text: impl Into<String>) -> Self {
        Self::new(text, Vec::new())
    }

    pub fn has_logprobs(&self) -> bool {
        !self.tokens.is_empty()
    }

    /// Checks the concatenation and sign invariants.
    pub fn check(&self) -> Result<(), String> {
        if self.tokens.is_empty() {
            return Ok(());
        }
        let joined: String = self.tokens.iter().map(|t| t.text.as_str()).collect();
        if joined != self.text {
            return Err(format!("token texts {joined:?} do not concatenate to {:?}", self.text));
        }
        if let Some(t) = self.tokens.iter().find(|t| t.logprob.is_nan() || t.logprob > 0.0) {
            return Err(format!("token {:?} has logprob {} > 0", t.text, t.logprob));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub prompt: String,
    pub candidates: Vec<String>,
}

impl ScoreRequest {
    pub fn new(prompt: impl Into<String>, candidates: Vec<String>) -> Self {
        Self {
            prompt: prompt.into(),
            candidates,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.candidates.is_empty() {
            return Err(BackendError::InvalidRequest("candidates must be non-empty".into()));
        }
        let distinct: BTreeSet<&String> = self.candidates.iter().collect();
        if distinct.len() != self.candidates.len() {
            return Err(BackendError::InvalidRequest("candidates must be distinct".into()));
        }
        Ok(())
    }

    /// Restricts `scores` to exactly the requested candidates, filling gaps
    /// with `-inf`.
    pub fn complete(&self, scores: &ScoreMap) -> ScoreMap {
        self.candidates
            .iter()
            .map(|c| (c.clone(), scores.get(c).copied().unwrap_or(f64::NEG_INFINITY)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend unreachable (prompt {digest}): {message}")]
    Unreachable { digest: String, message: String },
    #[error("backend rejected request with status {status} (prompt {digest}): {message}")]
    Rejected {
        digest: String,
        status: u16,
        message: String,
    },
    #[error("no scripted {kind} rule matches prompt {digest}")]
    NoMatchingRule { kind: String, digest: String },
    #[error("malformed backend response (prompt {digest}): {message}")]
    Protocol { digest: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// First 12 hex digits of the prompt's SHA-256.
pub fn prompt_digest(prompt: &str) -> String {
    let hash = Sha256::digest(prompt.as_bytes());
    hash.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Length-normalized sequence probability: `exp(mean token logprob)`.
pub fn sequence_logprob_norm(tokens: &[TokenLogprob]) -> Result<f64, BackendError> {
    if tokens.is_empty() {
        return Err(BackendError::InvalidRequest(
            "sequence probability needs at least one token".into(),
        ));
    }
    let mean = tokens.iter().map(|t| t.logprob).sum::<f64>() / tokens.len() as f64;
    Ok(mean.exp())
}

/// Applies `max_tokens` and stop sequences to a raw generation.
pub fn apply_limits(mut g: Generation, req: &GenerationRequest) -> Generation {
    if g.tokens.len() > req.max_tokens {
        g.tokens.truncate(req.max_tokens);
        g.text = g.tokens.iter().map(|t| t.text.as_str()).collect();
        g.finish = FinishReason::Length;
    }
    let cut = req
        .stop
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| g.text.find(s.as_str()))
        .min();
    if let Some(cut) = cut {
        g.text.truncate(cut);
        let mut offset = 0;
        let mut kept = Vec::new();
        for mut t in std::mem::take(&mut g.tokens) {
            if offset >= cut {
                break;
            }
            let end = offset + t.text.len();
            if end > cut {
                t.text.truncate(cut - offset);
            }
            offset = end;
            kept.push(t);
        }
        g.tokens = kept;
        g.finish = FinishReason::Stop;
    }
    g
}
