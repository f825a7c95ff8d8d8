//! Group normalization and the composite candidate score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tokens::{ReflectionToken, TokenGroup};
use crate::scalar::{cmp_desc, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("no probability mass to normalize in {0:?} group")]
    NoMass(TokenGroup),
    #[error("{token} is not a member of the {group:?} group")]
    ForeignToken {
        token: ReflectionToken,
        group: TokenGroup,
    },
    #[error("missing log-probability for {0}")]
    MissingToken(ReflectionToken),
    #[error("log-probability for {0} is NaN or +inf")]
    InvalidLogprob(ReflectionToken),
    #[error("the retrieval group is a decision and has no desirable-token score")]
    DecisionGroup,
}

/// Normalized probabilities over one token group, in group order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScores<T> {
    pub group: TokenGroup,
    pub probs: Vec<(ReflectionToken, T)>,
}

impl<T: Real> GroupScores<T> {
    pub fn prob(&self, token: ReflectionToken) -> Option<T> {
        self.probs.iter().find(|(t, _)| *t == token).map(|(_, p)| *p)
    }

    /// Highest-probability token; ties go to the earlier token in group order.
    pub fn argmax(&self) -> ReflectionToken {
        self.probs
            .iter()
            .enumerate()
            .min_by(|(i, (_, a)), (j, (_, b))| cmp_desc(*a, *b).then(i.cmp(j)))
            .map(|(_, (t, _))| *t)
            .expect("groups are never empty")
    }

    /// Uniform distribution over the group.
    pub fn uniform(group: TokenGroup) -> Self {
        let n = T::of_usize(group.tokens().len());
        Self {
            group,
            probs: group.tokens().iter().map(|t| (*t, T::one() / n)).collect(),
        }
    }
}

/// Softmax of raw log-probabilities over exactly the tokens of `group`.
///
/// Tokens the backend could not score are passed as `-inf` and receive zero
/// mass. The result is invariant to adding a constant to every input.
pub fn normalize_group<T: Real>(
    raw: &BTreeMap<ReflectionToken, T>,
    group: TokenGroup,
) -> Result<GroupScores<T>, ScoreError> {
    for token in raw.keys() {
        if token.group() != group {
            return Err(ScoreError::ForeignToken {
                token: *token,
                group,
            });
        }
    }
    let mut logits = Vec::with_capacity(group.tokens().len());
    for token in group.tokens() {
        let lp = *raw.get(token).ok_or(ScoreError::MissingToken(*token))?;
        if lp.is_nan() || lp == T::infinity() {
            return Err(ScoreError::InvalidLogprob(*token));
        }
        logits.push((*token, lp));
    }
    let max = logits
        .iter()
        .map(|(_, lp)| *lp)
        .fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return Err(ScoreError::NoMass(group));
    }
    let exps: Vec<(ReflectionToken, T)> = logits
        .into_iter()
        .map(|(t, lp)| (t, (lp - max).exp()))
        .collect();
    let total: T = exps.iter().map(|(_, e)| *e).sum();
    Ok(GroupScores {
        group,
        probs: exps.into_iter().map(|(t, e)| (t, e / total)).collect(),
    })
}

/// Probability of the group's most desirable token: `[Relevant]`,
/// `[Fully supported]` or `[Utility:5]`.
pub fn desirable_score<T: Real>(gs: &GroupScores<T>) -> Result<T, ScoreError> {
    let token = gs.group.most_desirable().ok_or(ScoreError::DecisionGroup)?;
    Ok(gs.prob(token).unwrap_or_else(T::zero))
}

/// How a group distribution collapses to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// Probability of the single most desirable token.
    #[default]
    MostDesirable,
    /// Expected credit: `[Partially supported]` counts 0.5 and utility level
    /// `k` counts `(k - 1) / 4`.
    WeightedCredit,
}

pub fn group_score<T: Real>(gs: &GroupScores<T>, mode: ScoringMode) -> Result<T, ScoreError> {
    match mode {
        ScoringMode::MostDesirable => desirable_score(gs),
        ScoringMode::WeightedCredit => {
            if gs.group == TokenGroup::Retrieval {
                return Err(ScoreError::DecisionGroup);
            }
            Ok(gs
                .probs
                .iter()
                .map(|(t, p)| *p * credit::<T>(*t))
                .sum())
        }
    }
}

fn credit<T: Real>(token: ReflectionToken) -> T {
    match token {
        ReflectionToken::Relevant | ReflectionToken::FullySupported => T::one(),
        ReflectionToken::PartiallySupported => T::of(0.5),
        ReflectionToken::Utility(level) => T::of(f64::from(level.saturating_sub(1)) / 4.0),
        _ => T::zero(),
    }
}

/// Weights of the three critique groups in the composite score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringWeights<T> {
    #[serde(alias = "w1")]
    pub relevance: T,
    #[serde(alias = "w2")]
    pub groundedness: T,
    #[serde(alias = "w3")]
    pub utility: T,
}

impl<T: Real> ScoringWeights<T> {
    pub fn new(relevance: T, groundedness: T, utility: T) -> Self {
        Self {
            relevance,
            groundedness,
            utility,
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.relevance.is_finite() && self.groundedness.is_finite() && self.utility.is_finite()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(
            self.relevance * factor,
            self.groundedness * factor,
            self.utility * factor,
        )
    }
}

impl<T: Real> Default for ScoringWeights<T> {
    fn default() -> Self {
        Self::new(T::one(), T::one(), T::of(0.5))
    }
}

/// `p_norm + w1 * s_rel + w2 * s_grd + w3 * s_utl`.
pub fn compose_score<T: Real>(p_norm: T, s_rel: T, s_grd: T, s_utl: T, w: &ScoringWeights<T>) -> T {
    p_norm + w.relevance * s_rel + w.groundedness * s_grd + w.utility * s_utl
}

/// Score breakdown of one generated segment.
///
/// `s_rel` and `s_grd` are absent when the segment was generated without a
/// passage; they then contribute zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore<T> {
    pub p_norm: T,
    /// False when the backend exposed no token log-probabilities and `p_norm`
    /// is the configured fallback.
    #[serde(default = "yes")]
    pub p_available: bool,
    pub s_rel: Option<T>,
    pub s_grd: Option<T>,
    pub s_utl: T,
    pub composite: T,
}

fn yes() -> bool {
    true
}

impl<T: Real> CandidateScore<T> {
    pub fn new(
        p_norm: T,
        s_rel: Option<T>,
        s_grd: Option<T>,
        s_utl: T,
        w: &ScoringWeights<T>,
    ) -> Self {
        let composite = compose_score(
            p_norm,
            s_rel.unwrap_or_else(T::zero),
            s_grd.unwrap_or_else(T::zero),
            s_utl,
            w,
        );
        Self {
            p_norm,
            p_available: true,
            s_rel,
            s_grd,
            s_utl,
            composite,
        }
    }

    /// Recomputes the composite under `w` and compares it exactly.
    pub fn is_consistent_with(&self, w: &ScoringWeights<T>) -> bool {
        let again = Self::new(self.p_norm, self.s_rel, self.s_grd, self.s_utl, w);
        again.composite == self.composite
    }
}
