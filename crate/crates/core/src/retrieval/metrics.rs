use std::collections::BTreeSet;

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("undefined recall: empty gold set")]
    EmptyGold,
}

/// `|gold ∩ top-k| / |gold|`.
pub fn recall_at_k<T: Real, S: AsRef<str>>(
    ranked_ids: &[S],
    gold: &BTreeSet<String>,
    k: usize,
) -> Result<T, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::EmptyGold);
    }
    let found: BTreeSet<&str> = ranked_ids
        .iter()
        .take(k)
        .map(AsRef::as_ref)
        .filter(|id| gold.contains(*id))
        .collect();
    Ok(T::of_usize(found.len()) / T::of_usize(gold.len()))
}

/// 1 when any gold id appears in the top `k`, else 0.
pub fn hit_at_k<T: Real, S: AsRef<str>>(
    ranked_ids: &[S],
    gold: &BTreeSet<String>,
    k: usize,
) -> Result<T, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::EmptyGold);
    }
    let hit = ranked_ids.iter().take(k).any(|id| gold.contains(id.as_ref()));
    Ok(if hit { T::one() } else { T::zero() })
}
