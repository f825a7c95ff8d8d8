use serde::{Deserialize, Serialize};

use crate::scalar::{cmp_desc, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry<T> {
    pub id: String,
    pub score: T,
}

/// Search results, best first. Scores are non-increasing and ids unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedList<T> {
    pub entries: Vec<RankedEntry<T>>,
}

impl<T> Default for RankedList<T> {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
        }
    }
}

impl<T: Real> RankedList<T> {
    /// Sorts `(position, id, score)` triples by descending score, ties broken
    /// by ascending corpus position, and keeps the first `k`.
    pub(crate) fn from_scored(mut scored: Vec<(usize, String, T)>, k: usize) -> Self {
        scored.sort_by(|a, b| cmp_desc(a.2, b.2).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Self {
            entries: scored
                .into_iter()
                .map(|(_, id, score)| RankedEntry { id, score })
                .collect(),
        }
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> &[RankedEntry<T>] {
        &self.entries[..k.min(self.entries.len())]
    }

    /// Checks the ordering and uniqueness invariants.
    pub fn is_well_formed(&self) -> bool {
        let ordered = self.entries.windows(2).all(|w| w[0].score >= w[1].score);
        let mut ids = self.ids();
        ids.sort_unstable();
        ids.dedup();
        ordered && ids.len() == self.entries.len()
    }
}
