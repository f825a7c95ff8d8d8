//! Corpus ingestion, BM25 and dense search, and recall metrics.

mod bm25;
mod corpus;
mod dense;
mod metrics;
mod ranked;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bm25::{Bm25Index, Bm25Params, Posting, SnapshotError, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use corpus::{Corpus, CorpusError};
pub use dense::{
    dense_search, DenseError, DenseIndex, DenseResult, EmbeddingBackend, HashingEmbedder,
    VocabularyEmbedder,
};
pub use metrics::{hit_at_k, recall_at_k, MetricError};
pub use ranked::{RankedEntry, RankedList};
pub use tokenize::{tokenize, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrieverKind {
    #[default]
    Bm25,
    Dense,
}

impl fmt::Display for RetrieverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RetrieverKind::Bm25 => "bm25",
            RetrieverKind::Dense => "dense",
        })
    }
}

impl FromStr for RetrieverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bm25" => Ok(RetrieverKind::Bm25),
            "dense" => Ok(RetrieverKind::Dense),
            other => Err(format!("unknown retriever {other:?} (expected bm25 or dense)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum RetrieveError {
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error("retriever unavailable: {0}")]
    Unavailable(String),
}

/// A search path the pipeline can call. Implementations are read-only after
/// construction and may be shared across threads.
pub trait Retriever: Send + Sync {
    fn kind(&self) -> RetrieverKind;
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList<f64>, RetrieveError>;
}

impl Retriever for Bm25Index<f64> {
    fn kind(&self) -> RetrieverKind {
        RetrieverKind::Bm25
    }

    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList<f64>, RetrieveError> {
        Ok(self.search(query, k))
    }
}

/// Dense retriever: an embedder plus the corpus embeddings it produced.
pub struct DenseRetriever {
    embedder: Box<dyn EmbeddingBackend<f64>>,
    index: DenseIndex<f64>,
}

impl DenseRetriever {
    pub fn build(embedder: Box<dyn EmbeddingBackend<f64>>, corpus: &Corpus) -> Result<Self, DenseError> {
        let index = DenseIndex::build(embedder.as_ref(), corpus)?;
        Ok(Self { embedder, index })
    }
}

impl Retriever for DenseRetriever {
    fn kind(&self) -> RetrieverKind {
        RetrieverKind::Dense
    }

    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList<f64>, RetrieveError> {
        Ok(dense_search(self.embedder.as_ref(), &self.index, query, k)?.ranked)
    }
}
