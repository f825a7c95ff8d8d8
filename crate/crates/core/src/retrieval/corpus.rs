use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conversation::Passage;
use crate::error::FormatError;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate passage id {0:?}")]
    DuplicateId(String),
    #[error("record {index}: empty passage text")]
    EmptyText { index: usize },
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// An ordered passage collection with an id index. Order is input order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Passage>", into = "Vec<Passage>")]
pub struct Corpus {
    passages: Vec<Passage>,
    id_index: HashMap<String, usize>,
}

impl From<Vec<Passage>> for Corpus {
    // Only used by serde on data this type serialized itself.
    fn from(passages: Vec<Passage>) -> Self {
        let id_index = passages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        Self { passages, id_index }
    }
}

impl From<Corpus> for Vec<Passage> {
    fn from(c: Corpus) -> Self {
        c.passages
    }
}

impl Corpus {
    /// Ingests passages in order, rejecting duplicate ids and empty texts.
    pub fn ingest<I>(records: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = Passage>,
    {
        let mut corpus = Corpus::default();
        for (index, p) in records.into_iter().enumerate() {
            if p.text.trim().is_empty() {
                return Err(CorpusError::EmptyText { index });
            }
            if corpus.id_index.contains_key(&p.id) {
                return Err(CorpusError::DuplicateId(p.id));
            }
            corpus.id_index.insert(p.id.clone(), corpus.passages.len());
            corpus.passages.push(p);
        }
        Ok(corpus)
    }

    /// Reads line-delimited `{id, title, text}` records.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let records: Vec<Passage> = crate::jsonl::read_records(reader)?;
        Self::ingest(records)
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.position(id).map(|i| &self.passages[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.id_index.contains_key(id)
    }
}
