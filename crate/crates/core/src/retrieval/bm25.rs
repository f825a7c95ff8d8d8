//! Okapi BM25 over an in-memory inverted index.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::Corpus;
use super::ranked::RankedList;
use super::tokenize::Tokenizer;
use crate::scalar::Real;

pub const SNAPSHOT_MAGIC: &str = "MULTIRAG-BM25";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params<T> {
    pub k1: T,
    pub b: T,
}

impl<T: Real> Default for Bm25Params<T> {
    fn default() -> Self {
        Self {
            k1: T::of(1.2),
            b: T::of(0.75),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index. Immutable once built; safe to share across readers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index<T> {
    pub params: Bm25Params<T>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: T,
    /// Sorted by document position.
    postings: BTreeMap<String, Vec<Posting>>,
    #[serde(default)]
    stopwords: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not an index snapshot (bad magic header)")]
    BadMagic,
    #[error("snapshot version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("corrupt snapshot body: {0}")]
    Body(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl<T: Real> Bm25Index<T> {
    pub fn build(corpus: &Corpus, params: Bm25Params<T>) -> Self {
        Self::build_with(corpus, params, &Tokenizer::default())
    }

    pub fn build_with(corpus: &Corpus, params: Bm25Params<T>, tokenizer: &Tokenizer) -> Self {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        for (pos, passage) in corpus.passages().iter().enumerate() {
            let terms = tokenizer.tokenize(&passage.index_text());
            doc_lengths.push(terms.len() as u32);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in terms {
                *counts.entry(t).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting {
                    doc: pos as u32,
                    tf,
                });
            }
        }
        let avg_doc_length = if doc_lengths.is_empty() {
            T::zero()
        } else {
            let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
            T::of(total as f64) / T::of_usize(doc_lengths.len())
        };
        let mut stopwords: Vec<String> = tokenizer.stopwords().map(String::from).collect();
        stopwords.sort();
        Self {
            params,
            doc_ids: corpus.passages().iter().map(|p| p.id.clone()).collect(),
            doc_lengths,
            avg_doc_length,
            postings,
            stopwords,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn avg_doc_length(&self) -> T {
        self.avg_doc_length
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    fn tokenizer(&self) -> Tokenizer {
        Tokenizer::with_stopwords(&self.stopwords)
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`, always positive.
    pub fn idf(&self, df: usize) -> T {
        let n = T::of_usize(self.doc_count());
        let df = T::of_usize(df);
        let half = T::of(0.5);
        ((n - df + half) / (df + half) + T::one()).ln()
    }

    fn term_weight(&self, idf: T, tf: u32, doc_len: u32) -> T {
        let Bm25Params { k1, b } = self.params;
        let tf = T::of(f64::from(tf));
        let len_ratio = if self.avg_doc_length > T::zero() {
            T::of(f64::from(doc_len)) / self.avg_doc_length
        } else {
            T::zero()
        };
        idf * (tf * (k1 + T::one())) / (tf + k1 * (T::one() - b + b * len_ratio))
    }

    /// Top `k` documents by BM25. Repeated query terms count once per
    /// occurrence; documents sharing no term with the query are omitted; equal
    /// scores rank by corpus position.
    pub fn search(&self, query: &str, k: usize) -> RankedList<T> {
        let terms = self.tokenizer().tokenize(query);
        let mut scores: BTreeMap<u32, T> = BTreeMap::new();
        for term in &terms {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(postings.len());
            for p in postings {
                let w = self.term_weight(idf, p.tf, self.doc_lengths[p.doc as usize]);
                let slot = scores.entry(p.doc).or_insert_with(T::zero);
                *slot = *slot + w;
            }
        }
        let scored = scores
            .into_iter()
            .filter(|(_, s)| *s > T::zero())
            .map(|(doc, s)| (doc as usize, self.doc_ids[doc as usize].clone(), s))
            .collect();
        RankedList::from_scored(scored, k)
    }

    /// Writes `MAGIC v<VERSION>` followed by the JSON body.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), SnapshotError> {
        writeln!(writer, "{SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION}")?;
        serde_json::to_writer(&mut writer, self)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load<R: BufRead>(mut reader: R) -> Result<Self, SnapshotError> {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let mut parts = header.trim_end().splitn(2, ' ');
        if parts.next() != Some(SNAPSHOT_MAGIC) {
            return Err(SnapshotError::BadMagic);
        }
        let version = parts.next().unwrap_or("");
        if version != format!("v{SNAPSHOT_VERSION}") {
            return Err(SnapshotError::VersionMismatch {
                found: version.to_string(),
                expected: SNAPSHOT_VERSION,
            });
        }
        Ok(serde_json::from_reader(reader)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversation::Passage;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::ingest(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Passage::new(format!("d{}", i + 1), "", *t)),
        )
        .unwrap()
    }

    #[test]
    fn single_document_postings() {
        let idx = Bm25Index::<f64>::build(&corpus(&["a b a"]), Bm25Params::default());
        assert_eq!(idx.postings("a"), &[Posting { doc: 0, tf: 2 }]);
        assert_eq!(idx.postings("b"), &[Posting { doc: 0, tf: 1 }]);
        assert_eq!(idx.doc_lengths(), &[3]);
        assert_eq!(idx.avg_doc_length(), 3.0);
    }

    #[test]
    fn empty_corpus() {
        let idx = Bm25Index::<f64>::build(&Corpus::default(), Bm25Params::default());
        assert_eq!(idx.doc_count(), 0);
        assert!(idx.search("anything", 5).is_empty());
    }

    #[test]
    fn three_doc_fixture_ranking() {
        let idx = Bm25Index::<f64>::build(
            &corpus(&[
                "boer war gold mining",
                "boer commandos volunteer militia",
                "olmec civilization origins",
            ]),
            Bm25Params::default(),
        );
        let ranked = idx.search("boer commandos", 3);
        assert_eq!(ranked.ids(), vec!["d2", "d1"]);
        // N=3, lengths 4, 4, 3 so avgdl = 11/3. boer: df=2, commandos: df=1.
        let idf_boer = (1.5f64 / 2.5 + 1.0).ln();
        let idf_commandos = (2.5f64 / 1.5 + 1.0).ln();
        let tf_part = 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * 4.0 / (11.0 / 3.0)));
        assert!((ranked.entries[0].score - (idf_boer + idf_commandos) * tf_part).abs() < 1e-12);
        assert!((ranked.entries[1].score - idf_boer * tf_part).abs() < 1e-12);
    }

    #[test]
    fn unmatched_query_and_large_k() {
        let idx = Bm25Index::<f64>::build(&corpus(&["x y", "y z"]), Bm25Params::default());
        assert!(idx.search("nothing here", 3).is_empty());
        assert!(idx.search("", 3).is_empty());
        assert_eq!(idx.search("y", 100).len(), 2);
    }

    #[test]
    fn ties_rank_by_position() {
        let idx = Bm25Index::<f64>::build(&corpus(&["q r", "s t", "q r"]), Bm25Params::default());
        assert_eq!(idx.search("q", 5).ids(), vec!["d1", "d3"]);
    }

    #[test]
    fn stopwords_survive_snapshot() {
        let c = corpus(&["the olmec", "the boer"]);
        let idx = Bm25Index::<f64>::build_with(&c, Bm25Params::default(), &Tokenizer::with_stopwords(["the"]));
        assert!(idx.search("the", 5).is_empty());
        let mut buf = Vec::new();
        idx.save(&mut buf).unwrap();
        let back = Bm25Index::<f64>::load(buf.as_slice()).unwrap();
        assert_eq!(back, idx);
        assert!(back.search("the", 5).is_empty());
    }

    #[test]
    fn snapshot_header_is_checked() {
        let idx = Bm25Index::<f64>::build(&corpus(&["a"]), Bm25Params::default());
        let mut buf = Vec::new();
        idx.save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("MULTIRAG-BM25 v1\n"));

        let bumped = text.replacen("v1", "v2", 1);
        assert!(matches!(
            Bm25Index::<f64>::load(bumped.as_bytes()),
            Err(SnapshotError::VersionMismatch { .. })
        ));
        assert!(matches!(
            Bm25Index::<f64>::load("garbage\n{}".as_bytes()),
            Err(SnapshotError::BadMagic)
        ));
    }

    #[test]
    fn works_in_f32() {
        let idx = Bm25Index::<f32>::build(&corpus(&["boer war", "olmec"]), Bm25Params::default());
        assert_eq!(idx.search("boer", 2).ids(), vec!["d1"]);
    }
}
