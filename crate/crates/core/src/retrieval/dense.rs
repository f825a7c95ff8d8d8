//! Brute-force cosine search behind a pluggable embedding backend.

use thiserror::Error;

use super::corpus::Corpus;
use super::ranked::RankedList;
use super::tokenize::tokenize;
use crate::scalar::Real;

/// Text embedder. Must be deterministic per text and return finite vectors of
/// length [`EmbeddingBackend::dim`].
pub trait EmbeddingBackend<T>: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<T>;
}

#[derive(Debug, Error, PartialEq)]
pub enum DenseError {
    #[error("embedding for {id:?} has length {got}, expected {expected}")]
    DimensionMismatch {
        id: String,
        got: usize,
        expected: usize,
    },
    #[error("embedding for {0:?} is not finite")]
    NonFinite(String),
}

/// Precomputed passage embeddings.
#[derive(Debug, Clone)]
pub struct DenseIndex<T> {
    doc_ids: Vec<String>,
    vectors: Vec<Vec<T>>,
    norms: Vec<T>,
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

fn check<T: Real>(id: &str, v: &[T], dim: usize) -> Result<(), DenseError> {
    if v.len() != dim {
        return Err(DenseError::DimensionMismatch {
            id: id.to_string(),
            got: v.len(),
            expected: dim,
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(DenseError::NonFinite(id.to_string()));
    }
    Ok(())
}

impl<T: Real> DenseIndex<T> {
    pub fn build(backend: &dyn EmbeddingBackend<T>, corpus: &Corpus) -> Result<Self, DenseError> {
        let mut index = DenseIndex {
            doc_ids: Vec::with_capacity(corpus.len()),
            vectors: Vec::with_capacity(corpus.len()),
            norms: Vec::with_capacity(corpus.len()),
        };
        for p in corpus.passages() {
            let v = backend.embed(&p.index_text());
            check(&p.id, &v, backend.dim())?;
            index.norms.push(norm(&v));
            index.doc_ids.push(p.id.clone());
            index.vectors.push(v);
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseResult<T> {
    pub ranked: RankedList<T>,
    /// Documents (or the query) whose embedding had zero norm.
    pub warnings: Vec<String>,
}

/// Top `k` passages by cosine similarity to the query. Zero-norm documents
/// are excluded and reported in `warnings`; ties rank by corpus position.
pub fn dense_search<T: Real>(
    backend: &dyn EmbeddingBackend<T>,
    index: &DenseIndex<T>,
    query: &str,
    k: usize,
) -> Result<DenseResult<T>, DenseError> {
    let q = backend.embed(query);
    check("<query>", &q, backend.dim())?;
    let q_norm = norm(&q);
    let mut warnings = Vec::new();
    if q_norm == T::zero() {
        warnings.push("query embedding has zero norm".to_string());
        return Ok(DenseResult {
            ranked: RankedList::default(),
            warnings,
        });
    }
    let mut scored = Vec::with_capacity(index.len());
    for (pos, (id, v)) in index.doc_ids.iter().zip(&index.vectors).enumerate() {
        let d_norm = index.norms[pos];
        if d_norm == T::zero() {
            warnings.push(format!("passage {id:?} has a zero-norm embedding"));
            continue;
        }
        let dot: T = q.iter().zip(v).map(|(a, b)| *a * *b).sum();
        scored.push((pos, id.clone(), dot / (q_norm * d_norm)));
    }
    Ok(DenseResult {
        ranked: RankedList::from_scored(scored, k),
        warnings,
    })
}

/// Term-count vector over a fixed vocabulary, L2-normalized. Deterministic
/// and transparent enough to hand-check cosines.
#[derive(Debug, Clone)]
pub struct VocabularyEmbedder {
    vocab: Vec<String>,
}

impl VocabularyEmbedder {
    pub fn new<I, S>(vocab: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            vocab: vocab.into_iter().map(Into::into).collect(),
        }
    }
}

fn l2_normalize<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let n = norm(&v);
    if n > T::zero() {
        for x in &mut v {
            *x = *x / n;
        }
    }
    v
}

impl<T: Real> EmbeddingBackend<T> for VocabularyEmbedder {
    fn dim(&self) -> usize {
        self.vocab.len()
    }

    fn embed(&self, text: &str) -> Vec<T> {
        let mut v = vec![T::zero(); self.vocab.len()];
        for term in tokenize(text) {
            if let Some(i) = self.vocab.iter().position(|w| *w == term) {
                v[i] = v[i] + T::one();
            }
        }
        l2_normalize(v)
    }
}

/// Feature-hashed term counts (FNV-1a into `dim` buckets), L2-normalized.
/// A model-free stand-in for a neural embedder.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl<T: Real> EmbeddingBackend<T> for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for term in tokenize(text) {
            let i = (fnv1a(term.as_bytes()) % self.dim as u64) as usize;
            v[i] = v[i] + T::one();
        }
        l2_normalize(v)
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

    fn vocab() -> VocabularyEmbedder {
        VocabularyEmbedder::new(["boer", "war", "gold", "commandos", "militia", "olmec", "origins", "volunteer"])
    }

    #[test]
    fn cosine_prefers_more_shared_terms() {
        // d1 = boer war gold -> (1,1,1,0..)/sqrt3 ; d2 = commandos militia volunteer boer -> 4 terms /2
        // query "commandos militia war": dot(d1) = 1/sqrt3/sqrt3 = 1/3, dot(d2) = 2/(2 sqrt3) = 0.577
        let c = corpus(&["boer war gold", "commandos militia volunteer boer", "olmec origins"]);
        let e = vocab();
        let idx = DenseIndex::<f64>::build(&e, &c).unwrap();
        let r = dense_search(&e, &idx, "commandos militia war", 3).unwrap();
        assert_eq!(r.ranked.ids(), vec!["d2", "d1", "d3"]);
        assert!((r.ranked.entries[0].score - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((r.ranked.entries[1].score - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.ranked.entries[2].score, 0.0);
    }

    #[test]
    fn self_similarity_is_one() {
        let c = corpus(&["boer war gold", "olmec origins"]);
        let e = vocab();
        let idx = DenseIndex::<f64>::build(&e, &c).unwrap();
        let r = dense_search(&e, &idx, "olmec origins", 1).unwrap();
        assert_eq!(r.ranked.ids(), vec!["d2"]);
        assert!((r.ranked.entries[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_and_zero_norms() {
        let e = vocab();
        let idx = DenseIndex::<f64>::build(&e, &Corpus::default()).unwrap();
        assert!(dense_search(&e, &idx, "boer", 3).unwrap().ranked.is_empty());

        let c = corpus(&["unrelated words", "boer"]);
        let idx = DenseIndex::<f64>::build(&e, &c).unwrap();
        let r = dense_search(&e, &idx, "boer", 3).unwrap();
        assert_eq!(r.ranked.ids(), vec!["d2"]);
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("d1"));

        let r = dense_search(&e, &idx, "nothing known", 3).unwrap();
        assert!(r.ranked.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn hashing_embedder_is_deterministic_and_unit_norm() {
        let e = HashingEmbedder::new(64);
        let a: Vec<f64> = e.embed("Boer commandos");
        let b: Vec<f64> = e.embed("Boer commandos");
        assert_eq!(a, b);
        assert!((norm(&a) - 1.0).abs() < 1e-12);
    }

    struct Broken;
    impl EmbeddingBackend<f64> for Broken {
        fn dim(&self) -> usize {
            2
        }
        fn embed(&self, _: &str) -> Vec<f64> {
            vec![f64::NAN, 1.0]
        }
    }

    #[test]
    fn non_finite_embeddings_are_rejected() {
        let err = DenseIndex::build(&Broken, &corpus(&["x"])).unwrap_err();
        assert_eq!(err, DenseError::NonFinite("d1".into()));
    }
}
