//! TF-IDF index over task descriptions with cosine nearest-neighbour search.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::pos::{is_stopword, preprocess_text, PreprocessError, Tag};
use crate::corpus::TaskSample;

pub const CACHE_FORMAT: &str = "story2pseudo-tfidf";
pub const CACHE_VERSION: u32 = 1;

/// Per-tag multipliers applied to term weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub func: f64,
    pub noun: f64,
    pub verb: f64,
    pub other: f64,
    pub stopword: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            func: 2.0,
            noun: 1.5,
            verb: 1.5,
            other: 1.0,
            stopword: 0.3,
        }
    }
}

impl WeightConfig {
    pub fn boost(&self, tag: Tag, word: &str) -> f64 {
        let b = match tag {
            Tag::Func => self.func,
            Tag::Noun => self.noun,
            Tag::Verb => self.verb,
            Tag::Adj | Tag::Num | Tag::Other => self.other,
        };
        if is_stopword(word) {
            b * self.stopword
        } else {
            b
        }
    }
}

/// Sparse vector sorted by dimension.
pub type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfIndex {
    pub vocabulary: HashMap<String, usize>,
    pub idf: Vec<f64>,
    pub doc_vectors: Vec<SparseVec>,
    pub samples: Vec<TaskSample>,
    pub weights: WeightConfig,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("sample {id} has no indexable terms")]
    ZeroVector { id: i64 },
    #[error("cannot access index cache {path}: {message}")]
    Cache { path: String, message: String },
}

fn term_counts(tokens: &[super::pos::TaggedToken]) -> Vec<(&str, Tag, usize)> {
    let mut out: Vec<(&str, Tag, usize)> = Vec::new();
    for t in tokens {
        match out.iter_mut().find(|(w, _, _)| *w == t.text) {
            Some(entry) => entry.2 += 1,
            None => out.push((&t.text, t.tag, 1)),
        }
    }
    out
}

fn normalize(v: &mut SparseVec) -> bool {
    let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return false;
    }
    for (_, w) in v.iter_mut() {
        *w /= norm;
    }
    true
}

pub fn dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

pub fn build_index(corpus: &[TaskSample]) -> Result<TfIdfIndex, IndexError> {
    build_index_with(corpus, WeightConfig::default())
}

pub fn build_index_with(corpus: &[TaskSample], weights: WeightConfig) -> Result<TfIdfIndex, IndexError> {
    if corpus.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let mut vocabulary: HashMap<String, usize> = HashMap::new();
    let mut df: Vec<usize> = Vec::new();
    let mut per_doc = Vec::with_capacity(corpus.len());
    for s in corpus {
        let tokens = preprocess_text(&s.description).map_err(|_| IndexError::ZeroVector { id: s.id })?;
        let counts: Vec<(String, Tag, usize)> =
            term_counts(&tokens).into_iter().map(|(w, t, c)| (w.to_string(), t, c)).collect();
        for (w, _, _) in &counts {
            let next = vocabulary.len();
            let dim = *vocabulary.entry(w.clone()).or_insert(next);
            if dim == df.len() {
                df.push(0);
            }
            df[dim] += 1;
        }
        per_doc.push(counts);
    }
    let d = corpus.len() as f64;
    let idf: Vec<f64> = df.iter().map(|&f| ((1.0 + d) / (1.0 + f as f64)).ln() + 1.0).collect();
    let mut doc_vectors = Vec::with_capacity(corpus.len());
    for (s, counts) in corpus.iter().zip(per_doc) {
        let mut v: SparseVec = counts
            .iter()
            .map(|(w, tag, c)| {
                let dim = vocabulary[w];
                (dim, *c as f64 * idf[dim] * weights.boost(*tag, w))
            })
            .collect();
        v.sort_by_key(|&(dim, _)| dim);
        if !normalize(&mut v) {
            return Err(IndexError::ZeroVector { id: s.id });
        }
        doc_vectors.push(v);
    }
    Ok(TfIdfIndex {
        vocabulary,
        idf,
        doc_vectors,
        samples: corpus.to_vec(),
        weights,
    })
}

impl TfIdfIndex {
    /// Unit query vector; terms outside the vocabulary are ignored and a
    /// query with no known terms yields the zero vector.
    pub fn query_vector(&self, query: &str) -> Result<SparseVec, PreprocessError> {
        let tokens = preprocess_text(query)?;
        let mut v: SparseVec = term_counts(&tokens)
            .into_iter()
            .filter_map(|(w, tag, c)| {
                let dim = *self.vocabulary.get(w)?;
                Some((dim, c as f64 * self.idf[dim] * self.weights.boost(tag, w)))
            })
            .collect();
        v.sort_by_key(|&(dim, _)| dim);
        normalize(&mut v);
        Ok(v)
    }

    /// `(sample position, cosine)` for the `k` best documents; equal scores
    /// order by lower sample id.
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<(usize, f64)>, PreprocessError> {
        let q = self.query_vector(query)?;
        let mut scored: Vec<(usize, f64)> = self
            .doc_vectors
            .iter()
            .enumerate()
            .map(|(i, d)| (i, dot(&q, d).clamp(0.0, 1.0)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.samples[a.0].id.cmp(&self.samples[b.0].id))
        });
        scored.truncate(k);
        Ok(scored)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Cache files are JSON: `{"format", "version", "corpus_hash", "index"}`.
    /// A cache is reused only when format, version and the corpus hash
    /// (which also covers the weight table) all match.
    pub fn save_cache(&self, path: &Path) -> Result<(), IndexError> {
        let file = CacheFile {
            format: CACHE_FORMAT.to_string(),
            version: CACHE_VERSION,
            corpus_hash: corpus_hash(&self.samples, &self.weights),
            index: self.clone(),
        };
        let text = serde_json::to_string(&file).map_err(|e| cache_err(path, e))?;
        std::fs::write(path, text).map_err(|e| cache_err(path, e))
    }

    /// Loads the cache at `path` if it is valid for `corpus`, otherwise
    /// builds a fresh index and rewrites the cache. The flag reports
    /// whether the cache was used.
    pub fn load_or_build(path: &Path, corpus: &[TaskSample], weights: WeightConfig) -> Result<(TfIdfIndex, bool), IndexError> {
        let hash = corpus_hash(corpus, &weights);
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(file) = serde_json::from_str::<CacheFile>(&text) {
                if file.format == CACHE_FORMAT && file.version == CACHE_VERSION && file.corpus_hash == hash {
                    return Ok((file.index, true));
                }
            }
        }
        let index = build_index_with(corpus, weights)?;
        index.save_cache(path)?;
        Ok((index, false))
    }
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> IndexError {
    IndexError::Cache {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: String,
    version: u32,
    corpus_hash: String,
    index: TfIdfIndex,
}

pub fn corpus_hash(corpus: &[TaskSample], weights: &WeightConfig) -> String {
    let mut h = Sha256::new();
    for s in corpus {
        h.update(serde_json::to_string(s).expect("task sample serializes").as_bytes());
        h.update(b"\n");
    }
    h.update(serde_json::to_string(weights).expect("weights serialize").as_bytes());
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: i64, text: &str) -> TaskSample {
        TaskSample {
            id,
            description: text.into(),
            code: "pass".into(),
        }
    }

    #[test]
    fn single_doc_idf_is_one() {
        let idx = build_index(&[sample(1, "reverse a string")]).unwrap();
        assert!(idx.idf.iter().all(|&w| (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn identical_descriptions_identical_vectors() {
        let idx = build_index(&[sample(1, "sum of a list"), sample(2, "Sum of a list!")]).unwrap();
        assert_eq!(idx.doc_vectors[0], idx.doc_vectors[1]);
    }

    #[test]
    fn vectors_have_unit_norm() {
        let idx = build_index(&[sample(1, "find the maximum of a list"), sample(2, "count vowels in a string")]).unwrap();
        for v in &idx.doc_vectors {
            let n: f64 = v.iter().map(|(_, w)| w * w).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert!(idx.idf.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(matches!(
            build_index(&[sample(1, "ok words"), sample(9, "?!")]),
            Err(IndexError::ZeroVector { id: 9 })
        ));
        assert!(matches!(build_index(&[]), Err(IndexError::EmptyCorpus)));
    }

    #[test]
    fn ties_break_on_lower_id() {
        let idx = build_index(&[sample(5, "merge two lists"), sample(2, "merge two lists"), sample(3, "other thing")]).unwrap();
        let hits = idx.search("merge two lists", 3).unwrap();
        assert_eq!(idx.samples[hits[0].0].id, 2);
        assert_eq!(idx.samples[hits[1].0].id, 5);
        assert_eq!(hits[0].1, hits[1].1);
    }

    #[test]
    fn unknown_query_terms_score_zero() {
        let idx = build_index(&[sample(1, "merge two lists")]).unwrap();
        let hits = idx.search("zebra", 5).unwrap();
        assert_eq!(hits, vec![(0, 0.0)]);
    }

    #[test]
    fn cache_round_trip_and_invalidation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        let corpus = vec![sample(1, "merge two lists"), sample(2, "reverse a string")];
        let (a, hit) = TfIdfIndex::load_or_build(&path, &corpus, WeightConfig::default()).unwrap();
        assert!(!hit);
        let (b, hit) = TfIdfIndex::load_or_build(&path, &corpus, WeightConfig::default()).unwrap();
        assert!(hit);
        assert_eq!(a, b);
        let mut changed = corpus.clone();
        changed[1].description = "reverse a word".into();
        let (c, hit) = TfIdfIndex::load_or_build(&path, &changed, WeightConfig::default()).unwrap();
        assert!(!hit);
        assert!(c.vocabulary.contains_key("word"));
    }
}
