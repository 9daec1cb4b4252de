//! Exact (exhaustive) cosine-similarity search.

use crate::embedding::EmbeddingVector;
use crate::ranking::{top_k, IndexError, ScoredDoc};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `dot(a, b) / (|a| |b|)`, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, IndexError> {
    if a.dimension() != b.dimension() {
        return Err(IndexError::QueryDimension {
            expected: a.dimension(),
            actual: b.dimension(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(IndexError::ZeroVector(
            if na == 0.0 { "lhs" } else { "rhs" }.to_string(),
        ));
    }
    Ok((dot(a.values(), b.values()) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone)]
struct Entry {
    id: String,
    vector: EmbeddingVector,
    norm: f64,
}

#[derive(Debug, Clone)]
pub struct VectorIndex {
    entries: Vec<Entry>,
    dimension: usize,
}

impl VectorIndex {
    /// Rejects duplicate ids, mixed dimensions and zero vectors. An empty
    /// input yields an empty index of dimension 0.
    pub fn build(vectors: Vec<(String, EmbeddingVector)>) -> Result<Self, IndexError> {
        let dimension = vectors.first().map_or(0, |(_, v)| v.dimension());
        let mut seen = std::collections::HashSet::with_capacity(vectors.len());
        let mut entries = Vec::with_capacity(vectors.len());
        for (id, vector) in vectors {
            if !seen.insert(id.clone()) {
                return Err(IndexError::DuplicateId(id));
            }
            if vector.dimension() != dimension {
                return Err(IndexError::DimensionMismatch {
                    id,
                    expected: dimension,
                    actual: vector.dimension(),
                });
            }
            let norm = vector.norm();
            if norm == 0.0 {
                return Err(IndexError::ZeroVector(id));
            }
            entries.push(Entry { id, vector, norm });
        }
        Ok(Self { entries, dimension })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.entries.iter().find(|e| e.id == id).map(|e| &e.vector)
    }

    /// Cosine similarity of `query` against every entry.
    pub fn score_all(&self, query: &EmbeddingVector) -> Result<Vec<ScoredDoc>, IndexError> {
        if self.entries.is_empty() {
            return Ok(Vec::new());
        }
        if query.dimension() != self.dimension {
            return Err(IndexError::QueryDimension {
                expected: self.dimension,
                actual: query.dimension(),
            });
        }
        let qn = query.norm();
        if qn == 0.0 {
            return Err(IndexError::ZeroVector("query".into()));
        }
        Ok(self
            .entries
            .iter()
            .map(|e| {
                let s = dot(query.values(), e.vector.values()) / (qn * e.norm);
                ScoredDoc::new(e.id.clone(), s.clamp(-1.0, 1.0))
            })
            .collect())
    }

    /// Exact top-`k` by cosine similarity, ties by ascending id.
    pub fn search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredDoc>, IndexError> {
        Ok(top_k(self.score_all(query)?, k))
    }
}
