use std::collections::HashMap;

use crate::embedding::EmbeddingVector;
use crate::lexical::LexicalIndex;
use crate::ranking::{top_k, IndexError, ScoredDoc};
use crate::vector::VectorIndex;

/// Each side contributes this many candidates per requested result.
pub const CANDIDATE_MULTIPLIER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fusion {
    /// Per-query min-max normalization of each side, then
    /// `alpha * vector + (1 - alpha) * lexical`.
    MinMax,
    /// Weighted reciprocal rank: `alpha / (c + rank_v) + (1 - alpha) / (c + rank_l)`.
    ReciprocalRank { c: f64 },
}

impl Default for Fusion {
    fn default() -> Self {
        Fusion::MinMax
    }
}

/// Convex fusion of lexical and vector scores with the default [`Fusion::MinMax`].
pub fn hybrid_search(
    lexical: &LexicalIndex,
    vectors: &VectorIndex,
    query: &str,
    query_vector: &EmbeddingVector,
    k: usize,
    alpha: f64,
) -> Result<Vec<ScoredDoc>, IndexError> {
    hybrid_search_with(lexical, vectors, query, query_vector, k, alpha, Fusion::MinMax)
}

pub fn hybrid_search_with(
    lexical: &LexicalIndex,
    vectors: &VectorIndex,
    query: &str,
    query_vector: &EmbeddingVector,
    k: usize,
    alpha: f64,
    fusion: Fusion,
) -> Result<Vec<ScoredDoc>, IndexError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let depth = k.saturating_mul(CANDIDATE_MULTIPLIER);
    let lex = lexical.search(query, depth);
    let vec = vectors.search(query_vector, depth)?;
    let fused = match fusion {
        Fusion::MinMax => fuse_min_max(&lex, &vec, alpha),
        Fusion::ReciprocalRank { c } => fuse_reciprocal_rank(&lex, &vec, alpha, c),
    };
    Ok(top_k(fused, k))
}

/// Min-max fusion over the union of both candidate lists.
///
/// A candidate missing from one side gets that side's floor, `min(0, lowest
/// observed score)`, before normalization. For BM25 the floor is 0; for cosine
/// scores it also covers negative similarities, so a missing candidate never
/// outranks an observed one on that side.
pub fn fuse_min_max(lexical: &[ScoredDoc], vector: &[ScoredDoc], alpha: f64) -> Vec<ScoredDoc> {
    let mut union: Vec<&str> = Vec::with_capacity(lexical.len() + vector.len());
    let lex_map: HashMap<&str, f64> = lexical.iter().map(|d| (d.id.as_str(), d.score)).collect();
    let vec_map: HashMap<&str, f64> = vector.iter().map(|d| (d.id.as_str(), d.score)).collect();
    for d in vector.iter().chain(lexical) {
        if !union.contains(&d.id.as_str()) {
            union.push(&d.id);
        }
    }
    let lex_norm = normalizer(&lex_map, union.len());
    let vec_norm = normalizer(&vec_map, union.len());
    union
        .into_iter()
        .map(|id| {
            let l = lex_norm(lex_map.get(id).copied());
            let v = vec_norm(vec_map.get(id).copied());
            ScoredDoc::new(id, alpha * v + (1.0 - alpha) * l)
        })
        .collect()
}

fn normalizer(side: &HashMap<&str, f64>, union_len: usize) -> impl Fn(Option<f64>) -> f64 {
    let observed_min = side.values().copied().fold(f64::INFINITY, f64::min);
    let observed_max = side.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let has_missing = side.len() < union_len;
    let floor = observed_min.min(0.0);
    let lo = if has_missing { floor } else { observed_min };
    let hi = observed_max;
    move |score| match score {
        None => 0.0,
        Some(_) if hi - lo <= f64::EPSILON => 1.0,
        Some(s) => (s - lo) / (hi - lo),
    }
}

pub fn fuse_reciprocal_rank(
    lexical: &[ScoredDoc],
    vector: &[ScoredDoc],
    alpha: f64,
    c: f64,
) -> Vec<ScoredDoc> {
    let mut fused: Vec<ScoredDoc> = Vec::new();
    let mut pos: HashMap<String, usize> = HashMap::new();
    for (weight, list) in [(alpha, vector), (1.0 - alpha, lexical)] {
        for (rank, d) in list.iter().enumerate() {
            let add = weight / (c + rank as f64 + 1.0);
            match pos.get(&d.id) {
                Some(&i) => fused[i].score += add,
                None => {
                    pos.insert(d.id.clone(), fused.len());
                    fused.push(ScoredDoc::new(d.id.clone(), add));
                }
            }
        }
    }
    fused
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd(id: &str, s: f64) -> ScoredDoc {
        ScoredDoc::new(id, s)
    }

    fn score_of(list: &[ScoredDoc], id: &str) -> f64 {
        list.iter().find(|d| d.id == id).unwrap().score
    }

    #[test]
    fn convex_combination_of_extremes() {
        // "a" tops the vector side and is absent lexically
        let vector = [sd("a", 0.9), sd("b", 0.1)];
        let lexical = [sd("b", 3.0), sd("c", 1.0)];
        let fused = fuse_min_max(&lexical, &vector, 0.8);
        assert!((score_of(&fused, "a") - 0.8).abs() < 1e-12);
        // b: vector (0.1 - 0) / 0.9, lexical 1.0
        assert!((score_of(&fused, "b") - (0.8 * 0.1 / 0.9 + 0.2)).abs() < 1e-12);
        // c: vector missing, lexical 1/3
        assert!((score_of(&fused, "c") - 0.2 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_cosines_stay_above_missing() {
        let vector = [sd("a", -0.2), sd("b", -0.5)];
        let lexical = [sd("z", 1.0)];
        let fused = top_k(fuse_min_max(&lexical, &vector, 1.0), 2);
        let ids: Vec<_> = fused.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn reciprocal_rank_weights() {
        let vector = [sd("a", 0.9), sd("b", 0.1)];
        let lexical = [sd("b", 3.0)];
        let fused = fuse_reciprocal_rank(&lexical, &vector, 0.5, 60.0);
        assert!((score_of(&fused, "a") - 0.5 / 61.0).abs() < 1e-15);
        assert!((score_of(&fused, "b") - (0.5 / 62.0 + 0.5 / 61.0)).abs() < 1e-15);
    }
}
