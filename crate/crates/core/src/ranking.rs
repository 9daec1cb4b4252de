use std::cmp::Ordering;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredDoc {
    pub id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(id: impl Into<String>, score: f64) -> Self {
        Self {
            id: id.into(),
            score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("unknown document id `{0}`")]
    UnknownDoc(String),
    #[error("document `{id}` has dimension {actual}, index dimension is {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("query has dimension {actual}, index dimension is {expected}")]
    QueryDimension { expected: usize, actual: usize },
    #[error("`{0}` is a zero vector")]
    ZeroVector(String),
}

/// Score descending, then id ascending.
pub fn rank_order(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

/// Sorts by [`rank_order`] and keeps the first `k`.
pub fn top_k(mut docs: Vec<ScoredDoc>, k: usize) -> Vec<ScoredDoc> {
    if k < docs.len() {
        docs.select_nth_unstable_by(k, rank_order);
        docs.truncate(k);
    }
    docs.sort_by(rank_order);
    docs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_on_id() {
        let docs = vec![
            ScoredDoc::new("b", 1.0),
            ScoredDoc::new("a", 1.0),
            ScoredDoc::new("c", 2.0),
            ScoredDoc::new("d", 0.5),
        ];
        let ids: Vec<_> = top_k(docs, 2).into_iter().map(|d| d.id).collect();
        assert_eq!(ids, ["c", "a"]);
    }
}
