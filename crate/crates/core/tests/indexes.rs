mod common;

use common::text;
use proptest::prelude::*;
use toolgraph::embedding::{EmbeddingVector, ToolDocument};
use toolgraph::lexical::{tokenize, LexicalIndex};
use toolgraph::ranking::ScoredDoc;
use toolgraph::vector::{cosine_similarity, VectorIndex};

fn docs(texts: &[String]) -> Vec<ToolDocument> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| ToolDocument {
            tool_id: format!("d{i:02}"),
            text: t.clone(),
        })
        .collect()
}

/// Okapi BM25 straight from its definition.
fn reference_bm25(all: &[ToolDocument], query: &str, doc: &ToolDocument) -> f64 {
    let (k1, b) = (1.2, 0.75);
    let tokenized: Vec<Vec<String>> = all.iter().map(|d| tokenize(&d.text)).collect();
    let n = all.len() as f64;
    let avgdl = tokenized.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let dl = tokenize(&doc.text).len() as f64;
    let mut score = 0.0;
    for q in tokenize(query) {
        let df = tokenized.iter().filter(|t| t.contains(&q)).count() as f64;
        let tf = tokenize(&doc.text).iter().filter(|t| **t == q).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    score
}

fn sort_reference(mut v: Vec<ScoredDoc>) -> Vec<ScoredDoc> {
    v.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap().then_with(|| a.id.cmp(&b.id)));
    v
}

proptest! {
    #[test]
    fn lexical_search_matches_exhaustive_scoring(
        texts in prop::collection::vec(text(), 1..20),
        query in text(),
        k in 1usize..25,
    ) {
        let docs = docs(&texts);
        let idx = LexicalIndex::build(&docs).unwrap();
        let mut expected = Vec::new();
        for d in &docs {
            let s = reference_bm25(&docs, &query, d);
            prop_assert!((idx.bm25_score(&query, &d.tool_id).unwrap() - s).abs() < 1e-9);
            if s > 0.0 {
                expected.push(ScoredDoc::new(d.tool_id.clone(), s));
            }
        }
        let expected = sort_reference(expected);
        let got = idx.search(&query, k);
        prop_assert_eq!(got.len(), expected.len().min(k));
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g.score - e.score).abs() < 1e-9);
        }
        // ids agree wherever scores are not tied within tolerance
        for (i, (g, e)) in got.iter().zip(&expected).enumerate() {
            let tied = expected.iter().enumerate().any(|(j, o)| j != i && (o.score - e.score).abs() < 1e-9);
            if !tied {
                prop_assert_eq!(&g.id, &e.id);
            }
        }
    }

    #[test]
    fn vector_search_matches_brute_force(
        vecs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..30),
        q in prop::collection::vec(-1.0f64..1.0, 4),
        k in 1usize..35,
    ) {
        prop_assume!(q.iter().any(|x| x.abs() > 1e-3));
        let entries: Vec<(String, EmbeddingVector)> = vecs
            .iter()
            .filter(|v| v.iter().any(|x| x.abs() > 1e-3))
            .enumerate()
            .map(|(i, v)| (format!("v{i:02}"), EmbeddingVector::new(v.clone()).unwrap()))
            .collect();
        prop_assume!(!entries.is_empty());
        let idx = VectorIndex::build(entries.clone()).unwrap();
        let qv = EmbeddingVector::new(q).unwrap();
        let expected = sort_reference(
            entries
                .iter()
                .map(|(id, v)| ScoredDoc::new(id.clone(), cosine_similarity(&qv, v).unwrap()))
                .collect(),
        );
        let got = idx.search(&qv, k).unwrap();
        prop_assert_eq!(got.len(), entries.len().min(k));
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g.score - e.score).abs() < 1e-12);
        }
    }
}

#[test]
fn tie_breaks_by_ascending_id() {
    let docs = docs(&["stock price".into(), "stock price".into(), "weather".into()]);
    let idx = LexicalIndex::build(&docs).unwrap();
    let hits = idx.search("stock", 1);
    assert_eq!(hits[0].id, "d00");
}
