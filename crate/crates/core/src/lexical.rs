//! BM25 (Okapi) lexical search over tool documents.

use std::collections::HashMap;

use crate::embedding::ToolDocument;
use crate::ranking::{top_k, IndexError, ScoredDoc};

/// Lowercases and splits on every non-alphanumeric character, so
/// `get_stock_price` yields `get`, `stock`, `price`. No stemming or stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone)]
pub struct LexicalIndex {
    doc_ids: Vec<String>,
    lookup: HashMap<String, u32>,
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    params: Bm25Params,
}

impl LexicalIndex {
    pub fn build(docs: &[ToolDocument]) -> Result<Self, IndexError> {
        Self::with_params(docs, Bm25Params::default())
    }

    pub fn with_params(docs: &[ToolDocument], params: Bm25Params) -> Result<Self, IndexError> {
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut lookup = HashMap::with_capacity(docs.len());
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            let i = i as u32;
            if lookup.insert(doc.tool_id.clone(), i).is_some() {
                return Err(IndexError::DuplicateId(doc.tool_id.clone()));
            }
            doc_ids.push(doc.tool_id.clone());
            let tokens = tokenize(&doc.text);
            doc_lengths.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting { doc: i, tf });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = if docs.is_empty() {
            0.0
        } else {
            total as f64 / docs.len() as f64
        };
        Ok(Self {
            doc_ids,
            lookup,
            postings,
            doc_lengths,
            avg_doc_length,
            params,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn doc_length(&self, id: &str) -> Option<u32> {
        self.lookup.get(id).map(|&i| self.doc_lengths[i as usize])
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, never negative.
    pub fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, idf: f64, tf: u32, doc_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let norm = 1.0 - b + b * f64::from(doc_len) / self.avg_doc_length;
        idf * tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    /// Sum over query tokens of the BM25 term weight; absent terms add 0.
    pub fn bm25_score(&self, query: &str, doc: &str) -> Result<f64, IndexError> {
        let &idx = self
            .lookup
            .get(doc)
            .ok_or_else(|| IndexError::UnknownDoc(doc.to_string()))?;
        let mut score = 0.0;
        for term in tokenize(query) {
            let list = self.postings(&term);
            if let Some(p) = list.iter().find(|p| p.doc == idx) {
                score += self.term_weight(self.idf(list.len()), p.tf, self.doc_lengths[idx as usize]);
            }
        }
        Ok(score)
    }

    /// Top-`k` documents with a positive score, best first, ties by id.
    pub fn search(&self, query: &str, k: usize) -> Vec<ScoredDoc> {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for term in tokenize(query) {
            let list = self.postings(&term);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(list.len());
            for p in list {
                *acc.entry(p.doc).or_default() +=
                    self.term_weight(idf, p.tf, self.doc_lengths[p.doc as usize]);
            }
        }
        let scored = acc
            .into_iter()
            .filter(|(_, s)| *s > 0.0)
            .map(|(doc, s)| ScoredDoc::new(self.doc_ids[doc as usize].clone(), s))
            .collect();
        top_k(scored, k)
    }
}
