use super::{EmbedError, Embedder, EmbeddingVector};
use crate::lexical::tokenize;

/// Deterministic embedder: a signed bag of token hashes (the "hashing trick")
/// in `dimension` buckets, L2-normalized.
///
/// Texts sharing tokens point in similar directions; unrelated texts are
/// nearly orthogonal in expectation because each token lands in a pseudo-random
/// bucket with a pseudo-random sign.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
    model: String,
}

pub const DEFAULT_DIMENSION: usize = 256;

impl HashEmbedder {
    pub fn new(dimension: usize) -> Result<Self, EmbedError> {
        if dimension == 0 {
            return Err(EmbedError::InvalidVector("dimension must be > 0".into()));
        }
        Ok(Self {
            dimension,
            model: format!("token-hash-{dimension}"),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION).expect("nonzero")
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Embedder for HashEmbedder {
    fn provider(&self) -> &str {
        "hash"
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut tokens = tokenize(text);
        if tokens.is_empty() {
            // punctuation-only text still needs a direction
            tokens.push(text.to_lowercase());
        }
        let mut values = vec![0.0f64; self.dimension];
        for token in &tokens {
            let h = splitmix(fnv1a(token.as_bytes()));
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if splitmix(h) >> 63 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
        let mut norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // every token cancelled out; fall back to the first token alone
            let h = splitmix(fnv1a(tokens[0].as_bytes()));
            values[(h % self.dimension as u64) as usize] = 1.0;
            norm = 1.0;
        }
        for v in &mut values {
            *v /= norm;
        }
        EmbeddingVector::new(values)
    }
}
