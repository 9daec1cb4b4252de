//! Binary-relevance ranking metrics over the top `n` results.
//!
//! A repeated id counts as relevant only at its first position.

use std::collections::HashSet;

/// Ranks (1-based) within the top `n` at which a new golden id appears.
fn hit_ranks<S: AsRef<str>>(ranked: &[S], golden: &HashSet<String>, n: usize) -> Vec<usize> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut ranks = Vec::new();
    for (i, id) in ranked.iter().take(n).enumerate() {
        let id = id.as_ref();
        if golden.contains(id) && seen.insert(id) {
            ranks.push(i + 1);
        }
    }
    ranks
}

/// `(1 / min(|G|, n)) * sum of precision@i over golden hits i <= n`.
pub fn average_precision<S: AsRef<str>>(ranked: &[S], golden: &HashSet<String>, n: usize) -> f64 {
    if golden.is_empty() || n == 0 {
        return 0.0;
    }
    let sum: f64 = hit_ranks(ranked, golden, n)
        .iter()
        .enumerate()
        .map(|(hits_before, &rank)| (hits_before + 1) as f64 / rank as f64)
        .sum();
    sum / golden.len().min(n) as f64
}

/// `|top-n ∩ G| / |G|`.
pub fn recall_at<S: AsRef<str>>(ranked: &[S], golden: &HashSet<String>, n: usize) -> f64 {
    if golden.is_empty() {
        return 0.0;
    }
    hit_ranks(ranked, golden, n).len() as f64 / golden.len() as f64
}

/// DCG@n over IDCG@n with gains of 1 and discount `1 / log2(rank + 1)`.
pub fn ndcg_at<S: AsRef<str>>(ranked: &[S], golden: &HashSet<String>, n: usize) -> f64 {
    if golden.is_empty() || n == 0 {
        return 0.0;
    }
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = hit_ranks(ranked, golden, n).into_iter().map(discount).sum();
    let idcg: f64 = (1..=golden.len().min(n)).map(discount).sum();
    dcg / idcg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> HashSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ap_fixture() {
        let g = set(&["r1", "r2"]);
        let ap = average_precision(&["r1", "x", "r2"], &g, 10);
        assert!((ap - 0.8333).abs() < 1e-4);
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ap_extremes() {
        let g = set(&["a", "b"]);
        assert_eq!(average_precision(&["a", "b", "x"], &g, 10), 1.0);
        assert_eq!(average_precision(&["x", "y"], &g, 10), 0.0);
        // denominator is min(|G|, n)
        assert_eq!(average_precision(&["a", "b"], &set(&["a", "b", "c"]), 2), 1.0);
    }

    #[test]
    fn recall_fixture() {
        let g = set(&["a", "b"]);
        assert_eq!(recall_at(&["x", "a", "y"], &g, 10), 0.5);
        assert_eq!(recall_at(&["x", "a", "b"], &g, 2), 0.5);
    }

    #[test]
    fn ndcg_fixtures() {
        let g = set(&["a"]);
        assert_eq!(ndcg_at(&["a", "x"], &g, 10), 1.0);
        let v = ndcg_at(&["x", "a"], &g, 10);
        assert!((v - 0.6309).abs() < 1e-4);
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn repeated_hit_counts_once() {
        let g = set(&["a", "b"]);
        assert_eq!(recall_at(&["a", "a"], &g, 10), 0.5);
        assert_eq!(average_precision(&["a", "a"], &g, 10), 0.5);
    }
}
