use std::collections::HashSet;

use proptest::prelude::*;
use toolgraph::eval::{average_precision, ndcg_at, recall_at, CUTOFFS};

fn case() -> impl Strategy<Value = (Vec<String>, HashSet<String>)> {
    (prop::collection::vec(0u8..60, 0..45), prop::collection::hash_set(0u8..60, 1..10)).prop_map(|(r, g)| {
        let mut seen = HashSet::new();
        let ranked = r.into_iter().filter(|x| seen.insert(*x)).map(|x| format!("t{x}")).collect();
        (ranked, g.into_iter().map(|x| format!("t{x}")).collect())
    })
}

proptest! {
    #[test]
    fn bounded(( ranked, golden) in case()) {
        for n in CUTOFFS {
            for v in [average_precision(&ranked, &golden, n), recall_at(&ranked, &golden, n), ndcg_at(&ranked, &golden, n)] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn invariant_under_permuting_non_golden_tail((ranked, golden) in case(), seed in any::<u64>()) {
        for n in CUTOFFS {
            if ranked.len() <= n {
                continue;
            }
            // shuffle below the cutoff among non-golden items only
            let mut permuted = ranked.clone();
            let tail: Vec<usize> = (n..ranked.len()).filter(|&i| !golden.contains(&ranked[i])).collect();
            let mut values: Vec<String> = tail.iter().map(|&i| ranked[i].clone()).collect();
            let shift = (seed as usize) % values.len().max(1);
            values.rotate_left(shift);
            for (slot, v) in tail.iter().zip(values) {
                permuted[*slot] = v;
            }
            prop_assert_eq!(average_precision(&ranked, &golden, n), average_precision(&permuted, &golden, n));
            prop_assert_eq!(recall_at(&ranked, &golden, n), recall_at(&permuted, &golden, n));
            prop_assert_eq!(ndcg_at(&ranked, &golden, n), ndcg_at(&permuted, &golden, n));
        }
    }

    #[test]
    fn ideal_ranking_scores_one(golden in prop::collection::hash_set(0u8..60, 1..10)) {
        let golden: HashSet<String> = golden.into_iter().map(|x| format!("t{x}")).collect();
        let mut ranked: Vec<String> = golden.iter().cloned().collect();
        ranked.push("other".into());
        for n in CUTOFFS {
            prop_assert!((average_precision(&ranked, &golden, n) - 1.0).abs() < 1e-12);
            prop_assert!((ndcg_at(&ranked, &golden, n) - 1.0).abs() < 1e-12);
        }
    }
}
