use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CandidateSentence;
use crate::data::MetonymyCategory;

/// Picks `min(n, len)` candidates spread evenly across nouns.
///
/// Nouns are visited in a seeded random order, round after round, each round
/// taking the next unused candidate of every noun that still has one.
/// Candidates within a noun are shuffled with the same generator.
pub fn sample_uniform(candidates: &[CandidateSentence], n: usize, seed: u64) -> Vec<CandidateSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        groups.entry(c.noun.as_str()).or_default().push(i);
    }
    let mut queues: Vec<Vec<usize>> = groups.into_values().collect();
    queues.shuffle(&mut rng);
    for q in &mut queues {
        q.shuffle(&mut rng);
        q.reverse();
    }
    let want = n.min(candidates.len());
    let mut out = Vec::with_capacity(want);
    while out.len() < want {
        for q in &mut queues {
            if out.len() == want {
                break;
            }
            if let Some(i) = q.pop() {
                out.push(candidates[i].clone());
            }
        }
    }
    out
}

/// `sample_uniform` applied to each category separately, `n` per category.
/// Category `k` (in declaration order) uses seed `seed + k`.
pub fn sample_per_category(candidates: &[CandidateSentence], n: usize, seed: u64) -> Vec<CandidateSentence> {
    let mut out = Vec::new();
    for (k, cat) in MetonymyCategory::ALL.into_iter().enumerate() {
        let pool: Vec<CandidateSentence> = candidates.iter().filter(|c| c.category == cat).cloned().collect();
        out.extend(sample_uniform(&pool, n, seed.wrapping_add(k as u64)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    pub(crate) fn cand(noun: &str, i: usize) -> CandidateSentence {
        CandidateSentence {
            sentence: format!("s{i}"),
            noun_token: 0,
            verb_token: 1,
            noun_form: noun.into(),
            noun_occurrence: 0,
            relation: "obj".into(),
            noun: noun.into(),
            verb: "v".into(),
            category: MetonymyCategory::Container,
            source: format!("f#{noun}{i}"),
        }
    }

    fn pool(sizes: &[(&str, usize)]) -> Vec<CandidateSentence> {
        sizes
            .iter()
            .flat_map(|&(n, k)| (0..k).map(move |i| cand(n, i)))
            .collect()
    }

    fn per_noun(out: &[CandidateSentence]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for c in out {
            *m.entry(c.noun.clone()).or_default() += 1;
        }
        m
    }

    #[test]
    fn round_robin_counts() {
        // Round 1 takes a b c d (4), rounds 2 and 3 only a and b remain: 6, 8.
        let p = pool(&[("a", 10), ("b", 10), ("c", 1), ("d", 1)]);
        for seed in 0..20 {
            let m = per_noun(&sample_uniform(&p, 8, seed));
            assert_eq!(
                m,
                BTreeMap::from([("a".into(), 3), ("b".into(), 3), ("c".into(), 1), ("d".into(), 1)])
            );
        }
    }

    #[test]
    fn deterministic_and_exhaustive() {
        let p = pool(&[("a", 5), ("b", 2), ("c", 7)]);
        assert_eq!(sample_uniform(&p, 6, 42), sample_uniform(&p, 6, 42));
        let all = sample_uniform(&p, 100, 1);
        assert_eq!(all.len(), p.len());
        assert!(sample_uniform(&p, 0, 1).is_empty());
    }

    proptest! {
        #[test]
        fn fair_subset_without_duplicates(
            sizes in proptest::collection::vec(1usize..12, 1..8),
            n in 0usize..60,
            seed in any::<u64>(),
        ) {
            let names: Vec<String> = (0..sizes.len()).map(|i| format!("n{i}")).collect();
            let p: Vec<_> = names.iter().zip(&sizes).flat_map(|(nm, &k)| (0..k).map(move |i| cand(nm, i))).collect();
            let out = sample_uniform(&p, n, seed);
            prop_assert_eq!(out.len(), n.min(p.len()));
            let mut seen = HashMap::new();
            for c in &out {
                prop_assert!(p.contains(c));
                *seen.entry(c.source.clone()).or_insert(0) += 1;
            }
            prop_assert!(seen.values().all(|&v| v == 1));
            let need = n.div_ceil(sizes.len());
            if sizes.iter().all(|&k| k >= need) {
                let m = per_noun(&out);
                let counts: Vec<usize> = names.iter().map(|nm| m.get(nm).copied().unwrap_or(0)).collect();
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
        }
    }
}
