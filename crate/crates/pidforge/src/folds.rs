//! Deterministic K-fold splits over plan ids. Ids are sorted, shuffled with
//! a seeded generator, then dealt round-robin, so the same (ids, k, seed)
//! always yields the same partition regardless of input order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FoldSplit {
    pub schema_version: u32,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FoldError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("k = {k} exceeds the {n} available ids")]
    KTooLarge { k: usize, n: usize },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
}

pub fn make_folds(ids: &[String], k: usize, seed: u64) -> Result<FoldSplit, FoldError> {
    if k < 2 {
        return Err(FoldError::KTooSmall(k));
    }
    if k > ids.len() {
        return Err(FoldError::KTooLarge { k, n: ids.len() });
    }
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(FoldError::DuplicateId(w[0].clone()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);

    let mut buckets: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, id) in sorted.iter().enumerate() {
        buckets[i % k].push(id.clone());
    }

    let folds = (0..k)
        .map(|i| {
            let mut test = buckets[i].clone();
            test.sort();
            let mut train: Vec<String> = buckets
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, b)| b.iter().cloned())
                .collect();
            train.sort();
            Fold { train, test }
        })
        .collect();

    Ok(FoldSplit { schema_version: crate::manifest::SCHEMA_VERSION, k, seed, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("plan_{i:03}")).collect()
    }

    #[test]
    fn twelve_ids_five_folds_sizes() {
        let split = make_folds(&ids(12), 5, 7).unwrap();
        let mut sizes: Vec<usize> = split.folds.iter().map(|f| f.test.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![3, 3, 2, 2, 2]);
        for f in &split.folds {
            assert_eq!(f.train.len() + f.test.len(), 12);
        }
    }

    #[test]
    fn folds_partition_the_ids() {
        let all = ids(23);
        let split = make_folds(&all, 4, 99).unwrap();
        let mut seen = BTreeSet::new();
        for f in &split.folds {
            for id in &f.test {
                assert!(seen.insert(id.clone()), "{id} in two test folds");
            }
            let train: BTreeSet<_> = f.train.iter().collect();
            for id in &f.test {
                assert!(!train.contains(id), "{id} in both train and test");
            }
        }
        assert_eq!(seen.len(), all.len());
    }

    #[test]
    fn leave_one_out() {
        let split = make_folds(&ids(5), 5, 3).unwrap();
        for f in &split.folds {
            assert_eq!(f.test.len(), 1);
            assert_eq!(f.train.len(), 4);
        }
    }

    #[test]
    fn deterministic_and_order_insensitive() {
        let mut shuffled = ids(17);
        shuffled.reverse();
        let a = make_folds(&ids(17), 5, 42).unwrap();
        let b = make_folds(&shuffled, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = make_folds(&ids(17), 5, 43).unwrap();
        assert_ne!(a, c, "different seed should reshuffle");
    }

    #[test]
    fn errors() {
        assert_eq!(make_folds(&ids(3), 1, 0), Err(FoldError::KTooSmall(1)));
        assert_eq!(make_folds(&ids(3), 4, 0), Err(FoldError::KTooLarge { k: 4, n: 3 }));
        let mut dup = ids(3);
        dup.push("plan_001".into());
        assert!(matches!(make_folds(&dup, 2, 0), Err(FoldError::DuplicateId(_))));
    }
}
