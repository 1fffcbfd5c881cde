use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Bucket, BugFixPair, Vocabulary};

pub const MIN_PAIRS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("need at least {MIN_PAIRS} unique pairs to split, got {0}")]
    TooFew(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetBundle {
    pub bucket: Bucket,
    pub seed: u64,
    pub train: Vec<BugFixPair>,
    pub validation: Vec<BugFixPair>,
    pub test: Vec<BugFixPair>,
    pub vocabulary: Vocabulary,
    /// Pairs removed as duplicates before splitting.
    pub duplicates: usize,
}

impl DatasetBundle {
    pub fn all(&self) -> impl Iterator<Item = &BugFixPair> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}

/// Keeps the first occurrence of every (buggy, fixed) token-sequence pair.
pub fn dedup(pairs: Vec<BugFixPair>) -> (Vec<BugFixPair>, usize) {
    let mut seen = BTreeSet::new();
    let before = pairs.len();
    let kept: Vec<BugFixPair> = pairs
        .into_iter()
        .filter(|p| seen.insert((p.buggy.clone(), p.fixed.clone())))
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Train and validation sizes for `n` pairs: 80% and 10%, rounded half up;
/// the test split takes the rest.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let train = (8 * n + 5) / 10;
    let val = (n + 5) / 10;
    (train, val, n - train - val)
}

/// Deduplicates, shuffles with `seed` and splits 80/10/10. The vocabulary
/// covers all three splits.
pub fn dedup_and_split(pairs: Vec<BugFixPair>, bucket: Bucket, seed: u64) -> Result<DatasetBundle, SplitError> {
    let (mut pairs, duplicates) = dedup(pairs);
    if pairs.len() < MIN_PAIRS {
        return Err(SplitError::TooFew(pairs.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    let (n_train, n_val, _) = split_counts(pairs.len());
    let test = pairs.split_off(n_train + n_val);
    let validation = pairs.split_off(n_train);
    let train = pairs;
    let vocabulary = Vocabulary::from_methods(
        train
            .iter()
            .chain(&validation)
            .chain(&test)
            .flat_map(|p| [&p.buggy, &p.fixed]),
    );
    Ok(DatasetBundle {
        bucket,
        seed,
        train,
        validation,
        test,
        vocabulary,
        duplicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use crate::lexabs::{AbstractedMethod, IdMapping};
    use alloc::format;

    fn pair(b: &str, f: &str) -> BugFixPair {
        BugFixPair {
            buggy: AbstractedMethod::from_line(b),
            fixed: AbstractedMethod::from_line(f),
            actions: Vec::new(),
            mapping: IdMapping::new(),
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn hundred_unique_pairs_split_exactly() {
        let ps: Vec<_> = (0..100).map(|i| pair(&format!("a{i}"), "b")).collect();
        let b = dedup_and_split(ps, Bucket::Small, 1).unwrap();
        assert_eq!((b.train.len(), b.validation.len(), b.test.len()), (80, 10, 10));
        assert_eq!(b.duplicates, 0);
    }

    #[test]
    fn duplicates_collapse_and_same_buggy_different_fix_stays() {
        let mut ps: Vec<_> = (0..10).map(|i| pair(&format!("a{i}"), "b")).collect();
        ps.push(pair("a0", "b"));
        ps.push(pair("a0", "c"));
        let b = dedup_and_split(ps, Bucket::Small, 1).unwrap();
        assert_eq!(b.duplicates, 1);
        assert_eq!(b.all().count(), 11);
    }

    #[test]
    fn seeded_and_too_small() {
        let ps: Vec<_> = (0..37).map(|i| pair(&format!("a{i}"), "b")).collect();
        assert_eq!(
            dedup_and_split(ps.clone(), Bucket::Small, 9),
            dedup_and_split(ps.clone(), Bucket::Small, 9)
        );
        assert_ne!(
            dedup_and_split(ps.clone(), Bucket::Small, 9).unwrap().train,
            dedup_and_split(ps, Bucket::Small, 10).unwrap().train
        );
        let few: Vec<_> = (0..9).map(|i| pair(&format!("a{i}"), "b")).collect();
        assert_eq!(dedup_and_split(few, Bucket::Small, 1), Err(SplitError::TooFew(9)));
    }

    #[test]
    fn counts_round() {
        assert_eq!(split_counts(10), (8, 1, 1));
        assert_eq!(split_counts(15), (12, 2, 1));
        assert_eq!(split_counts(2000), (1600, 200, 200));
    }
}
