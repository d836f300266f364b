use std::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvScheme {
    KFold { k: usize, seed: u64 },
    Loo,
}

impl fmt::Display for CvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CvScheme::KFold { k, .. } => write!(f, "{k}-fold"),
            CvScheme::Loo => f.write_str("leave-one-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split `0..n` into train/test folds. K-fold shuffles with the scheme's
/// seed and cuts contiguous chunks whose sizes differ by at most one.
pub fn make_folds(n: usize, scheme: CvScheme) -> Result<Vec<Fold>> {
    let tests: Vec<Vec<usize>> = match scheme {
        CvScheme::KFold { k, seed } => {
            if k < 2 {
                return Err(Error::InvalidArgument(format!("k-fold needs k ≥ 2, got {k}")));
            }
            if n < k {
                return Err(Error::TooFewSamples(format!("{n} samples for {k} folds")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::stream(seed, &[rng::tag::FOLDS, n as u64, k as u64]));
            let (base, extra) = (n / k, n % k);
            let mut start = 0;
            (0..k)
                .map(|f| {
                    let len = base + usize::from(f < extra);
                    let mut chunk = order[start..start + len].to_vec();
                    chunk.sort_unstable();
                    start += len;
                    chunk
                })
                .collect()
        }
        CvScheme::Loo => {
            if n < 2 {
                return Err(Error::TooFewSamples(format!(
                    "leave-one-out needs at least 2 samples, got {n}"
                )));
            }
            (0..n).map(|i| vec![i]).collect()
        }
    };
    Ok(tests
        .into_iter()
        .map(|test| {
            let mut in_test = vec![false; n];
            for &i in &test {
                in_test[i] = true;
            }
            Fold {
                train: (0..n).filter(|&i| !in_test[i]).collect(),
                test,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kfold_partition() {
        let folds = make_folds(10, CvScheme::KFold { k: 5, seed: 3 }).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = [0; 10];
        for f in &folds {
            assert_eq!(f.test.len(), 2);
            assert_eq!(f.train.len(), 8);
            for &i in &f.test {
                seen[i] += 1;
                assert!(!f.train.contains(&i));
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn kfold_sizes_differ_by_at_most_one() {
        let folds = make_folds(23, CvScheme::KFold { k: 5, seed: 0 }).unwrap();
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 23);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn loo_folds() {
        let folds = make_folds(4, CvScheme::Loo).unwrap();
        assert_eq!(folds.len(), 4);
        for (i, f) in folds.iter().enumerate() {
            assert_eq!(f.test, vec![i]);
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = make_folds(30, CvScheme::KFold { k: 5, seed: 11 }).unwrap();
        let b = make_folds(30, CvScheme::KFold { k: 5, seed: 11 }).unwrap();
        let c = make_folds(30, CvScheme::KFold { k: 5, seed: 12 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_samples() {
        assert!(make_folds(4, CvScheme::KFold { k: 5, seed: 0 }).is_err());
        assert!(make_folds(1, CvScheme::Loo).is_err());
    }
}
