//! Random-forest feature importance: mean decrease in impurity over
//! bootstrapped regression trees.

use nalgebra::DMatrix;
use rand::Rng;

use super::{constant_columns, FeatureRanking, RankMethod};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::models::tree::{rows_of, Builder, Impurity, Target};
use crate::models::TreeParams;
use crate::rng;

pub const DEFAULT_TREES: usize = 100;
const MIN_SAMPLES: usize = 10;

/// Importances of each tree are normalized to sum to one, averaged over
/// trees and renormalized. Every tree considers all features at each node
/// and draws its bootstrap sample from its own seeded stream.
pub fn rf_importance(
    x: &DMatrix<f64>,
    y: &[f64],
    n_trees: usize,
    seed: u64,
    exec: Execution,
) -> Result<FeatureRanking> {
    let (n, p) = x.shape();
    if n != y.len() {
        return Err(Error::InvalidArgument(format!("design has {n} rows, target {}", y.len())));
    }
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples(format!(
            "random forest needs n ≥ {MIN_SAMPLES}, got {n}"
        )));
    }
    if n_trees == 0 || p == 0 {
        return Err(Error::InvalidArgument("forest needs trees and features".into()));
    }
    let constant = constant_columns(x, "forest importance");
    let rows = rows_of(x);
    let per_tree = exec.map_range(n_trees, |t| {
        let mut r = rng::stream(seed, &[rng::tag::FOREST, t as u64]);
        let idx: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
        let builder = Builder::new(&rows, Target::Values(y), Impurity::Variance, TreeParams::default(), None);
        let (_, imp) = builder.build(idx);
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter().map(|v| v / total).collect()
        } else {
            imp
        }
    });
    let mut scores = vec![0.0; p];
    for imp in &per_tree {
        for (s, v) in scores.iter_mut().zip(imp) {
            *s += v;
        }
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter_mut().for_each(|s| *s /= total);
    } else {
        log::warn!("forest found no informative split; importances are all zero");
    }
    let keys: Vec<(f64, f64)> = scores.iter().map(|&s| (s, 0.0)).collect();
    Ok(FeatureRanking::from_keys(RankMethod::RandomForest, scores, &keys, &constant))
}
