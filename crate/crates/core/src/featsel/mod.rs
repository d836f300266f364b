//! Feature ranking ensemble: five rankings (OLS, lasso, ridge, RFE, random
//! forest importance), mean-rank aggregation with top-k selection, and
//! feature–target correlations.

mod forest;
mod linear;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

pub use forest::{rf_importance, DEFAULT_TREES};
pub use linear::{
    lasso_ranking, ols_ranking, rank_by_linear_models, rfe_rank, ridge_ranking, LassoPath,
    RIDGE_LAMBDA,
};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::statmath::{t_two_sided_p, Dof};

pub const DEFAULT_SELECT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankMethod {
    Ols,
    Lasso,
    Ridge,
    Rfe,
    RandomForest,
}

impl RankMethod {
    pub const ALL: [RankMethod; 5] = [
        RankMethod::Ols,
        RankMethod::Lasso,
        RankMethod::Ridge,
        RankMethod::Rfe,
        RankMethod::RandomForest,
    ];

    pub fn key(self) -> &'static str {
        match self {
            RankMethod::Ols => "ols",
            RankMethod::Lasso => "lasso",
            RankMethod::Ridge => "ridge",
            RankMethod::Rfe => "rfe",
            RankMethod::RandomForest => "rf",
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for RankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankMethod::ALL
            .into_iter()
            .find(|m| m.key() == s || (s == "random_forest" && *m == RankMethod::RandomForest))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ranking method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub method: RankMethod,
    /// Coefficient on standardized features, or importance for the forest.
    pub scores: Vec<f64>,
    /// `ranks[j]` is feature j's rank, 1 = most important.
    pub ranks: Vec<usize>,
    /// Features skipped for having zero variance.
    pub constant: Vec<usize>,
}

impl FeatureRanking {
    /// Rank by descending `key`, ties to the lower feature index; constant
    /// features go last with score 0.
    pub(crate) fn from_keys(
        method: RankMethod,
        mut scores: Vec<f64>,
        keys: &[(f64, f64)],
        constant: &[usize],
    ) -> Self {
        for &j in constant {
            scores[j] = 0.0;
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            let ca = constant.contains(&a);
            let cb = constant.contains(&b);
            ca.cmp(&cb)
                .then_with(|| keys[b].0.total_cmp(&keys[a].0))
                .then_with(|| keys[b].1.total_cmp(&keys[a].1))
                .then(a.cmp(&b))
        });
        let mut ranks = vec![0; scores.len()];
        for (r, &j) in order.iter().enumerate() {
            ranks[j] = r + 1;
        }
        FeatureRanking {
            method,
            scores,
            ranks,
            constant: constant.to_vec(),
        }
    }

    /// Feature indices from rank 1 downwards.
    pub fn order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.ranks.len()).collect();
        order.sort_by_key(|&j| self.ranks[j]);
        order
    }
}

/// Columns with zero variance, warned about once per call.
pub(crate) fn constant_columns(x: &DMatrix<f64>, what: &str) -> Vec<usize> {
    let st = crate::linalg::Standardizer::fit(x);
    let constant: Vec<usize> = (0..x.ncols()).filter(|&j| st.is_constant(j)).collect();
    if !constant.is_empty() {
        log::warn!("{what}: zero-variance feature columns {constant:?} ranked last");
    }
    constant
}

/// All five rankings, in [`RankMethod::ALL`] order.
pub fn rank_all(x: &DMatrix<f64>, y: &[f64], seed: u64, exec: Execution) -> Result<Vec<FeatureRanking>> {
    let [ols, lasso, ridge] = rank_by_linear_models(x, y, seed)?;
    let rfe = rfe_rank(x, y)?;
    let rf = rf_importance(x, y, DEFAULT_TREES, seed, exec)?;
    Ok(vec![ols, lasso, ridge, rfe, rf])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedRanking {
    pub mean_rank: Vec<f64>,
    /// The `k` best features by mean rank, best first.
    pub selected: Vec<usize>,
}

impl AggregatedRanking {
    pub fn is_selected(&self, j: usize) -> bool {
        self.selected.contains(&j)
    }
}

/// Unweighted mean rank across methods; the `k` smallest are selected, ties
/// resolved by feature order.
pub fn aggregate_rankings(rankings: &[FeatureRanking], k: usize) -> Result<AggregatedRanking> {
    let first = rankings
        .first()
        .ok_or_else(|| Error::InvalidArgument("no rankings to aggregate".into()))?;
    let p = first.ranks.len();
    if rankings.iter().any(|r| r.ranks.len() != p) {
        return Err(Error::InvalidArgument("rankings cover different feature sets".into()));
    }
    if k > p {
        return Err(Error::InvalidArgument(format!("cannot select {k} of {p} features")));
    }
    let m = rankings.len() as f64;
    // Sum integer ranks first so the mean is a single correctly rounded division.
    let mean_rank: Vec<f64> = (0..p)
        .map(|j| rankings.iter().map(|r| r.ranks[j]).sum::<usize>() as f64 / m)
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| mean_rank[a].total_cmp(&mean_rank[b]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(AggregatedRanking {
        mean_rank,
        selected: order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    /// Set when the feature had zero variance and r was reported as 0.
    pub degenerate: bool,
}

/// Pearson correlation with a two-sided Student-t p-value on n − 2 dof.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {n} vs {}",
            y.len()
        )));
    }
    if n < 3 {
        return Err(Error::TooFewSamples(format!("correlation needs n ≥ 3, got {n}")));
    }
    let mx = crate::linalg::mean(x);
    let my = crate::linalg::mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy <= 0.0 {
        return Err(Error::InvalidArgument("target has zero variance".into()));
    }
    if sxx <= 1e-24 * (1.0 + mx * mx) * n as f64 {
        return Ok(Correlation {
            r: 0.0,
            p: 1.0,
            degenerate: true,
        });
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let dof = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (dof / (1.0 - r * r)).sqrt();
        t_two_sided_p(t, Dof::new(dof)?)
    };
    Ok(Correlation {
        r,
        p,
        degenerate: false,
    })
}

/// Per-column correlation with the target.
pub fn correlate(x: &DMatrix<f64>, y: &[f64]) -> Result<Vec<Correlation>> {
    let out = x
        .column_iter()
        .map(|c| pearson(c.as_slice(), y))
        .collect::<Result<Vec<_>>>()?;
    let flagged: Vec<usize> = (0..out.len()).filter(|&j| out[j].degenerate).collect();
    if !flagged.is_empty() {
        log::warn!("correlation undefined for zero-variance features {flagged:?}; reported r = 0, p = 1");
    }
    Ok(out)
}
