//! Rankings from linear models fitted on standardized features and a
//! centered target.

use nalgebra::{DMatrix, DVector};

use super::{constant_columns, FeatureRanking, RankMethod};
use crate::error::{Error, Result};
use crate::eval::folds::{make_folds, CvScheme};
use crate::linalg::{least_squares, mean, select_columns, select_rows, Standardizer};
use crate::rng;

pub const RIDGE_LAMBDA: f64 = 1.0;
const LASSO_TOL: f64 = 1e-8;
const LASSO_MAX_SWEEPS: usize = 10_000;
const LASSO_GRID: usize = 50;
const LASSO_MIN_RATIO: f64 = 1e-3;
const LASSO_FOLDS: usize = 5;

/// Standardized non-constant columns, the centered target and the indices of
/// the columns kept.
struct Prepared {
    z: DMatrix<f64>,
    y: DVector<f64>,
    active: Vec<usize>,
    constant: Vec<usize>,
}

fn prepare(x: &DMatrix<f64>, y: &[f64], what: &str) -> Result<Prepared> {
    if x.nrows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "design has {} rows, target {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidArgument("no features to rank".into()));
    }
    let constant = constant_columns(x, what);
    let active: Vec<usize> = (0..x.ncols()).filter(|j| !constant.contains(j)).collect();
    let xa = select_columns(x, &active);
    let z = Standardizer::fit(&xa).transform(&xa);
    let m = mean(y);
    Ok(Prepared {
        z,
        y: DVector::from_iterator(y.len(), y.iter().map(|v| v - m)),
        active,
        constant,
    })
}

fn require_overdetermined(n: usize, p: usize) -> Result<()> {
    if n <= p {
        return Err(Error::Underdetermined(format!(
            "{n} observations for {p} features; OLS ranking needs n > p"
        )));
    }
    Ok(())
}

/// Scatter active-column coefficients back to all features.
fn scatter(p: usize, active: &[usize], coef: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for (&j, &c) in active.iter().zip(coef) {
        out[j] = c;
    }
    out
}

fn abs_keys(scores: &[f64]) -> Vec<(f64, f64)> {
    scores.iter().map(|s| (s.abs(), 0.0)).collect()
}

pub fn ols_ranking(x: &DMatrix<f64>, y: &[f64]) -> Result<FeatureRanking> {
    require_overdetermined(x.nrows(), x.ncols())?;
    let pr = prepare(x, y, "ols ranking")?;
    let coef = if pr.active.is_empty() {
        vec![]
    } else {
        least_squares(&pr.z, &pr.y)?.coef.as_slice().to_vec()
    };
    let scores = scatter(x.ncols(), &pr.active, &coef);
    let keys = abs_keys(&scores);
    Ok(FeatureRanking::from_keys(RankMethod::Ols, scores, &keys, &pr.constant))
}

pub fn ridge_ranking(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<FeatureRanking> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge λ must be positive, got {lambda}")));
    }
    let pr = prepare(x, y, "ridge ranking")?;
    let coef = ridge_solve(&pr.z, &pr.y, lambda)?;
    let scores = scatter(x.ncols(), &pr.active, coef.as_slice());
    let keys = abs_keys(&scores);
    Ok(FeatureRanking::from_keys(RankMethod::Ridge, scores, &keys, &pr.constant))
}

pub(crate) fn ridge_solve(z: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let p = z.ncols();
    let gram = z.transpose() * z + DMatrix::identity(p, p) * lambda;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("ridge normal equations not positive definite".into()))?;
    Ok(chol.solve(&(z.transpose() * y)))
}

/// Minimize (1/2n)‖y − Zβ‖² + λ‖β‖₁ by cyclic coordinate descent, starting
/// from (and overwriting) `beta`. Returns the number of sweeps.
pub(crate) fn lasso_cd(z: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, beta: &mut [f64]) -> usize {
    let n = z.nrows() as f64;
    let norms: Vec<f64> = z.column_iter().map(|c| c.norm_squared() / n).collect();
    let mut resid = y - z * DVector::from_column_slice(beta);
    for sweep in 1..=LASSO_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..z.ncols() {
            if norms[j] == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let col = z.column(j);
            let rho = col.dot(&resid) / n + norms[j] * beta[j];
            let new = soft_threshold(rho, lambda) / norms[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < LASSO_TOL {
            return sweep;
        }
    }
    log::warn!("lasso coordinate descent hit {LASSO_MAX_SWEEPS} sweeps at λ = {lambda}");
    LASSO_MAX_SWEEPS
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// The λ grid, its cross-validated error and the refit at the chosen λ.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    /// Decreasing, log-spaced from the smallest all-zero λ.
    pub lambdas: Vec<f64>,
    pub cv_mse: Vec<f64>,
    pub chosen: usize,
    /// Coefficients on standardized features (all features; constant ones 0).
    pub coef: Vec<f64>,
}

fn lambda_grid(z: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let n = z.nrows() as f64;
    let max = z
        .column_iter()
        .map(|c| (c.dot(y) / n).abs())
        .fold(0.0, f64::max);
    let max = if max > 0.0 { max } else { 1.0 };
    (0..LASSO_GRID)
        .map(|i| max * LASSO_MIN_RATIO.powf(i as f64 / (LASSO_GRID - 1) as f64))
        .collect()
}

fn fit_path(z: &DMatrix<f64>, y: &DVector<f64>, lambdas: &[f64]) -> Vec<Vec<f64>> {
    let mut beta = vec![0.0; z.ncols()];
    lambdas
        .iter()
        .map(|&l| {
            lasso_cd(z, y, l, &mut beta);
            beta.clone()
        })
        .collect()
}

/// Choose λ by 5-fold CV (training folds re-standardized) and refit on all data.
pub fn lasso_cv(x: &DMatrix<f64>, y: &[f64], seed: u64) -> Result<LassoPath> {
    let pr = prepare(x, y, "lasso ranking")?;
    let n = x.nrows();
    let lambdas = lambda_grid(&pr.z, &pr.y);
    let xa = select_columns(x, &pr.active);
    let folds = make_folds(
        n,
        CvScheme::KFold {
            k: LASSO_FOLDS,
            seed: rng::derive_seed(seed, &[rng::tag::LASSO_CV]),
        },
    )?;
    let mut sse = vec![0.0; lambdas.len()];
    for fold in &folds {
        let xt = select_rows(&xa, &fold.train);
        let st = Standardizer::fit(&xt);
        let yt: Vec<f64> = fold.train.iter().map(|&i| y[i]).collect();
        let ym = mean(&yt);
        let yc = DVector::from_iterator(yt.len(), yt.iter().map(|v| v - ym));
        let path = fit_path(&st.transform(&xt), &yc, &lambdas);
        let zv = st.transform(&select_rows(&xa, &fold.test));
        for (l, beta) in path.iter().enumerate() {
            let pred = &zv * DVector::from_column_slice(beta);
            for (k, &i) in fold.test.iter().enumerate() {
                sse[l] += (y[i] - ym - pred[k]).powi(2);
            }
        }
    }
    let cv_mse: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let mut chosen = 0;
    for (l, &e) in cv_mse.iter().enumerate() {
        if e < cv_mse[chosen] {
            chosen = l;
        }
    }
    let beta = fit_path(&pr.z, &pr.y, &lambdas[..=chosen]).pop().unwrap_or_default();
    Ok(LassoPath {
        coef: scatter(x.ncols(), &pr.active, &beta),
        lambdas,
        cv_mse,
        chosen,
    })
}

/// Lasso ranking by |coefficient|. Features the penalty zeroes out are
/// ordered among themselves by |marginal correlation| with the target.
pub fn lasso_ranking(x: &DMatrix<f64>, y: &[f64], seed: u64) -> Result<FeatureRanking> {
    let path = lasso_cv(x, y, seed)?;
    let pr = prepare(x, y, "lasso ranking")?;
    let n = x.nrows() as f64;
    let mut marginal = vec![0.0; x.ncols()];
    for (k, &j) in pr.active.iter().enumerate() {
        marginal[j] = (pr.z.column(k).dot(&pr.y) / n).abs();
    }
    let keys: Vec<(f64, f64)> = path.coef.iter().zip(&marginal).map(|(c, m)| (c.abs(), *m)).collect();
    Ok(FeatureRanking::from_keys(RankMethod::Lasso, path.coef, &keys, &pr.constant))
}

/// OLS, lasso and ridge rankings.
pub fn rank_by_linear_models(x: &DMatrix<f64>, y: &[f64], seed: u64) -> Result<[FeatureRanking; 3]> {
    Ok([
        ols_ranking(x, y)?,
        lasso_ranking(x, y, seed)?,
        ridge_ranking(x, y, RIDGE_LAMBDA)?,
    ])
}

/// Recursive feature elimination: refit OLS on the surviving standardized
/// features and drop the smallest |coefficient| (ties: the higher index)
/// until one remains. Scores hold each feature's coefficient in the last
/// model that contained it.
pub fn rfe_rank(x: &DMatrix<f64>, y: &[f64]) -> Result<FeatureRanking> {
    require_overdetermined(x.nrows(), x.ncols())?;
    let pr = prepare(x, y, "rfe ranking")?;
    let p = x.ncols();
    let mut surviving: Vec<usize> = (0..pr.active.len()).collect();
    let mut scores = vec![0.0; p];
    let mut survived_rounds = vec![0.0; p];
    let mut round = 0.0;
    while !surviving.is_empty() {
        let coef = least_squares(&select_columns(&pr.z, &surviving), &pr.y)?.coef;
        let mut worst = 0;
        for k in 1..surviving.len() {
            if coef[k].abs() <= coef[worst].abs() {
                worst = k;
            }
        }
        let j = pr.active[surviving[worst]];
        scores[j] = coef[worst];
        survived_rounds[j] = round;
        surviving.remove(worst);
        round += 1.0;
    }
    let keys: Vec<(f64, f64)> = survived_rounds.iter().map(|&r| (r, 0.0)).collect();
    Ok(FeatureRanking::from_keys(RankMethod::Rfe, scores, &keys, &pr.constant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn planted(seed: u64, n: usize, p: usize, signal: usize) -> (DMatrix<f64>, Vec<f64>) {
        let mut r = rng::stream(seed, &[17]);
        let x = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
        let y = x.column(signal).iter().copied().collect();
        (x, y)
    }

    #[test]
    fn planted_signal_ranks_first() {
        for seed in 0..20 {
            let (x, y) = planted(seed, 100, 15, 3);
            let [ols, lasso, ridge] = rank_by_linear_models(&x, &y, seed).unwrap();
            for r in [&ols, &lasso, &ridge] {
                assert_eq!(r.ranks[3], 1, "{} seed {seed}", r.method);
                let mut sorted = r.ranks.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, (1..=15).collect::<Vec<_>>());
            }
            assert_eq!(rfe_rank(&x, &y).unwrap().ranks[3], 1);
        }
    }

    #[test]
    fn ols_underdetermined() {
        let (x, y) = planted(1, 15, 15, 0);
        assert!(matches!(ols_ranking(&x, &y), Err(Error::Underdetermined(_))));
        assert!(matches!(rfe_rank(&x, &y), Err(Error::Underdetermined(_))));
        assert!(ridge_ranking(&x, &y, 1.0).is_ok());
    }

    #[test]
    fn constant_column_ranked_last_with_zero_score() {
        let (mut x, y) = planted(2, 40, 4, 1);
        x.column_mut(0).fill(3.0);
        for r in [ols_ranking(&x, &y).unwrap(), ridge_ranking(&x, &y, 1.0).unwrap(), lasso_ranking(&x, &y, 0).unwrap(), rfe_rank(&x, &y).unwrap()] {
            assert_eq!(r.ranks[0], 4, "{}", r.method);
            assert_eq!(r.scores[0], 0.0);
            assert_eq!(r.constant, vec![0]);
            assert_eq!(r.ranks[1], 1);
        }
    }

    #[test]
    fn ridge_matches_closed_form_and_splits_duplicates() {
        // Columns 0 and 1 are identical; column 2 is orthogonal to them.
        let x = DMatrix::from_row_slice(5, 3, &[
            -2.0, -2.0, 1.0,
            -1.0, -1.0, -2.0,
            0.0, 0.0, 2.0,
            1.0, 1.0, -2.0,
            2.0, 2.0, 1.0,
        ]);
        let y = [-4.1, -1.9, 0.2, 2.1, 3.7];
        let r = ridge_ranking(&x, &y, 1.0).unwrap();
        // Standardized duplicate columns z = u/√2 with u = (−2..2); ‖z‖² = 5,
        // zᵀy = Σu·y/√2 = 19.6/√2. By symmetry both coefficients equal
        // b = zᵀy / (2‖z‖² + λ) = (19.6/√2) / 11.
        let b = 19.6 / 2f64.sqrt() / 11.0;
        assert!((r.scores[0] - b).abs() < 1e-12 && (r.scores[1] - b).abs() < 1e-12);
        assert!(r.ranks[0] <= 2 && r.ranks[1] <= 2);
    }

    #[test]
    fn rfe_two_features() {
        let (x, y) = planted(3, 30, 2, 0);
        let r = rfe_rank(&x, &y).unwrap();
        assert_eq!(r.ranks, vec![1, 2]);
    }

    #[test]
    fn rankings_equivariant_and_affine_invariant() {
        let (x, mut y) = planted(4, 60, 6, 2);
        let mut r = rng::stream(4, &[3]);
        for v in &mut y {
            *v += r.sample::<f64, _>(StandardNormal);
        }
        let perm = [5, 2, 0, 4, 1, 3];
        let xp = DMatrix::from_fn(60, 6, |i, j| x[(i, perm[j])]);
        let xs = DMatrix::from_fn(60, 6, |i, j| x[(i, j)] * (j as f64 + 0.5) - 7.0);
        for f in [
            |x: &DMatrix<f64>, y: &[f64]| ols_ranking(x, y).unwrap(),
            |x: &DMatrix<f64>, y: &[f64]| rfe_rank(x, y).unwrap(),
            |x: &DMatrix<f64>, y: &[f64]| ridge_ranking(x, y, 1.0).unwrap(),
            |x: &DMatrix<f64>, y: &[f64]| lasso_ranking(x, y, 9).unwrap(),
        ] {
            let base = f(&x, &y);
            let permuted = f(&xp, &y);
            for (j, &pj) in perm.iter().enumerate() {
                assert_eq!(permuted.ranks[j], base.ranks[pj]);
            }
            assert_eq!(f(&xs, &y).ranks, base.ranks);
        }
    }

    #[test]
    fn lasso_path_shape() {
        let (x, y) = planted(5, 50, 5, 4);
        let path = lasso_cv(&x, &y, 0).unwrap();
        assert_eq!(path.lambdas.len(), 50);
        assert!(path.lambdas.windows(2).all(|w| w[0] > w[1]));
        assert!((path.lambdas[49] / path.lambdas[0] - 1e-3).abs() < 1e-12);
        // At λ_max every coefficient is zero.
        let pr = prepare(&x, &y, "t").unwrap();
        let mut beta = vec![0.0; 5];
        lasso_cd(&pr.z, &pr.y, path.lambdas[0], &mut beta);
        assert!(beta.iter().all(|b| b.abs() < 1e-12));
    }
}
