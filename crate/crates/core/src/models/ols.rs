//! Ordinary least squares with an intercept and the usual inference table.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, least_squares, with_intercept};
use crate::statmath::{f_sf, t_two_sided_p, Dof};

/// Fitted multiple linear regression.
///
/// Index 0 of `std_errors`, `t_values` and `p_values` belongs to the
/// intercept; index `j + 1` to feature `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    /// Model F statistic and its p-value; `None` for the intercept-only model.
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
    pub mse: f64,
    pub mae: f64,
    pub residuals: Vec<f64>,
    pub n_obs: usize,
}

impl OlsFit {
    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    pub fn residual_dof(&self) -> usize {
        self.n_obs - self.n_features() - 1
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        x.row_iter()
            .map(|r| {
                self.intercept
                    + self
                        .coefficients
                        .iter()
                        .zip(r.iter())
                        .map(|(c, v)| c * v)
                        .sum::<f64>()
            })
            .collect()
    }

    /// p-value of feature `j`'s coefficient.
    pub fn feature_p(&self, j: usize) -> f64 {
        self.p_values[j + 1]
    }

    pub fn feature_t(&self, j: usize) -> f64 {
        self.t_values[j + 1]
    }
}

fn t_and_p(coef: f64, se: f64, dof: Dof) -> (f64, f64) {
    if se > 0.0 {
        let t = coef / se;
        (t, t_two_sided_p(t, dof))
    } else if coef == 0.0 {
        (0.0, 1.0)
    } else {
        (coef.signum() * f64::INFINITY, 0.0)
    }
}

/// Fit `y ≈ β0 + Xβ` by Householder QR.
pub fn ols_fit(x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "design has {n} rows but target has {} values",
            y.len()
        )));
    }
    if n <= p + 1 {
        return Err(Error::Underdetermined(format!(
            "n = {n} observations must exceed p + 1 = {} parameters",
            p + 1
        )));
    }
    let a = with_intercept(x);
    let yv = DVector::from_column_slice(y);
    let ls = least_squares(&a, &yv)?;
    let fitted = &a * &ls.coef;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let ybar = linalg::mean(y);
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let dof_resid = (n - p - 1) as f64;
    let sigma2 = sse / dof_resid;
    let dof = Dof::new(dof_resid)?;

    let mut std_errors = Vec::with_capacity(p + 1);
    let mut t_values = Vec::with_capacity(p + 1);
    let mut p_values = Vec::with_capacity(p + 1);
    for j in 0..=p {
        let se = (sigma2 * ls.gram_inv[(j, j)]).max(0.0).sqrt();
        let (t, pv) = t_and_p(ls.coef[j], se, dof);
        std_errors.push(se);
        t_values.push(t);
        p_values.push(pv);
    }

    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let (f_statistic, f_p_value) = if p == 0 {
        (None, None)
    } else if r_squared >= 1.0 || sse == 0.0 {
        (Some(f64::INFINITY), Some(0.0))
    } else {
        let f = (r_squared / p as f64) / ((1.0 - r_squared) / dof_resid);
        (Some(f), Some(f_sf(f, Dof::new(p as f64)?, dof)))
    };

    Ok(OlsFit {
        intercept: ls.coef[0],
        coefficients: ls.coef.iter().skip(1).copied().collect(),
        std_errors,
        t_values,
        p_values,
        r_squared,
        f_statistic,
        f_p_value,
        mse: sse / n as f64,
        mae: residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64,
        residuals,
        n_obs: n,
    })
}
