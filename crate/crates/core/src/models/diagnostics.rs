//! Regression assumption checks: residual normality (Jarque–Bera),
//! homoscedasticity (Breusch–Pagan, Koenker form) and multicollinearity (VIF).

use nalgebra::{DMatrix, DVector};

use super::ols::OlsFit;
use crate::error::{Error, Result};
use crate::linalg::{mean, r_squared, select_columns, with_intercept};
use crate::statmath::{chi2_sf, Dof};

/// 1 − R² at or below this is treated as perfect collinearity.
const VIF_OVERFLOW_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vif {
    /// `f64::INFINITY` when `overflow` is set.
    pub value: f64,
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub jarque_bera: f64,
    pub jarque_bera_p: f64,
    pub breusch_pagan: f64,
    pub breusch_pagan_p: f64,
    pub vif: Vec<Vif>,
}

/// Jarque–Bera statistic and its χ²(2) p-value.
pub fn jarque_bera(residuals: &[f64]) -> (f64, f64) {
    let n = residuals.len() as f64;
    let m = residuals.iter().sum::<f64>() / n;
    let m2 = residuals.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return (0.0, 1.0);
    }
    let m3 = residuals.iter().map(|r| (r - m).powi(3)).sum::<f64>() / n;
    let m4 = residuals.iter().map(|r| (r - m).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let jb = n / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    (jb, chi2_sf(jb, Dof(2.0)))
}

/// n·R² of the regression of squared residuals on `x`, with a χ²(p) p-value.
pub fn breusch_pagan(residuals: &[f64], x: &DMatrix<f64>) -> Result<(f64, f64)> {
    let p = x.ncols();
    if p == 0 {
        return Ok((0.0, 1.0));
    }
    let sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
    let r2 = r_squared(x, &sq).map_err(|e| e.context("Breusch-Pagan auxiliary regression"))?;
    let stat = (residuals.len() as f64 * r2).max(0.0);
    Ok((stat, chi2_sf(stat, Dof(p as f64))))
}

/// Variance inflation factor of every column.
pub fn vif(x: &DMatrix<f64>) -> Result<Vec<Vif>> {
    let p = x.ncols();
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        if p == 1 {
            out.push(Vif {
                value: 1.0,
                overflow: false,
            });
            continue;
        }
        let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        let target: Vec<f64> = x.column(j).iter().copied().collect();
        let r2 = projection_r_squared(&select_columns(x, &others), &target)
            .map_err(|e| e.context(format!("VIF of column {j}")))?;
        let entry = if 1.0 - r2 > VIF_OVERFLOW_TOL {
            Vif {
                value: (1.0 / (1.0 - r2)).max(1.0),
                overflow: false,
            }
        } else {
            Vif {
                value: f64::INFINITY,
                overflow: true,
            }
        };
        out.push(entry);
    }
    Ok(out)
}

/// R² of regressing `y` on an intercept plus `x`, using the minimum-norm
/// least-squares solution so collinear regressors are harmless.
fn projection_r_squared(x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    let a = with_intercept(x);
    let yv = DVector::from_column_slice(y);
    let fitted = &a * a.clone().svd(true, true).solve(&yv, 1e-12).map_err(|e| Error::SingularDesign(e.into()))?;
    let m = mean(y);
    let sse: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    Ok(if sst == 0.0 { 1.0 } else { 1.0 - sse / sst })
}

pub fn check_assumptions(fit: &OlsFit, x: &DMatrix<f64>) -> Result<AssumptionReport> {
    if x.nrows() != fit.residuals.len() || x.ncols() != fit.n_features() {
        return Err(Error::InvalidArgument(
            "design matrix does not match the fitted model".into(),
        ));
    }
    let (jarque_bera, jarque_bera_p) = jarque_bera(&fit.residuals);
    let (breusch_pagan, breusch_pagan_p) = breusch_pagan(&fit.residuals, x)?;
    Ok(AssumptionReport {
        jarque_bera,
        jarque_bera_p,
        breusch_pagan,
        breusch_pagan_p,
        vif: vif(x)?,
    })
}
