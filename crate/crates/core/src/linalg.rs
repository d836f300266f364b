//! Dense helpers shared by the regression code: column standardization and
//! QR least squares with a rank check.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on |R_jj| / ‖A_j‖ below which a design column counts
/// as linearly dependent on the previous ones.
pub const RANK_TOL: f64 = 1e-10;

/// Build an n×p matrix from rows.
pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, p, |i, j| rows[i][j])
}

pub fn select_rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut sds = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            means.push(m);
            sds.push(var.sqrt());
        }
        Standardizer { means, sds }
    }

    /// A column whose spread is negligible relative to its level.
    pub fn is_constant(&self, j: usize) -> bool {
        self.sds[j] <= 1e-12 * (1.0 + self.means[j].abs())
    }

    /// Centers and scales; constant columns map to zero.
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            if self.is_constant(j) {
                0.0
            } else {
                (x[(i, j)] - self.means[j]) / self.sds[j]
            }
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.is_constant(j) {
                    0.0
                } else {
                    (v - self.means[j]) / self.sds[j]
                }
            })
            .collect()
    }
}

/// Least-squares solution of `a · β ≈ y` with the inverse Gram matrix.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: DVector<f64>,
    /// (AᵀA)⁻¹
    pub gram_inv: DMatrix<f64>,
}

/// Solve by Householder QR. Fails with `SingularDesign` when a column is
/// (numerically) a combination of earlier ones.
pub fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::Underdetermined(format!(
            "{n} observations for {p} unknowns"
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let col_norm = a.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(Error::SingularDesign(format!(
                "design column {j} is linearly dependent on the others"
            )));
        }
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularDesign("triangular inverse failed".into()))?;
    let gram_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares { coef, gram_inv })
}

/// Prepend a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] })
}

/// R² of an intercept-plus-`x` regression of `y`, or `None` when the fit is
/// singular.
pub fn r_squared(x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    let yv = DVector::from_column_slice(y);
    let a = with_intercept(x);
    let ls = least_squares(&a, &yv)?;
    let fitted = &a * &ls.coef;
    let m = mean(y);
    let sse: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    Ok(if sst == 0.0 { 0.0 } else { 1.0 - sse / sst })
}
