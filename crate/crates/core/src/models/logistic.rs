//! L2-penalized logistic regression fitted by full-batch gradient descent
//! with a backtracking (Armijo) line search.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const GRADIENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iter: usize,
    /// Solver flag kept for grid fidelity; the primal solver is always used.
    pub dual: bool,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            c: 1.0,
            max_iter: 100,
            dual: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub params: LogisticParams,
    pub iterations: usize,
    pub converged: bool,
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Penalized negative log-likelihood and its gradient.
///
/// `params` is `[w_0, …, w_{p−1}, b]`, `signs` holds ±1 labels. The
/// objective is Σ ln(1 + exp(−yᵢ(w·xᵢ + b))) + ‖w‖² / (2C); the intercept
/// is not penalized.
pub fn objective_and_gradient(
    params: &[f64],
    x: &DMatrix<f64>,
    signs: &[f64],
    c: f64,
) -> (f64, Vec<f64>) {
    let p = x.ncols();
    let (w, b) = (&params[..p], params[p]);
    let mut loss = w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c);
    let mut grad: Vec<f64> = w.iter().map(|v| v / c).chain([0.0]).collect();
    for (i, &y) in signs.iter().enumerate() {
        let row = x.row(i);
        let f = b + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        let margin = y * f;
        loss += log1p_exp(-margin);
        let coef = -y * sigmoid(-margin);
        for (g, xv) in grad[..p].iter_mut().zip(row.iter()) {
            *g += coef * xv;
        }
        grad[p] += coef;
    }
    (loss, grad)
}

fn to_signs(y: &[bool]) -> Vec<f64> {
    y.iter().map(|&v| if v { 1.0 } else { -1.0 }).collect()
}

/// Fit on standardized features with boolean labels (`true` = positive).
pub fn logistic_fit(x: &DMatrix<f64>, y: &[bool], params: LogisticParams) -> Result<LogisticModel> {
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "design has {} rows, labels {}",
            x.nrows(),
            y.len()
        )));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::DegenerateLabels(
            "logistic regression needs both classes".into(),
        ));
    }
    if !(params.c > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", params.c)));
    }
    if params.dual {
        log::debug!("logistic: dual=true is recorded but the primal solver is used");
    }
    let signs = to_signs(y);
    let dim = x.ncols() + 1;
    let mut theta = vec![0.0; dim];
    let (mut loss, mut grad) = objective_and_gradient(&theta, x, &signs, params.c);
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < GRADIENT_TOL {
            converged = true;
            break;
        }
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        let mut t = (step * 2.0).min(1e6);
        let (next, next_loss, next_grad) = loop {
            let cand: Vec<f64> = theta.iter().zip(&grad).map(|(a, g)| a - t * g).collect();
            let (l, g) = objective_and_gradient(&cand, x, &signs, params.c);
            if l <= loss - 0.5 * t * gnorm2 || t < 1e-20 {
                break (cand, l, g);
            }
            t *= 0.5;
        };
        step = t;
        theta = next;
        loss = next_loss;
        grad = next_grad;
        iterations += 1;
    }
    if !converged {
        converged = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < GRADIENT_TOL;
    }
    let intercept = theta.pop().unwrap_or(0.0);
    Ok(LogisticModel {
        weights: theta,
        intercept,
        params,
        iterations,
        converged,
    })
}

impl LogisticModel {
    /// Log-odds of the positive class.
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }

    /// Predicted labels and positive-class probabilities.
    pub fn predict(&self, x: &DMatrix<f64>) -> (Vec<bool>, Vec<f64>) {
        x.row_iter()
            .map(|r| {
                let row: Vec<f64> = r.iter().copied().collect();
                let p = self.probability(&row);
                (p > 0.5, p)
            })
            .unzip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;
    use crate::rng::stream;
    use rand::Rng;

    fn toy() -> (DMatrix<f64>, Vec<bool>) {
        (
            from_rows(&[
                vec![-1.0, -0.5],
                vec![-0.8, -1.2],
                vec![1.1, 0.7],
                vec![0.9, 1.3],
            ]),
            vec![false, false, true, true],
        )
    }

    #[test]
    fn separable_toy_training_accuracy() {
        let (x, y) = toy();
        let m = logistic_fit(&x, &y, LogisticParams::default()).unwrap();
        assert_eq!(m.predict(&x).0, y);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = stream(42, &[1]);
        let x = DMatrix::from_fn(20, 3, |_, _| rng.random_range(-2.0..2.0));
        let signs: Vec<f64> = (0..20).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let h = 1e-5;
        for _ in 0..10 {
            let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
            let (_, grad) = objective_and_gradient(&theta, &x, &signs, 1.5);
            for k in 0..4 {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[k] += h;
                dn[k] -= h;
                let fd = (objective_and_gradient(&up, &x, &signs, 1.5).0
                    - objective_and_gradient(&dn, &x, &signs, 1.5).0)
                    / (2.0 * h);
                let rel = (fd - grad[k]).abs() / grad[k].abs().max(1e-8);
                assert!(rel <= 1e-5, "k={k}: fd {fd} analytic {}", grad[k]);
            }
        }
    }

    #[test]
    fn swapped_labels_negate_weights() {
        let mut rng = stream(5, &[2]);
        let x = DMatrix::from_fn(30, 2, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<bool> = (0..30).map(|i| x[(i, 0)] + 0.3 * x[(i, 1)] > 0.1).collect();
        let flipped: Vec<bool> = y.iter().map(|v| !v).collect();
        let params = LogisticParams { c: 2.0, max_iter: 130, dual: false };
        let a = logistic_fit(&x, &y, params).unwrap();
        let b = logistic_fit(&x, &flipped, params).unwrap();
        for (p, q) in a.weights.iter().zip(&b.weights) {
            assert!((p + q).abs() < 1e-8);
        }
        assert!((a.intercept + b.intercept).abs() < 1e-8);
    }

    #[test]
    fn loss_nonincreasing_and_converges() {
        let (x, y) = toy();
        let signs = to_signs(&y);
        let mut prev = f64::INFINITY;
        for iters in 0..40 {
            let m = logistic_fit(&x, &y, LogisticParams { c: 1.0, max_iter: iters, dual: false }).unwrap();
            let theta: Vec<f64> = m.weights.iter().copied().chain([m.intercept]).collect();
            let loss = objective_and_gradient(&theta, &x, &signs, 1.0).0;
            assert!(loss <= prev + 1e-12);
            prev = loss;
        }
        let m = logistic_fit(&x, &y, LogisticParams { c: 1.0, max_iter: 10_000, dual: false }).unwrap();
        assert!(m.converged);
    }

    #[test]
    fn unregularized_labels_invariant_to_standardization() {
        let (x, y) = toy();
        let scaled = DMatrix::from_fn(4, 2, |i, j| x[(i, j)] * [3.0, 0.2][j] + [10.0, -4.0][j]);
        let params = LogisticParams { c: 1e6, max_iter: 2000, dual: false };
        let a = logistic_fit(&x, &y, params).unwrap().predict(&x).0;
        let b = logistic_fit(&scaled, &y, params).unwrap().predict(&scaled).0;
        assert_eq!(a, b);
        assert_eq!(a, y);
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = toy();
        let err = logistic_fit(&x, &[true; 4], LogisticParams::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateLabels(_)));
    }
}
