//! Soft-margin kernel SVM trained by SMO on the dual problem.
//!
//! Working pairs are chosen by the maximal-violating-pair rule, so each step
//! strictly improves the dual objective. Training stops once the largest
//! KKT violation gap drops below [`KKT_TOL`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Linear,
    /// (γ·⟨u, v⟩ + 1)^degree
    Poly,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Linear => "linear",
            Kernel::Poly => "poly",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Kernel::Linear),
            "poly" => Ok(Kernel::Poly),
            _ => Err(Error::InvalidArgument(format!("unknown kernel {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// Ignored by the linear kernel.
    pub gamma: f64,
    pub kernel: Kernel,
    /// Ignored by the linear kernel.
    pub degree: u32,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: 1.0,
            kernel: Kernel::Linear,
            degree: 3,
            max_iter: 100_000,
        }
    }
}

impl SvmParams {
    pub const POLY_COEF0: f64 = 1.0;

    pub fn kernel_value(&self, u: &[f64], v: &[f64]) -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        match self.kernel {
            Kernel::Linear => dot,
            Kernel::Poly => (self.gamma * dot + Self::POLY_COEF0).powi(self.degree as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub params: SvmParams,
    /// Rows of the training points with α > 0.
    pub support_vectors: Vec<Vec<f64>>,
    /// α of each support vector, in [0, C].
    pub alphas: Vec<f64>,
    /// ±1 label of each support vector.
    pub labels: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    /// f(x) = Σ αᵢ yᵢ k(xᵢ, x) + b
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.bias
            + self
                .support_vectors
                .iter()
                .zip(self.alphas.iter().zip(&self.labels))
                .map(|(sv, (a, y))| a * y * self.params.kernel_value(sv, row))
                .sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<bool> {
        x.row_iter()
            .map(|r| {
                let row: Vec<f64> = r.iter().copied().collect();
                self.decision(&row) > 0.0
            })
            .collect()
    }
}

struct Smo<'a> {
    q: Vec<f64>,
    n: usize,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    /// Gradient of ½αᵀQα − eᵀα.
    grad: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn new(gram: &[f64], y: &'a [f64], c: f64) -> Self {
        let n = y.len();
        let q = (0..n * n)
            .map(|k| y[k / n] * y[k % n] * gram[k])
            .collect();
        Smo {
            q,
            n,
            y,
            c,
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
        }
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] < 0.0 && self.alpha[t] < self.c) || (self.y[t] > 0.0 && self.alpha[t] > 0.0)
    }

    /// Maximal violating pair and the current gap m(α) − M(α).
    fn select(&self) -> Option<(usize, usize, f64)> {
        let mut i = None;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = None;
        let mut g_min = f64::INFINITY;
        for t in 0..self.n {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > g_max {
                g_max = v;
                i = Some(t);
            }
            if self.in_low(t) && v < g_min {
                g_min = v;
                j = Some(t);
            }
        }
        Some((i?, j?, g_max - g_min))
    }

    /// Dual objective Σα − ½αᵀQα (to be maximized).
    fn dual_objective(&self) -> f64 {
        -0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    }

    /// One two-variable update, following the libsvm analytic solution.
    fn update(&mut self, i: usize, j: usize) {
        let n = self.n;
        let (qi, qj) = (i * n, j * n);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (old_ai, old_aj) = (self.alpha[i], self.alpha[j]);
        let c = self.c;
        if yi != yj {
            let quad = (self.q[qi + i] + self.q[qj + j] + 2.0 * self.q[qi + j]).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = old_ai - old_aj;
            let mut ai = old_ai + delta;
            let mut aj = old_aj + delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
            self.alpha[i] = ai;
            self.alpha[j] = aj;
        } else {
            let quad = (self.q[qi + i] + self.q[qj + j] - 2.0 * self.q[qi + j]).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = old_ai + old_aj;
            let mut ai = old_ai - delta;
            let mut aj = old_aj + delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
            self.alpha[i] = ai;
            self.alpha[j] = aj;
        }
        let (dai, daj) = (self.alpha[i] - old_ai, self.alpha[j] - old_aj);
        for t in 0..n {
            self.grad[t] += self.q[qi + t] * dai + self.q[qj + t] * daj;
        }
    }

    /// Bias b = −ρ: mean over free vectors of −yᵢ∇ᵢ, else the midpoint of
    /// the feasible interval.
    fn bias(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut n_free = 0usize;
        for t in 0..self.n {
            let yg = self.y[t] * self.grad[t];
            let a = self.alpha[t];
            if a >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if a <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum += yg;
            }
        }
        let rho = if n_free > 0 {
            sum / n_free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }
}

fn gram_matrix(x: &DMatrix<f64>, params: &SvmParams) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let n = rows.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = params.kernel_value(&rows[i], &rows[j]);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    (rows, gram)
}

fn validate(x: &DMatrix<f64>, y: &[bool], params: &SvmParams) -> Result<()> {
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "design has {} rows, labels {}",
            x.nrows(),
            y.len()
        )));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::DegenerateLabels("SVM needs both classes".into()));
    }
    if !(params.c > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", params.c)));
    }
    if params.kernel == Kernel::Poly && (params.degree == 0 || !(params.gamma > 0.0)) {
        return Err(Error::InvalidArgument(
            "poly kernel needs degree ≥ 1 and γ > 0".into(),
        ));
    }
    Ok(())
}

fn fit_impl(
    x: &DMatrix<f64>,
    y: &[bool],
    params: SvmParams,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<SvmModel> {
    validate(x, y, &params)?;
    let signs: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { -1.0 }).collect();
    let (rows, gram) = gram_matrix(x, &params);
    let mut smo = Smo::new(&gram, &signs, params.c);
    let mut iterations = 0;
    let mut converged = false;
    if let Some(t) = trace.as_deref_mut() {
        t.push(smo.dual_objective());
    }
    while iterations < params.max_iter {
        match smo.select() {
            Some((i, j, gap)) if gap >= KKT_TOL => {
                smo.update(i, j);
                iterations += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(smo.dual_objective());
                }
            }
            _ => {
                converged = true;
                break;
            }
        }
    }
    let bias = smo.bias();
    let mut model = SvmModel {
        params,
        support_vectors: Vec::new(),
        alphas: Vec::new(),
        labels: Vec::new(),
        bias,
        iterations,
        converged,
    };
    for (t, row) in rows.into_iter().enumerate() {
        if smo.alpha[t] > 0.0 {
            model.support_vectors.push(row);
            model.alphas.push(smo.alpha[t]);
            model.labels.push(signs[t]);
        }
    }
    Ok(model)
}

/// Fit on standardized features; `true` is the positive class.
pub fn svm_fit(x: &DMatrix<f64>, y: &[bool], params: SvmParams) -> Result<SvmModel> {
    fit_impl(x, y, params, None)
}

/// As [`svm_fit`], also returning the dual objective after every update
/// (first entry: α = 0).
pub fn svm_fit_traced(
    x: &DMatrix<f64>,
    y: &[bool],
    params: SvmParams,
) -> Result<(SvmModel, Vec<f64>)> {
    let mut trace = Vec::new();
    let model = fit_impl(x, y, params, Some(&mut trace))?;
    Ok((model, trace))
}
