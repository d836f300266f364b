//! Exhaustive grid search scored by cross-validated F1.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{
    ClassifierParams, Family, Kernel, LogisticParams, MaxFeatures, SplitCriterion,
    StandardizedClassifier, SvmParams, TreeParams,
};
use crate::error::{Error, Result};
use crate::eval::folds::{make_folds, CvScheme};
use crate::eval::metrics::classification_report;
use crate::exec::Execution;
use crate::linalg::select_rows;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticGrid {
    pub c: Vec<f64>,
    pub dual: Vec<bool>,
    pub max_iter: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub kernel: Vec<Kernel>,
    pub degree: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeGrid {
    pub max_features: Vec<MaxFeatures>,
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub criterion: Vec<SplitCriterion>,
}

/// Candidate values per family. Cells are enumerated row-major in the
/// order the parameters are listed here.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub logistic: LogisticGrid,
    pub svm: SvmGrid,
    pub tree: TreeGrid,
}

impl GridSpec {
    /// The default tuning grid: 40 logistic, 120 SVM and 1260 tree cells.
    pub fn standard() -> Self {
        GridSpec {
            logistic: LogisticGrid {
                c: vec![1.0, 1.5, 2.0, 2.5],
                dual: vec![true, false],
                max_iter: vec![100, 110, 120, 130, 140],
            },
            svm: SvmGrid {
                c: vec![0.001, 0.01, 0.1],
                gamma: vec![0.001, 0.01, 0.1, 1.0],
                kernel: vec![Kernel::Linear, Kernel::Poly],
                degree: vec![1, 2, 3, 4, 5],
            },
            tree: TreeGrid {
                max_features: vec![MaxFeatures::Auto, MaxFeatures::Sqrt, MaxFeatures::Log2],
                min_samples_leaf: (1..=15).collect(),
                min_samples_split: (2..=15).collect(),
                criterion: vec![SplitCriterion::Entropy, SplitCriterion::Gini],
            },
        }
    }

    /// A grid holding exactly one cell for each family.
    pub fn single(logistic: LogisticParams, svm: SvmParams, tree: TreeParams) -> Self {
        GridSpec {
            logistic: LogisticGrid {
                c: vec![logistic.c],
                dual: vec![logistic.dual],
                max_iter: vec![logistic.max_iter],
            },
            svm: SvmGrid {
                c: vec![svm.c],
                gamma: vec![svm.gamma],
                kernel: vec![svm.kernel],
                degree: vec![svm.degree],
            },
            tree: TreeGrid {
                max_features: vec![tree.max_features],
                min_samples_leaf: vec![tree.min_samples_leaf],
                min_samples_split: vec![tree.min_samples_split],
                criterion: vec![tree.criterion],
            },
        }
    }

    pub fn cells(&self, family: Family) -> Vec<ClassifierParams> {
        let mut out = Vec::new();
        match family {
            Family::Logistic => {
                let g = &self.logistic;
                for &c in &g.c {
                    for &dual in &g.dual {
                        for &max_iter in &g.max_iter {
                            out.push(ClassifierParams::Logistic(LogisticParams { c, dual, max_iter }));
                        }
                    }
                }
            }
            Family::Svm => {
                let g = &self.svm;
                for &c in &g.c {
                    for &gamma in &g.gamma {
                        for &kernel in &g.kernel {
                            for &degree in &g.degree {
                                out.push(ClassifierParams::Svm(SvmParams {
                                    c,
                                    gamma,
                                    kernel,
                                    degree,
                                    ..SvmParams::default()
                                }));
                            }
                        }
                    }
                }
            }
            Family::Tree => {
                let g = &self.tree;
                for &max_features in &g.max_features {
                    for &min_samples_leaf in &g.min_samples_leaf {
                        for &min_samples_split in &g.min_samples_split {
                            for &criterion in &g.criterion {
                                out.push(ClassifierParams::Tree(TreeParams {
                                    criterion,
                                    min_samples_leaf,
                                    min_samples_split,
                                    max_features,
                                }));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub params: ClassifierParams,
    /// Cross-validated F1, or the failure that prevented scoring.
    pub score: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<CellResult>,
    pub best: ClassifierParams,
    pub best_score: f64,
}

/// Cell identity for memoization: trains identical models.
fn cache_key(params: &ClassifierParams) -> String {
    let eff = match params.effective() {
        ClassifierParams::Tree(p) if p.min_samples_split <= 2 * p.min_samples_leaf.max(1) => {
            ClassifierParams::Tree(TreeParams { min_samples_split: 2, ..p })
        }
        other => other,
    };
    format!("{eff:?}")
}

/// Pooled out-of-fold F1 of one hyperparameter setting. Folds whose training
/// part holds a single class are skipped.
pub(crate) fn cv_score(
    params: &ClassifierParams,
    x: &DMatrix<f64>,
    y: &[usize],
    n_classes: usize,
    cv: CvScheme,
    seed: u64,
) -> Result<f64> {
    let folds = make_folds(y.len(), cv)?;
    let mut truth = Vec::with_capacity(y.len());
    let mut pred = Vec::with_capacity(y.len());
    for (k, fold) in folds.iter().enumerate() {
        let y_train: Vec<usize> = fold.train.iter().map(|&i| y[i]).collect();
        if y_train.iter().all(|&c| c == y_train[0]) {
            continue;
        }
        let model = StandardizedClassifier::fit(
            *params,
            &select_rows(x, &fold.train),
            &y_train,
            n_classes,
            rng::derive_seed(seed, &[k as u64]),
        )?;
        pred.extend(model.predict(&select_rows(x, &fold.test)));
        truth.extend(fold.test.iter().map(|&i| y[i]));
    }
    if truth.is_empty() {
        return Err(Error::DegenerateLabels(
            "every fold had a single training class".into(),
        ));
    }
    Ok(classification_report(&truth, &pred, n_classes)?.f1)
}

/// Score every cell of `family`'s grid by cross-validated F1 and return the
/// best; ties go to the earliest cell. Failing cells are recorded, not fatal.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    family: Family,
    grid: &GridSpec,
    x: &DMatrix<f64>,
    y: &[usize],
    n_classes: usize,
    cv: CvScheme,
    seed: u64,
    exec: Execution,
) -> Result<GridResult> {
    let cells = grid.cells(family);
    if cells.is_empty() {
        return Err(Error::InvalidArgument(format!("empty {family} grid")));
    }
    let mut distinct: Vec<ClassifierParams> = Vec::new();
    let mut slot_of: HashMap<String, usize> = HashMap::new();
    let slots: Vec<usize> = cells
        .iter()
        .map(|p| {
            *slot_of.entry(cache_key(p)).or_insert_with(|| {
                distinct.push(*p);
                distinct.len() - 1
            })
        })
        .collect();
    let scores = exec.map(&distinct, |p| {
        cv_score(p, x, y, n_classes, cv, seed).map_err(|e| e.to_string())
    });
    let cells: Vec<CellResult> = cells
        .into_iter()
        .zip(slots)
        .map(|(params, s)| CellResult {
            params,
            score: scores[s].clone(),
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cells.iter().enumerate() {
        if let Ok(s) = c.score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (i, best_score) = best.ok_or_else(|| {
        let reason = cells[0].score.clone().err().unwrap_or_default();
        Error::DegenerateLabels(format!("every {family} grid cell failed (first: {reason})"))
    })?;
    Ok(GridResult {
        best: cells[i].params,
        best_score,
        cells,
    })
}
