//! Model families: OLS regression with diagnostics, logistic regression,
//! kernel SVM and CART decision trees, plus the grid search over their
//! hyperparameters and a text serialization for fitted models.

pub mod diagnostics;
pub mod grid;
pub mod logistic;
pub mod ols;
pub mod persist;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

pub use diagnostics::{check_assumptions, AssumptionReport, Vif};
pub use grid::{grid_search, CellResult, GridResult, GridSpec};
pub use logistic::{logistic_fit, LogisticModel, LogisticParams};
pub use ols::{ols_fit, OlsFit};
pub use svm::{svm_fit, svm_fit_traced, Kernel, SvmModel, SvmParams};
pub use tree::{tree_fit, MaxFeatures, SplitCriterion, TreeModel, TreeParams};

use crate::error::{Error, Result};
use crate::linalg::Standardizer;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Logistic,
    Svm,
    Tree,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Logistic, Family::Svm, Family::Tree];

    /// Short name used in reports.
    pub fn abbrev(self) -> &'static str {
        match self {
            Family::Logistic => "LR",
            Family::Svm => "SVM",
            Family::Tree => "DT",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(Family::Logistic),
            "svm" => Ok(Family::Svm),
            "dt" | "tree" => Ok(Family::Tree),
            _ => Err(Error::InvalidArgument(format!("unknown model family {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierParams {
    Logistic(LogisticParams),
    Svm(SvmParams),
    Tree(TreeParams),
}

impl ClassifierParams {
    pub fn family(&self) -> Family {
        match self {
            ClassifierParams::Logistic(_) => Family::Logistic,
            ClassifierParams::Svm(_) => Family::Svm,
            ClassifierParams::Tree(_) => Family::Tree,
        }
    }

    /// Parameters with behaviourally inert fields normalized, so cells that
    /// must train identical models compare equal.
    pub(crate) fn effective(&self) -> ClassifierParams {
        match *self {
            ClassifierParams::Logistic(p) => ClassifierParams::Logistic(LogisticParams { dual: false, ..p }),
            ClassifierParams::Svm(p) if p.kernel == Kernel::Linear => {
                ClassifierParams::Svm(SvmParams { gamma: 1.0, degree: 1, ..p })
            }
            other => other,
        }
    }
}

impl fmt::Display for ClassifierParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierParams::Logistic(p) => {
                write!(f, "C={} dual={} max_iter={}", p.c, p.dual, p.max_iter)
            }
            ClassifierParams::Svm(p) => write!(
                f,
                "C={} gamma={} kernel={} degree={}",
                p.c, p.gamma, p.kernel, p.degree
            ),
            ClassifierParams::Tree(p) => write!(
                f,
                "max_features={} min_samples_leaf={} min_samples_split={} criterion={}",
                p.max_features, p.min_samples_leaf, p.min_samples_split, p.criterion
            ),
        }
    }
}

/// One binary (one-vs-rest) model.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryModel {
    Logistic(LogisticModel),
    Svm(SvmModel),
    Tree(TreeModel),
}

impl BinaryModel {
    /// Score for the positive class; positive means "predict positive".
    pub fn decision(&self, row: &[f64]) -> f64 {
        match self {
            BinaryModel::Logistic(m) => m.decision(row),
            BinaryModel::Svm(m) => m.decision(row),
            BinaryModel::Tree(m) => m.class_fraction(row, 1) - 0.5,
        }
    }
}

fn fit_binary(
    params: &ClassifierParams,
    x: &DMatrix<f64>,
    positive: &[bool],
    seed: u64,
) -> Result<BinaryModel> {
    Ok(match *params {
        ClassifierParams::Logistic(p) => BinaryModel::Logistic(logistic_fit(x, positive, p)?),
        ClassifierParams::Svm(p) => BinaryModel::Svm(svm_fit(x, positive, p)?),
        ClassifierParams::Tree(p) => {
            let y: Vec<usize> = positive.iter().map(|&b| usize::from(b)).collect();
            if y.iter().all(|&c| c == y[0]) {
                return Err(Error::DegenerateLabels("decision tree needs both classes".into()));
            }
            let mut r = rng::stream(seed, &[rng::tag::TREE]);
            BinaryModel::Tree(tree_fit(x, &y, 2, p, &mut r)?)
        }
    })
}

/// A binary or one-vs-rest multiclass classifier over labels `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub params: ClassifierParams,
    pub n_classes: usize,
    /// Binary: one model for class 1 versus 0. Multiclass: one model per
    /// class, `None` where the class was absent from training.
    pub models: Vec<Option<BinaryModel>>,
}

impl Classifier {
    pub fn fit(
        params: ClassifierParams,
        x: &DMatrix<f64>,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Classifier> {
        if n_classes < 2 {
            return Err(Error::InvalidArgument("need at least two classes".into()));
        }
        if y.len() != x.nrows() {
            return Err(Error::InvalidArgument(format!(
                "design has {} rows, labels {}",
                x.nrows(),
                y.len()
            )));
        }
        let present = (0..n_classes).filter(|c| y.contains(c)).count();
        if present < 2 {
            return Err(Error::DegenerateLabels(
                "training labels contain a single class".into(),
            ));
        }
        let models = if n_classes == 2 {
            let positive: Vec<bool> = y.iter().map(|&c| c == 1).collect();
            vec![Some(fit_binary(&params, x, &positive, seed)?)]
        } else {
            (0..n_classes)
                .map(|c| {
                    if !y.contains(&c) {
                        return Ok(None);
                    }
                    let positive: Vec<bool> = y.iter().map(|&l| l == c).collect();
                    fit_binary(&params, x, &positive, rng::derive_seed(seed, &[c as u64]))
                        .map(Some)
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Classifier {
            params,
            n_classes,
            models,
        })
    }

    /// Binary: class 1 iff the decision is positive. Multiclass: highest
    /// one-vs-rest score, ties to the lowest class.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        if self.n_classes == 2 {
            let m = self.models[0].as_ref().expect("binary model present");
            return usize::from(m.decision(row) > 0.0);
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, m) in self.models.iter().enumerate() {
            let s = m.as_ref().map_or(f64::NEG_INFINITY, |m| m.decision(row));
            if s > best_score {
                best = c;
                best_score = s;
            }
        }
        best
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        x.row_iter()
            .map(|r| {
                let row: Vec<f64> = r.iter().copied().collect();
                self.predict_row(&row)
            })
            .collect()
    }
}

/// A classifier bundled with the standardization fitted on its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedClassifier {
    pub standardizer: Standardizer,
    pub classifier: Classifier,
}

impl StandardizedClassifier {
    pub fn fit(
        params: ClassifierParams,
        x: &DMatrix<f64>,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        let standardizer = Standardizer::fit(x);
        let z = standardizer.transform(x);
        let classifier = Classifier::fit(params, &z, y, n_classes, seed)?;
        Ok(StandardizedClassifier {
            standardizer,
            classifier,
        })
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        self.classifier.predict(&self.standardizer.transform(x))
    }
}
