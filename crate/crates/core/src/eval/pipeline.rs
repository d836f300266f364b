//! Per-segment evaluation: cross-validated classification with optional
//! nested grid search, and cross-validated OLS regression.

use nalgebra::DMatrix;

use super::folds::{make_folds, CvScheme, Fold};
use super::metrics::{classification_report, regression_metrics, ClassificationMetrics};
use super::LabelScheme;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::featsel::{aggregate_rankings, rank_all};
use crate::linalg::{select_columns, select_rows};
use crate::models::grid::{grid_search, GridSpec};
use crate::models::{ols_fit, ClassifierParams, OlsFit, StandardizedClassifier};
use crate::rng;
use crate::signal::SegmentLabel;
use crate::spectral::SubjectRecord;
use crate::table::design;

pub const INNER_FOLDS: usize = 5;
pub const MIN_SUBJECTS: usize = 8;

/// Which features enter the models.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionMode {
    /// A fixed column set, e.g. all fifteen or a selection chosen up front.
    Fixed(Vec<usize>),
    /// Re-run the ranking ensemble on each training fold and keep its top k.
    WithinFolds { k: usize },
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub cv: CvScheme,
    pub selection: SelectionMode,
    /// Searched on each training fold (or once, with `grid_global`).
    pub grid: Option<GridSpec>,
    /// Search the grid once on the whole cohort instead of per fold.
    pub grid_global: bool,
    pub seed: u64,
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationRun {
    pub segment: SegmentLabel,
    pub metrics: ClassificationMetrics,
    /// Pooled out-of-fold labels and predictions in subject order.
    pub truth: Vec<usize>,
    pub predicted: Vec<usize>,
    /// Folds skipped because training held a single class.
    pub skipped_folds: Vec<usize>,
    /// Hyperparameters used in each evaluated fold.
    pub fold_params: Vec<ClassifierParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRun {
    pub segment: SegmentLabel,
    pub mse: f64,
    pub mae: f64,
    /// Overall F-test p-value of the full-cohort fit.
    pub p: f64,
    pub features: Vec<usize>,
    pub fit: OlsFit,
}

fn check_cohort(subjects: &[SubjectRecord]) -> Result<()> {
    if subjects.len() < MIN_SUBJECTS {
        return Err(Error::InsufficientCohort(format!(
            "evaluation needs at least {MIN_SUBJECTS} subjects, got {}",
            subjects.len()
        )));
    }
    Ok(())
}

impl Pipeline {
    fn fold_features(&self, x: &DMatrix<f64>, scores: &[f64], train: &[usize], fold: usize) -> Result<Vec<usize>> {
        match &self.selection {
            SelectionMode::Fixed(cols) => Ok(cols.clone()),
            SelectionMode::WithinFolds { k } => {
                let y: Vec<f64> = train.iter().map(|&i| scores[i]).collect();
                let seed = rng::derive_seed(self.seed, &[fold as u64]);
                let rankings = rank_all(&select_rows(x, train), &y, seed, self.exec)?;
                Ok(aggregate_rankings(&rankings, *k)?.selected)
            }
        }
    }

    fn validate_selection(&self, p: usize) -> Result<()> {
        let bad = match &self.selection {
            SelectionMode::Fixed(cols) => cols.is_empty() || cols.iter().any(|&c| c >= p),
            SelectionMode::WithinFolds { k } => *k == 0 || *k > p,
        };
        if bad {
            return Err(Error::InvalidArgument(format!("invalid feature selection {:?}", self.selection)));
        }
        Ok(())
    }
}

/// Cross-validated classification of one segment. Labels are derived from
/// the whole cohort's scores; every fold standardizes on its training part.
pub fn classify_segment(
    pipeline: &Pipeline,
    subjects: &[SubjectRecord],
    segment: SegmentLabel,
    labels: LabelScheme,
    params: ClassifierParams,
) -> Result<ClassificationRun> {
    check_cohort(subjects)?;
    let n_classes = labels
        .n_classes()
        .ok_or_else(|| Error::InvalidArgument("classification needs a discrete label scheme".into()))?;
    let all: Vec<usize> = (0..crate::spectral::N_FEATURES).collect();
    let (x, scores) = design(subjects, segment, &all);
    pipeline.validate_selection(x.ncols())?;
    let y = labels.labels(&scores)?;
    let family = params.family();
    let inner = |seed_key: u64| CvScheme::KFold {
        k: INNER_FOLDS,
        seed: rng::derive_seed(pipeline.seed, &[rng::tag::INNER_CV, seed_key]),
    };
    let global = match (&pipeline.grid, pipeline.grid_global) {
        (Some(grid), true) => {
            let SelectionMode::Fixed(cols) = &pipeline.selection else {
                return Err(Error::InvalidArgument(
                    "a global grid search needs a fixed feature set".into(),
                ));
            };
            let xs = select_columns(&x, cols);
            Some(grid_search(family, grid, &xs, &y, n_classes, inner(u64::MAX), pipeline.seed, pipeline.exec)?.best)
        }
        _ => None,
    };
    let folds = make_folds(subjects.len(), pipeline.cv)?;
    let outcomes = pipeline.exec.try_map_range(folds.len(), |f| -> Result<Option<(ClassifierParams, Vec<usize>)>> {
        let Fold { train, test } = &folds[f];
        let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        if y_train.iter().all(|&c| c == y_train[0]) {
            return Ok(None);
        }
        let cols = pipeline.fold_features(&x, &scores, train, f)?;
        let xs = select_columns(&x, &cols);
        let x_train = select_rows(&xs, train);
        let chosen = match (&pipeline.grid, global) {
            (_, Some(p)) => p,
            (Some(grid), None) => {
                grid_search(family, grid, &x_train, &y_train, n_classes, inner(f as u64), pipeline.seed, Execution::Sequential)?.best
            }
            (None, None) => params,
        };
        let model = StandardizedClassifier::fit(
            chosen,
            &x_train,
            &y_train,
            n_classes,
            rng::derive_seed(pipeline.seed, &[f as u64]),
        )?;
        Ok(Some((chosen, model.predict(&select_rows(&xs, test)))))
    })?;
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    let mut skipped = Vec::new();
    let mut fold_params = Vec::new();
    let mut pred_of = vec![None; subjects.len()];
    for (f, out) in outcomes.into_iter().enumerate() {
        match out {
            None => {
                log::warn!("{segment}: fold {f} skipped, training labels hold a single class");
                skipped.push(f);
            }
            Some((p, pred)) => {
                fold_params.push(p);
                for (&i, c) in folds[f].test.iter().zip(pred) {
                    pred_of[i] = Some(c);
                }
            }
        }
    }
    for (i, p) in pred_of.into_iter().enumerate() {
        if let Some(c) = p {
            truth.push(y[i]);
            predicted.push(c);
        }
    }
    if truth.is_empty() {
        return Err(Error::DegenerateLabels(format!("{segment}: every fold was skipped")));
    }
    Ok(ClassificationRun {
        segment,
        metrics: classification_report(&truth, &predicted, n_classes)?,
        truth,
        predicted,
        skipped_folds: skipped,
        fold_params,
    })
}

/// Cross-validated OLS on one segment: pooled out-of-fold MSE and MAE, and
/// the full-cohort fit for its F-test p-value and coefficient table.
pub fn regress_segment(pipeline: &Pipeline, subjects: &[SubjectRecord], segment: SegmentLabel) -> Result<RegressionRun> {
    check_cohort(subjects)?;
    let all: Vec<usize> = (0..crate::spectral::N_FEATURES).collect();
    let (x, scores) = design(subjects, segment, &all);
    pipeline.validate_selection(x.ncols())?;
    let folds = make_folds(subjects.len(), pipeline.cv)?;
    let per_fold = pipeline.exec.try_map_range(folds.len(), |f| -> Result<Vec<f64>> {
        let Fold { train, test } = &folds[f];
        let cols = pipeline.fold_features(&x, &scores, train, f)?;
        let xs = select_columns(&x, &cols);
        let y_train: Vec<f64> = train.iter().map(|&i| scores[i]).collect();
        let fit = ols_fit(&select_rows(&xs, train), &y_train)
            .map_err(|e| e.context(format!("{segment} fold {f}")))?;
        Ok(fit.predict(&select_rows(&xs, test)))
    })?;
    let mut pred = vec![0.0; subjects.len()];
    for (fold, p) in folds.iter().zip(per_fold) {
        for (&i, v) in fold.test.iter().zip(p) {
            pred[i] = v;
        }
    }
    let (mse, mae) = regression_metrics(&scores, &pred)?;
    let features = match &pipeline.selection {
        SelectionMode::Fixed(cols) => cols.clone(),
        SelectionMode::WithinFolds { k } => {
            let rankings = rank_all(&x, &scores, pipeline.seed, pipeline.exec)?;
            aggregate_rankings(&rankings, *k)?.selected
        }
    };
    let fit = ols_fit(&select_columns(&x, &features), &scores).map_err(|e| e.context(segment.to_string()))?;
    Ok(RegressionRun {
        segment,
        mse,
        mae,
        p: fit.f_p_value.unwrap_or(1.0),
        features,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogisticParams, TreeParams};
    use crate::spectral::AsymmetryFeatureVector;

    fn clutter(i: usize, j: usize) -> f64 {
        use rand::Rng;
        rng::stream(77, &[i as u64, j as u64]).random_range(-0.5..0.5)
    }

    /// Feature 2 tracks the score; the rest are seeded clutter.
    fn cohort(n: usize) -> Vec<SubjectRecord> {
        (0..n)
            .map(|i| {
                let score = 49 + ((i * 17) % 38) as u32;
                let v = AsymmetryFeatureVector(std::array::from_fn(|j| {
                    if j == 2 {
                        (f64::from(score) - 67.5) / 37.0
                    } else {
                        clutter(i, j)
                    }
                }));
                SubjectRecord::new(format!("s{i}"), score, [v; 3]).unwrap()
            })
            .collect()
    }

    fn pipeline(selection: SelectionMode) -> Pipeline {
        Pipeline {
            cv: CvScheme::KFold { k: 5, seed: 1 },
            selection,
            grid: None,
            grid_global: false,
            seed: 3,
            exec: Execution::Sequential,
        }
    }

    #[test]
    fn classification_recovers_planted_feature() {
        let subjects = cohort(40);
        let lr = ClassifierParams::Logistic(LogisticParams { c: 10.0, max_iter: 500, dual: false });
        let run = classify_segment(&pipeline(SelectionMode::Fixed(vec![2])), &subjects, SegmentLabel::Video, LabelScheme::BinaryMedian, lr).unwrap();
        assert!(run.metrics.f1 >= 0.9, "{:?}", run.metrics);
        assert_eq!(run.truth.len(), 40);
        let mut p = pipeline(SelectionMode::WithinFolds { k: 5 });
        p.exec = Execution::Parallel;
        let within = classify_segment(&p, &subjects, SegmentLabel::Video, LabelScheme::BinaryMedian, lr).unwrap();
        assert!(within.metrics.f1 >= 0.9);
    }

    #[test]
    fn runs_are_reproducible_and_mode_independent() {
        let subjects = cohort(30);
        let tree = ClassifierParams::Tree(TreeParams::default());
        let mut p = pipeline(SelectionMode::Fixed((0..15).collect()));
        p.grid = Some(GridSpec::standard());
        p.grid.as_mut().unwrap().tree.min_samples_leaf = vec![1, 4];
        p.grid.as_mut().unwrap().tree.min_samples_split = vec![2, 10];
        let a = classify_segment(&p, &subjects, SegmentLabel::PreVideo, LabelScheme::ThreeEqualInterval, tree).unwrap();
        p.exec = Execution::Parallel;
        let b = classify_segment(&p, &subjects, SegmentLabel::PreVideo, LabelScheme::ThreeEqualInterval, tree).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fold_params.len(), 5);
        p.grid_global = true;
        let g = classify_segment(&p, &subjects, SegmentLabel::PreVideo, LabelScheme::ThreeEqualInterval, tree).unwrap();
        assert!(g.fold_params.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn regression_reports_underdetermined() {
        let subjects = cohort(16);
        let err = regress_segment(&pipeline(SelectionMode::Fixed((0..15).collect())), &subjects, SegmentLabel::Video).unwrap_err();
        assert!(matches!(err.root(), Error::Underdetermined(_)), "{err}");
        let run = regress_segment(&pipeline(SelectionMode::Fixed(vec![2])), &cohort(40), SegmentLabel::Video).unwrap();
        assert!(run.mse < 1e-12 && run.p < 1e-12);
    }

    #[test]
    fn small_cohorts_rejected() {
        let lr = ClassifierParams::Logistic(LogisticParams::default());
        let err = classify_segment(&pipeline(SelectionMode::Fixed(vec![2])), &cohort(7), SegmentLabel::Video, LabelScheme::BinaryMedian, lr).unwrap_err();
        assert!(matches!(err, Error::InsufficientCohort(_)));
    }
}
