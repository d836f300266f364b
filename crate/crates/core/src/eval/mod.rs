//! Label discretization, cross-validation, metrics and the per-segment
//! evaluation harness.

pub mod folds;
pub mod metrics;
pub mod pipeline;

use std::fmt;
use std::str::FromStr;

pub use folds::{make_folds, CvScheme, Fold};
pub use metrics::{classification_report, confusion_matrix, regression_metrics, ClassificationMetrics};
pub use pipeline::{
    classify_segment, regress_segment, ClassificationRun, Pipeline, RegressionRun, SelectionMode,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LabelScheme {
    Continuous,
    #[default]
    BinaryMedian,
    ThreeEqualInterval,
}

impl LabelScheme {
    pub fn key(self) -> &'static str {
        match self {
            LabelScheme::Continuous => "continuous",
            LabelScheme::BinaryMedian => "binary_median",
            LabelScheme::ThreeEqualInterval => "three_equal_interval",
        }
    }

    pub fn n_classes(self) -> Option<usize> {
        match self {
            LabelScheme::Continuous => None,
            LabelScheme::BinaryMedian => Some(2),
            LabelScheme::ThreeEqualInterval => Some(3),
        }
    }

    /// Class labels for `scores`; errors for the continuous scheme.
    pub fn labels(self, scores: &[f64]) -> Result<Vec<usize>> {
        match self {
            LabelScheme::Continuous => Err(Error::InvalidArgument(
                "continuous targets have no class labels".into(),
            )),
            LabelScheme::BinaryMedian => Ok(median_split(scores)?.0),
            LabelScheme::ThreeEqualInterval => Ok(equal_interval_bins(scores, 3)?.0),
        }
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(LabelScheme::Continuous),
            "binary" | "binary_median" | "median" => Ok(LabelScheme::BinaryMedian),
            "three" | "three_equal_interval" | "3class" => Ok(LabelScheme::ThreeEqualInterval),
            _ => Err(Error::InvalidArgument(format!("unknown label scheme {s:?}"))),
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Label 1 ("high") iff the score is strictly above the median. Returns the
/// labels and the median.
pub fn median_split(scores: &[f64]) -> Result<(Vec<usize>, f64)> {
    if scores.len() < 2 {
        return Err(Error::TooFewSamples(format!(
            "median split needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Err(Error::DegenerateSplit("all scores are equal".into()));
    }
    let m = median(scores);
    Ok((scores.iter().map(|&s| usize::from(s > m)).collect(), m))
}

/// `k` equal-width bins over [min, max]; right-open except the last. Returns
/// labels and the `k − 1` interior edges.
pub fn equal_interval_bins(scores: &[f64], k: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if scores.is_empty() {
        return Err(Error::TooFewSamples("no scores to bin".into()));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::DegenerateSplit(format!("score range is a single value {lo}")));
    }
    let width = hi - lo;
    let edges: Vec<f64> = (1..k).map(|i| lo + i as f64 * width / k as f64).collect();
    let labels = scores
        .iter()
        .map(|&s| edges.iter().take_while(|&&e| s >= e).count())
        .collect();
    Ok((labels, edges))
}
