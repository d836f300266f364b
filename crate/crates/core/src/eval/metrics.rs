use crate::error::{Error, Result};

/// Mean squared and mean absolute error.
pub fn regression_metrics(y: &[f64], y_hat: &[f64]) -> Result<(f64, f64)> {
    if y.len() != y_hat.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} targets, {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let n = y.len() as f64;
    let (sq, abs) = y
        .iter()
        .zip(y_hat)
        .fold((0.0, 0.0), |(s, a), (t, p)| (s + (t - p).powi(2), a + (t - p).abs()));
    Ok((sq / n, abs / n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Counts `[true][predicted]`.
pub fn confusion_matrix(y: &[usize], y_hat: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    if y.len() != y_hat.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} labels, {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y.iter().zip(y_hat) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label out of range for {n_classes} classes"
            )));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Accuracy, precision, recall and F1.
///
/// With two classes, class 1 is the positive ("high") class. With more,
/// per-class scores are averaged with weights proportional to class support,
/// which makes the weighted recall equal to the accuracy. Undefined ratios
/// (empty denominators) count as 0.
pub fn classification_report(
    y: &[usize],
    y_hat: &[usize],
    n_classes: usize,
) -> Result<ClassificationMetrics> {
    if y.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    if n_classes < 2 {
        return Err(Error::InvalidArgument("need at least two classes".into()));
    }
    let cm = confusion_matrix(y, y_hat, n_classes)?;
    let n = y.len();
    let correct: usize = (0..n_classes).map(|c| cm[c][c]).sum();
    let accuracy = correct as f64 / n as f64;
    let per_class = |c: usize| {
        let tp = cm[c][c];
        let predicted: usize = (0..n_classes).map(|t| cm[t][c]).sum();
        let support: usize = cm[c].iter().sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        (p, r, f1_of(p, r), support)
    };
    if n_classes == 2 {
        let (precision, recall, f1, _) = per_class(1);
        return Ok(ClassificationMetrics {
            accuracy,
            precision,
            recall,
            f1,
        });
    }
    let mut out = ClassificationMetrics {
        accuracy,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for c in 0..n_classes {
        let (p, r, f, support) = per_class(c);
        let w = support as f64 / n as f64;
        out.precision += w * p;
        out.recall += w * r;
        out.f1 += w * f;
    }
    Ok(out)
}
