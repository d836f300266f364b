//! Aligned plain-text tables for CSV reports and saved models.

use std::path::Path;

use anyhow::{Context, Result};

use corteml::models::persist::SavedModel;
use corteml::models::OlsFit;

fn looks_float(cell: &str) -> bool {
    cell.parse::<f64>().is_ok() && (cell.contains(['.', 'e', 'E']) || matches!(cell, "inf" | "-inf" | "NaN"))
}

fn format_cell(cell: &str, precision: usize) -> String {
    format_number(cell, precision, looks_float(cell))
}

/// `as_float` rounds integers too, so a column of real numbers stays uniform.
fn format_number(cell: &str, precision: usize, as_float: bool) -> String {
    match cell.parse::<f64>() {
        Ok(v) if as_float => {
            if v != 0.0 && v.is_finite() && v.abs() < 0.1f64.powi(precision as i32) {
                format!("{v:.*e}", precision.saturating_sub(1))
            } else {
                format!("{v:.precision$}")
            }
        }
        _ => cell.to_string(),
    }
}

/// Numeric columns are right-aligned, everything else left-aligned.
pub fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let ncols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    let mut numeric = vec![true; ncols];
    for row in rows {
        for (j, cell) in row.iter().enumerate().take(ncols) {
            width[j] = width[j].max(cell.chars().count());
            numeric[j] &= cell.parse::<f64>().is_ok();
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = (0..ncols)
            .map(|j| {
                let c = cells.get(j).map(String::as_str).unwrap_or("");
                if numeric[j] {
                    format!("{c:>w$}", w = width[j])
                } else {
                    format!("{c:<w$}", w = width[j])
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

pub fn csv_report(text: &str, origin: &Path, precision: usize) -> Result<String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .with_context(|| format!("reading {}", origin.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let raw = rdr
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .with_context(|| format!("reading {}", origin.display()))
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    let float_col: Vec<bool> = (0..header.len())
        .map(|j| raw.iter().any(|r| r.get(j).is_some_and(|c| looks_float(c))))
        .collect();
    let rows: Vec<Vec<String>> = raw
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, c)| format_number(c, precision, float_col.get(j).copied().unwrap_or(false)))
                .collect()
        })
        .collect();
    Ok(table(&header, &rows))
}

fn ols_report(fit: &OlsFit, precision: usize) -> String {
    let header = ["term", "coef", "std_err", "t", "p"].map(String::from);
    let coefs = std::iter::once(fit.intercept).chain(fit.coefficients.iter().copied());
    let rows: Vec<Vec<String>> = coefs
        .enumerate()
        .map(|(i, c)| {
            let term = if i == 0 { "const".to_string() } else { format!("x{i}") };
            let nums = [c, fit.std_errors[i], fit.t_values[i], fit.p_values[i]];
            std::iter::once(term)
                .chain(nums.iter().map(|v| format_cell(&format!("{v:?}"), precision)))
                .collect()
        })
        .collect();
    let mut out = format!(
        "OLS on {} observations, R² = {:.*}, F-test p = {}\n\n",
        fit.n_obs,
        precision,
        fit.r_squared,
        fit.f_p_value.map_or("n/a".to_string(), |p| format_cell(&format!("{p:?}"), precision)),
    );
    out.push_str(&table(&header, &rows));
    out
}

pub fn model_report(text: &str, precision: usize) -> Result<String> {
    Ok(match SavedModel::from_text(text)? {
        SavedModel::Ols(fit) => ols_report(&fit, precision),
        SavedModel::Classifier(m) => {
            let c = &m.classifier;
            let header = ["input", "mean", "sd"].map(String::from);
            let rows: Vec<Vec<String>> = m
                .standardizer
                .means
                .iter()
                .zip(&m.standardizer.sds)
                .enumerate()
                .map(|(j, (mu, sd))| {
                    vec![
                        format!("x{}", j + 1),
                        format_cell(&format!("{mu:?}"), precision),
                        format_cell(&format!("{sd:?}"), precision),
                    ]
                })
                .collect();
            format!(
                "{} classifier, {} classes, {}\n\n{}",
                c.params.family(),
                c.n_classes,
                c.params,
                table(&header, &rows)
            )
        }
    })
}
