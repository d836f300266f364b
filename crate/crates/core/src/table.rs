//! Feature table CSV: one row per (subject, segment) with the empathy score
//! and the fifteen asymmetry features in canonical order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::signal::SegmentLabel;
use crate::spectral::{AsymmetryFeatureVector, FeatureId, SubjectRecord, N_FEATURES};

pub fn header() -> Vec<String> {
    let mut h = vec!["subject".to_string(), "segment".into(), "empathy".into()];
    h.extend(FeatureId::all().iter().map(|f| f.column()));
    h
}

/// Render subjects in input order, three rows each (segment order).
pub fn write_table(subjects: &[SubjectRecord]) -> String {
    let mut out = header().join(",");
    out.push('\n');
    for s in subjects {
        for label in SegmentLabel::ALL {
            let _ = write!(out, "{},{},{}", s.subject_id, label.key(), s.empathy_score);
            for v in s.segment(label).as_slice() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

/// Parse a feature table. Every subject must have all three segments and a
/// single empathy score. Subjects come back in order of first appearance.
pub fn read_table(text: &str, origin: &Path) -> Result<Vec<SubjectRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e| Error::Csv {
        path: origin.to_path_buf(),
        source: e,
    };
    let head: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if head != header() {
        return Err(Error::schema(
            origin,
            format!("feature table header must be {:?}, found {head:?}", header().join(",")),
        ));
    }
    let mut order: Vec<String> = Vec::new();
    let mut partial: BTreeMap<String, (u32, [Option<AsymmetryFeatureVector>; 3])> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = line + 2;
        let subject = rec[0].to_string();
        if subject.is_empty() {
            return Err(Error::schema(origin, format!("row {row}: empty subject id")));
        }
        let segment: SegmentLabel = rec[1]
            .parse()
            .map_err(|_| Error::schema(origin, format!("row {row}: unknown segment {:?}", &rec[1])))?;
        let score: u32 = rec[2]
            .parse()
            .map_err(|_| Error::schema(origin, format!("row {row}: empathy score {:?} is not an integer", &rec[2])))?;
        let mut values = [0.0; N_FEATURES];
        for (j, v) in values.iter_mut().enumerate() {
            let cell = &rec[3 + j];
            *v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::schema(origin, format!("row {row}: non-numeric cell {cell:?} in {}", FeatureId::from_index(j).column())))?;
        }
        let entry = partial.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            (score, [None, None, None])
        });
        if entry.0 != score {
            return Err(Error::schema(origin, format!("row {row}: subject {subject} has conflicting scores")));
        }
        let slot = &mut entry.1[segment.index()];
        if slot.is_some() {
            return Err(Error::schema(origin, format!("row {row}: duplicate {segment} row for {subject}")));
        }
        *slot = Some(AsymmetryFeatureVector(values));
    }
    order
        .into_iter()
        .map(|id| {
            let (score, segs) = partial.remove(&id).expect("recorded subject");
            let missing: Vec<&str> = SegmentLabel::ALL
                .iter()
                .filter(|l| segs[l.index()].is_none())
                .map(|l| l.key())
                .collect();
            if !missing.is_empty() {
                return Err(Error::schema(origin, format!("subject {id} lacks segments {missing:?}")));
            }
            let features = segs.map(|s| s.expect("checked"));
            SubjectRecord::new(id, score, features).map_err(|e| Error::schema(origin, e.to_string()))
        })
        .collect()
}

pub fn load_table(path: &Path) -> Result<Vec<SubjectRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_table(&text, path)
}

/// Design matrix of the chosen features for one segment, plus scores.
pub fn design(
    subjects: &[SubjectRecord],
    segment: SegmentLabel,
    features: &[usize],
) -> (DMatrix<f64>, Vec<f64>) {
    let x = DMatrix::from_fn(subjects.len(), features.len(), |i, j| {
        subjects[i].segment(segment).0[features[j]]
    });
    let y = subjects.iter().map(|s| f64::from(s.empathy_score)).collect();
    (x, y)
}

/// Subject → score from any CSV with `subject` and `score` columns (the
/// synth manifest qualifies).
pub fn read_scores(text: &str, origin: &Path) -> Result<BTreeMap<String, u32>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e| Error::Csv {
        path: origin.to_path_buf(),
        source: e,
    };
    let head = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        head.iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(origin, format!("missing column {name:?}")))
    };
    let (si, ci) = (col("subject")?, col("score")?);
    let mut out = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let score: u32 = rec[ci].parse().map_err(|_| {
            Error::schema(origin, format!("row {}: score {:?} is not an integer", line + 2, &rec[ci]))
        })?;
        if out.insert(rec[si].to_string(), score).is_some() {
            return Err(Error::schema(origin, format!("subject {} listed twice", &rec[si])));
        }
    }
    Ok(out)
}

/// Selected features per segment, best first: `segment,rank,feature`.
pub fn write_selection(selection: &[(SegmentLabel, Vec<usize>)]) -> String {
    let mut out = String::from("segment,rank,feature\n");
    for (label, features) in selection {
        for (r, &j) in features.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", label.key(), r + 1, FeatureId::from_index(j).column());
        }
    }
    out
}

pub fn read_selection(text: &str, origin: &Path) -> Result<BTreeMap<SegmentLabel, Vec<usize>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e| Error::Csv {
        path: origin.to_path_buf(),
        source: e,
    };
    let head: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if head != ["segment", "rank", "feature"] {
        return Err(Error::schema(origin, "selection header must be segment,rank,feature"));
    }
    let mut ranked: BTreeMap<SegmentLabel, Vec<(usize, usize)>> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = line + 2;
        let label: SegmentLabel = rec[0]
            .parse()
            .map_err(|_| Error::schema(origin, format!("row {row}: unknown segment {:?}", &rec[0])))?;
        let rank: usize = rec[1]
            .parse()
            .map_err(|_| Error::schema(origin, format!("row {row}: bad rank {:?}", &rec[1])))?;
        let feature: FeatureId = rec[2]
            .parse()
            .map_err(|_| Error::schema(origin, format!("row {row}: unknown feature {:?}", &rec[2])))?;
        ranked.entry(label).or_default().push((rank, feature.index()));
    }
    Ok(ranked
        .into_iter()
        .map(|(label, mut v)| {
            v.sort_unstable();
            (label, v.into_iter().map(|(_, j)| j).collect())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subject(id: &str, score: u32, base: f64) -> SubjectRecord {
        let seg = |k: f64| AsymmetryFeatureVector(std::array::from_fn(|j| base + k + j as f64 * 0.1 - 1.0 / 3.0));
        SubjectRecord::new(id, score, [seg(0.0), seg(1.0), seg(2.0)]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let subjects = vec![subject("s01", 60, 0.123456789), subject("s00", 71, -1e-7)];
        let text = write_table(&subjects);
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("subject,segment,empathy,fa_delta,fa_theta"));
        assert_eq!(read_table(&text, Path::new("t.csv")).unwrap(), subjects);
    }

    #[test]
    fn schema_errors() {
        let p = Path::new("bad.csv");
        let good = write_table(&[subject("a", 50, 0.0)]);
        let missing = good.lines().take(3).collect::<Vec<_>>().join("\n");
        let e = read_table(&missing, p).unwrap_err();
        assert!(e.to_string().contains("lacks segments"), "{e}");
        assert!(e.is_io());
        let first = subject("a", 50, 0.0).features[0].0[0];
        let bad_cell = good.replacen(&format!(",{first}"), ",abc", 1);
        assert!(read_table(&bad_cell, p).unwrap_err().to_string().contains("non-numeric"));
        let bad_head = good.replacen("fa_delta", "fa_d", 1);
        assert!(read_table(&bad_head, p).unwrap_err().to_string().contains("header"));
        let dup = format!("{good}{}\n", good.lines().nth(1).unwrap());
        assert!(read_table(&dup, p).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn selection_and_scores_round_trip() {
        let sel = vec![(SegmentLabel::PreVideo, vec![2, 0, 14]), (SegmentLabel::PostVideo, vec![7])];
        let text = write_selection(&sel);
        let back = read_selection(&text, Path::new("s.csv")).unwrap();
        assert_eq!(back[&SegmentLabel::PreVideo], vec![2, 0, 14]);
        assert_eq!(back[&SegmentLabel::PostVideo], vec![7]);
        let scores = read_scores("subject,score,coupling\ns1,50,2\ns2,61,2\n", Path::new("m.csv")).unwrap();
        assert_eq!(scores["s2"], 61);
        assert!(read_scores("subject,value\ns1,3\n", Path::new("m.csv")).is_err());
    }

    #[test]
    fn design_selects_columns() {
        let subjects = vec![subject("a", 50, 0.0), subject("b", 60, 1.0)];
        let (x, y) = design(&subjects, SegmentLabel::Video, &[0, 14]);
        assert_eq!(x.shape(), (2, 2));
        assert_eq!(x[(1, 0)], subjects[1].segment(SegmentLabel::Video).0[0]);
        assert_eq!(y, vec![50.0, 60.0]);
    }
}
