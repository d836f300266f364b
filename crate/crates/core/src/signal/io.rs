//! CSV recordings: an optional `# fs=<hz>` first line, a header with a time
//! or index column plus the nine electrode labels, one row per sample.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{EegRecording, ElectrodeId};
use crate::error::{Error, Result};

const TIME_COLUMNS: [&str; 3] = ["t", "time", "index"];

/// Maps each electrode onto the CSV column that holds it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSchema {
    columns: [String; 9],
}

impl Default for ChannelSchema {
    fn default() -> Self {
        ChannelSchema {
            columns: ElectrodeId::ALL.map(|e| e.label().to_string()),
        }
    }
}

impl ChannelSchema {
    pub fn with_column(mut self, electrode: ElectrodeId, column: impl Into<String>) -> Self {
        self.columns[electrode.index()] = column.into();
        self
    }

    pub fn column(&self, electrode: ElectrodeId) -> &str {
        &self.columns[electrode.index()]
    }
}

fn parse_fs_line(line: &str) -> Option<&str> {
    let rest = line.trim().strip_prefix('#')?.trim();
    rest.strip_prefix("fs=").or_else(|| rest.strip_prefix("fs ="))
}

/// Parse a recording from CSV text. `fs` overrides any `# fs=` line.
pub fn read_recording(
    text: &str,
    origin: &Path,
    schema: &ChannelSchema,
    fs: Option<f64>,
) -> Result<EegRecording> {
    let mut body = text;
    let mut file_fs = None;
    if let Some(first) = text.lines().next() {
        if first.trim_start().starts_with('#') {
            if let Some(v) = parse_fs_line(first) {
                let parsed = v.trim().parse::<f64>().map_err(|_| {
                    Error::schema(origin, format!("unparseable sampling rate line {first:?}"))
                })?;
                file_fs = Some(parsed);
            }
            body = &text[first.len()..];
        }
    }
    let fs = fs.or(file_fs).ok_or_else(|| {
        Error::schema(origin, "sampling rate missing: no `# fs=` line and no override")
    })?;
    if !(fs > super::MIN_SAMPLING_RATE_HZ) {
        return Err(Error::schema(
            origin,
            format!("sampling rate {fs} Hz must exceed {} Hz", super::MIN_SAMPLING_RATE_HZ),
        ));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.trim_start_matches(['\r', '\n']).as_bytes());
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: origin.to_path_buf(),
            source,
        })?
        .clone();
    let lookup: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    if !TIME_COLUMNS.iter().any(|c| lookup.contains_key(c)) {
        return Err(Error::schema(
            origin,
            "missing time or index column (expected one of t, time, index)",
        ));
    }
    let mut col_idx = [0usize; 9];
    for e in ElectrodeId::ALL {
        let name = schema.column(e);
        col_idx[e.index()] = *lookup.get(name).ok_or_else(|| {
            Error::schema(origin, format!("missing electrode column {name:?}"))
        })?;
    }

    let mut channels: [Vec<f64>; 9] = Default::default();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: origin.to_path_buf(),
            source,
        })?;
        for e in ElectrodeId::ALL {
            let cell = &record[col_idx[e.index()]];
            let v: f64 = cell.parse().map_err(|_| {
                Error::schema(
                    origin,
                    format!("non-numeric cell {cell:?} in column {} at data row {}", schema.column(e), row_no + 1),
                )
            })?;
            channels[e.index()].push(v);
        }
    }
    EegRecording::new(fs, channels).map_err(|e| Error::schema(origin, e.to_string()))
}

/// Load and validate a recording from a CSV file.
pub fn load_recording(path: &Path, schema: &ChannelSchema, fs: Option<f64>) -> Result<EegRecording> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_recording(&text, path, schema, fs)
}

/// Render a recording in the canonical CSV layout. Values use Rust's
/// shortest round-trip float formatting, so reading the output back yields
/// bit-identical samples.
pub fn write_recording(rec: &EegRecording) -> String {
    let fs = rec.sampling_rate_hz();
    let mut out = String::with_capacity(rec.len() * 9 * 12);
    let _ = writeln!(out, "# fs={fs}");
    out.push('t');
    for e in ElectrodeId::ALL {
        out.push(',');
        out.push_str(e.label());
    }
    out.push('\n');
    for i in 0..rec.len() {
        let _ = write!(out, "{}", i as f64 / fs);
        for ch in rec.channels() {
            let _ = write!(out, ",{}", ch[i]);
        }
        out.push('\n');
    }
    out
}
