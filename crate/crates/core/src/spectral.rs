//! Band powers and hemispheric log-power asymmetry.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::{EegRecording, ElectrodeId, SegmentLabel, SegmentedRecording};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrequencyBand {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl FrequencyBand {
    pub const ALL: [FrequencyBand; 5] = [
        FrequencyBand::Delta,
        FrequencyBand::Theta,
        FrequencyBand::Alpha,
        FrequencyBand::Beta,
        FrequencyBand::Gamma,
    ];

    /// Band edges in Hz. Bands are half-open except gamma, which closes at
    /// 50 Hz; together they tile [0.5, 50].
    pub fn edges(self) -> (f64, f64) {
        match self {
            FrequencyBand::Delta => (0.5, 4.0),
            FrequencyBand::Theta => (4.0, 8.0),
            FrequencyBand::Alpha => (8.0, 13.0),
            FrequencyBand::Beta => (13.0, 30.0),
            FrequencyBand::Gamma => (30.0, 50.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrequencyBand::Delta => "delta",
            FrequencyBand::Theta => "theta",
            FrequencyBand::Alpha => "alpha",
            FrequencyBand::Beta => "beta",
            FrequencyBand::Gamma => "gamma",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Homologous electrode pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Frontal,
    Central,
    Parietal,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Frontal, Region::Central, Region::Parietal];

    /// `(right, left)` electrodes of the pair.
    pub fn pair(self) -> (ElectrodeId, ElectrodeId) {
        match self {
            Region::Frontal => (ElectrodeId::F4, ElectrodeId::F3),
            Region::Central => (ElectrodeId::C4, ElectrodeId::C3),
            Region::Parietal => (ElectrodeId::P4, ElectrodeId::P3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Frontal => "frontal",
            Region::Central => "central",
            Region::Parietal => "parietal",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Region::Frontal => "fa",
            Region::Central => "ca",
            Region::Parietal => "pa",
        }
    }
}

pub const N_FEATURES: usize = 15;

/// One of the fifteen asymmetry features, `region × band`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId {
    pub region: Region,
    pub band: FrequencyBand,
}

impl FeatureId {
    /// Canonical order: frontal-delta, frontal-theta, … parietal-gamma.
    pub fn all() -> [FeatureId; N_FEATURES] {
        std::array::from_fn(|i| FeatureId {
            region: Region::ALL[i / 5],
            band: FrequencyBand::ALL[i % 5],
        })
    }

    pub fn from_index(i: usize) -> FeatureId {
        FeatureId::all()[i]
    }

    pub fn index(self) -> usize {
        (self.region as usize) * 5 + self.band.index()
    }

    /// Column name in feature tables, e.g. `fa_alpha`.
    pub fn column(self) -> String {
        format!("{}_{}", self.region.prefix(), self.band.name())
    }

    /// Readable name, e.g. `frontal alpha`.
    pub fn title(self) -> String {
        format!("{} {}", self.region.name(), self.band.name())
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.column())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureId::all()
            .into_iter()
            .find(|f| f.column() == s || f.title() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature {s:?}")))
    }
}

/// Fifteen asymmetry values in canonical [`FeatureId`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryFeatureVector(pub [f64; N_FEATURES]);

impl AsymmetryFeatureVector {
    pub fn get(&self, id: FeatureId) -> f64 {
        self.0[id.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Welch estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchParams {
    pub segment_seconds: f64,
    pub overlap: f64,
}

impl Default for WelchParams {
    fn default() -> Self {
        WelchParams {
            segment_seconds: 2.0,
            overlap: 0.5,
        }
    }
}

/// One-sided power spectral density on a uniform grid `k·df`, k = 0..len.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    df: f64,
    values: Vec<f64>,
}

impl Psd {
    pub fn resolution_hz(&self) -> f64 {
        self.df
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.df)
    }

    pub fn max_frequency(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.df
    }

    /// Integral of the piecewise-linear PSD over `[lo, hi]`. On whole bins
    /// this is the trapezoid rule; partial bins at the ends are interpolated,
    /// so integrals over adjacent intervals add up exactly.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        let top = self.max_frequency();
        if !(lo >= 0.0 && hi <= top + 1e-9 * top && lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "interval [{lo}, {hi}] outside the PSD grid [0, {top}]"
            )));
        }
        let hi = hi.min(top);
        let value_at = |f: f64| {
            let pos = f / self.df;
            let k = (pos.floor() as usize).min(self.values.len() - 2);
            let frac = pos - k as f64;
            self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
        };
        let first = (lo / self.df).ceil() as usize;
        let last = (hi / self.df).floor() as usize;
        if first > last {
            return Ok(0.5 * (value_at(lo) + value_at(hi)) * (hi - lo));
        }
        let (f_first, f_last) = (first as f64 * self.df, last as f64 * self.df);
        let mut total = 0.5 * (value_at(lo) + self.values[first]) * (f_first - lo);
        for k in first..last {
            total += 0.5 * (self.values[k] + self.values[k + 1]) * self.df;
        }
        total += 0.5 * (self.values[last] + value_at(hi)) * (hi - f_last);
        Ok(total)
    }

    /// Integral over `[0, fs/2]`.
    pub fn total_power(&self) -> f64 {
        self.integrate(0.0, self.max_frequency()).unwrap_or(0.0)
    }
}

fn hann(n: usize) -> Vec<f64> {
    // Symmetric Hann, so a time-reversed segment sees the same taper.
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / m).cos())
        .collect()
}

/// Welch PSD in units²/Hz: Hann-windowed, mean-detrended segments of
/// `seg_len` samples with fractional `overlap`, averaged periodograms.
///
/// The segment grid is centered in the signal; when the leftover sample count
/// is odd, both neighbouring alignments are averaged. This keeps the estimate
/// invariant under time reversal.
pub fn welch_psd(samples: &[f64], fs: f64, seg_len: usize, overlap: f64) -> Result<Psd> {
    if seg_len < 8 {
        return Err(Error::InvalidArgument(format!(
            "Welch segment length must be ≥ 8 samples, got {seg_len}"
        )));
    }
    if seg_len > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "Welch segment length {seg_len} exceeds signal length {}",
            samples.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidArgument(format!(
            "overlap must be in [0, 1), got {overlap}"
        )));
    }
    if !(fs > 0.0) {
        return Err(Error::InvalidArgument(format!("sampling rate must be positive, got {fs}")));
    }
    let step = ((seg_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let n_seg = (samples.len() - seg_len) / step + 1;
    let leftover = samples.len() - seg_len - (n_seg - 1) * step;
    let offsets: Vec<usize> = if leftover.is_multiple_of(2) {
        vec![leftover / 2]
    } else {
        vec![leftover / 2, leftover / 2 + 1]
    };

    let window = hann(seg_len);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(seg_len);
    let n_bins = seg_len / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); seg_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for &offset in &offsets {
        for s in 0..n_seg {
            let start = offset + s * step;
            let seg = &samples[start..start + seg_len];
            let mean = seg.iter().sum::<f64>() / seg_len as f64;
            for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
                *b = Complex64::new((x - mean) * w, 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
        }
    }
    let scale = 1.0 / (fs * win_power * (n_seg * offsets.len()) as f64);
    let nyquist_bin = if seg_len.is_multiple_of(2) { Some(n_bins - 1) } else { None };
    let values = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let one_sided = if k == 0 || Some(k) == nyquist_bin { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    Ok(Psd {
        df: fs / seg_len as f64,
        values,
    })
}

/// Power in a band: integral of the PSD over the band's edges.
pub fn band_power(psd: &Psd, band: FrequencyBand) -> Result<f64> {
    let (lo, hi) = band.edges();
    psd.integrate(lo, hi)
        .map_err(|e| e.context(format!("{band} band")))
}

/// Power per electrode and band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPowerTable {
    power: [[f64; 5]; 9],
}

impl BandPowerTable {
    pub fn from_recording(rec: &EegRecording, params: WelchParams) -> Result<Self> {
        let fs = rec.sampling_rate_hz();
        let seg_len = (params.segment_seconds * fs).round() as usize;
        let mut power = [[0.0; 5]; 9];
        for e in ElectrodeId::ALL {
            let psd = welch_psd(rec.channel(e), fs, seg_len, params.overlap)
                .map_err(|err| err.context(format!("electrode {e}")))?;
            for band in FrequencyBand::ALL {
                power[e.index()][band.index()] = band_power(&psd, band)
                    .map_err(|err| err.context(format!("electrode {e}")))?;
            }
        }
        Ok(BandPowerTable { power })
    }

    pub fn get(&self, electrode: ElectrodeId, band: FrequencyBand) -> f64 {
        self.power[electrode.index()][band.index()]
    }
}

/// ln(P_right) − ln(P_left). Positive values mean more right-hemisphere power.
pub fn asymmetry(p_left: f64, p_right: f64) -> Result<f64> {
    if !(p_left > 0.0 && p_right > 0.0) || !p_left.is_finite() || !p_right.is_finite() {
        return Err(Error::DegeneratePower(format!(
            "asymmetry needs positive finite powers (left={p_left}, right={p_right})"
        )));
    }
    Ok(p_right.ln() - p_left.ln())
}

pub fn asymmetry_features(table: &BandPowerTable) -> Result<AsymmetryFeatureVector> {
    let mut out = [0.0; N_FEATURES];
    for id in FeatureId::all() {
        let (right, left) = id.region.pair();
        out[id.index()] = asymmetry(table.get(left, id.band), table.get(right, id.band))
            .map_err(|e| e.context(format!("feature {id}")))?;
    }
    Ok(AsymmetryFeatureVector(out))
}

/// Fifteen asymmetry features for each of the three segments.
pub fn extract_features(
    seg: &SegmentedRecording,
    params: WelchParams,
) -> Result<[AsymmetryFeatureVector; 3]> {
    let mut out = [AsymmetryFeatureVector([0.0; N_FEATURES]); 3];
    for (label, rec) in seg.iter() {
        let table = BandPowerTable::from_recording(rec, params)
            .map_err(|e| e.context(format!("segment {label}")))?;
        out[label.index()] =
            asymmetry_features(&table).map_err(|e| e.context(format!("segment {label}")))?;
    }
    Ok(out)
}

/// Questionnaire bounds of the empathy score.
pub const SCORE_MIN: u32 = 0;
pub const SCORE_MAX: u32 = 96;

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub empathy_score: u32,
    pub features: [AsymmetryFeatureVector; 3],
}

impl SubjectRecord {
    pub fn new(
        subject_id: impl Into<String>,
        empathy_score: u32,
        features: [AsymmetryFeatureVector; 3],
    ) -> Result<Self> {
        if empathy_score > SCORE_MAX {
            return Err(Error::InvalidArgument(format!(
                "empathy score {empathy_score} outside [{SCORE_MIN}, {SCORE_MAX}]"
            )));
        }
        Ok(SubjectRecord {
            subject_id: subject_id.into(),
            empathy_score,
            features,
        })
    }

    pub fn segment(&self, label: SegmentLabel) -> &AsymmetryFeatureVector {
        &self.features[label.index()]
    }
}

/// How z-scores are formed during outlier exclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierScope {
    /// Each segment's features are standardized across subjects separately.
    #[default]
    PerSegment,
    /// A feature is standardized over all subject × segment values at once.
    Pooled,
}

/// Population z-scores; a (numerically) constant column gets z = 0.
fn z_scores(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= 1e-12 * (1.0 + mean.abs()) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Drop every subject that has any asymmetry value with |z| > `threshold`.
/// z-scores are computed once over the input cohort; the rule is not
/// iterated.
pub fn exclude_outliers(
    subjects: Vec<SubjectRecord>,
    threshold: f64,
    scope: OutlierScope,
) -> Result<(Vec<SubjectRecord>, Vec<SubjectRecord>)> {
    if subjects.len() < 3 {
        return Err(Error::InsufficientCohort(format!(
            "outlier exclusion needs at least 3 subjects, got {}",
            subjects.len()
        )));
    }
    let n = subjects.len();
    let mut flagged = vec![false; n];
    for f in 0..N_FEATURES {
        match scope {
            OutlierScope::PerSegment => {
                for label in SegmentLabel::ALL {
                    let col: Vec<f64> = subjects.iter().map(|s| s.segment(label).0[f]).collect();
                    for (i, z) in z_scores(&col).into_iter().enumerate() {
                        flagged[i] |= z.abs() > threshold;
                    }
                }
            }
            OutlierScope::Pooled => {
                let col: Vec<f64> = subjects
                    .iter()
                    .flat_map(|s| s.features.iter().map(move |v| v.0[f]))
                    .collect();
                for (j, z) in z_scores(&col).into_iter().enumerate() {
                    flagged[j / 3] |= z.abs() > threshold;
                }
            }
        }
    }
    let (kept, removed): (Vec<_>, Vec<_>) = subjects
        .into_iter()
        .zip(flagged)
        .partition(|(_, out)| !out);
    Ok((
        kept.into_iter().map(|(s, _)| s).collect(),
        removed.into_iter().map(|(s, _)| s).collect(),
    ))
}
