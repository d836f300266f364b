//! Synthetic cohorts with a planted frontal-alpha asymmetry → empathy link.
//!
//! Every channel is a sum of one unit-amplitude sinusoid per band with a
//! random phase, plus white noise. Only the F4 alpha oscillator is rescaled,
//! by exp(target / 2), so ln(P_F4 / P_F3) in the alpha band has expectation
//! `target = coupling · (score − mid) / (hi − lo)` and every other feature
//! has expectation zero.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extract;
use crate::write_atomic;
use crate::rng;
use crate::signal::{
    segment, write_recording, EegRecording, ElectrodeId, SegmentLabel, SegmentedRecording,
    MIN_SAMPLING_RATE_HZ, MIN_SEGMENT_SECONDS,
};
use crate::spectral::{FrequencyBand, SubjectRecord, WelchParams, SCORE_MAX};

/// One oscillator per band, in band order.
pub const OSCILLATOR_HZ: [f64; 5] = [2.0, 6.0, 10.0, 20.0, 40.0];
pub const MIN_SUBJECTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub fs: f64,
    pub segment_seconds: f64,
    /// Planted ln-power ratio per unit of normalized score.
    pub coupling: f64,
    pub noise_sd: f64,
    pub score_range: (u32, u32),
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_subjects: 60,
            fs: 256.0,
            segment_seconds: 20.0,
            coupling: 2.0,
            noise_sd: 0.5,
            score_range: (49, 86),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_subjects < MIN_SUBJECTS {
            return bad(format!("n_subjects ≥ {MIN_SUBJECTS} required, got {}", self.n_subjects));
        }
        if !(self.fs > MIN_SAMPLING_RATE_HZ) || !self.fs.is_finite() {
            return bad(format!("sampling rate must exceed {MIN_SAMPLING_RATE_HZ} Hz, got {}", self.fs));
        }
        if self.fs / 2.0 <= OSCILLATOR_HZ[4] {
            return bad(format!("sampling rate {} cannot carry the {} Hz oscillator", self.fs, OSCILLATOR_HZ[4]));
        }
        if !(self.segment_seconds >= MIN_SEGMENT_SECONDS) || !self.segment_seconds.is_finite() {
            return bad(format!(
                "segments must last at least {MIN_SEGMENT_SECONDS} s, got {}",
                self.segment_seconds
            ));
        }
        if !self.coupling.is_finite() {
            return bad("coupling must be finite".into());
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad(format!("noise_sd must be ≥ 0, got {}", self.noise_sd));
        }
        let (lo, hi) = self.score_range;
        if lo >= hi || hi > SCORE_MAX {
            return bad(format!("score range [{lo}, {hi}] must satisfy lo < hi ≤ {SCORE_MAX}"));
        }
        Ok(())
    }

    pub fn segment_len(&self) -> usize {
        (self.segment_seconds * self.fs).round() as usize
    }

    /// Expected frontal-alpha asymmetry for a score.
    pub fn planted_asymmetry(&self, score: u32) -> f64 {
        let (lo, hi) = self.score_range;
        let mid = (f64::from(lo) + f64::from(hi)) / 2.0;
        self.coupling * (f64::from(score) - mid) / f64::from(hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSubject {
    pub id: String,
    pub score: u32,
    /// Raw, unfiltered; the three segments back to back.
    pub recording: EegRecording,
    pub boundaries: (usize, usize),
}

impl SynthSubject {
    pub fn segments(&self) -> Result<SegmentedRecording> {
        segment(&self.recording, self.boundaries)
    }
}

pub fn subject_id(index: usize) -> String {
    format!("s{:03}", index + 1)
}

/// Subject `index` of the cohort; a function of `(spec.seed, index)` only.
pub fn gen_subject(spec: &SynthSpec, index: usize) -> Result<SynthSubject> {
    spec.validate()?;
    let mut r = rng::stream(spec.seed, &[rng::tag::SYNTH, index as u64]);
    let (lo, hi) = spec.score_range;
    let score = r.random_range(lo..=hi);
    let alpha_gain = (spec.planted_asymmetry(score) / 2.0).exp();
    let seg = spec.segment_len();
    let len = 3 * seg;
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
    let channels: [Vec<f64>; 9] = std::array::from_fn(|c| {
        let phases: [f64; 5] = std::array::from_fn(|_| r.random_range(0.0..2.0 * PI));
        let mut x = vec![0.0; len];
        for (b, band) in FrequencyBand::ALL.iter().enumerate() {
            let amp = if ElectrodeId::ALL[c] == ElectrodeId::F4 && *band == FrequencyBand::Alpha {
                alpha_gain
            } else {
                1.0
            };
            let w = 2.0 * PI * OSCILLATOR_HZ[b] / spec.fs;
            for (i, v) in x.iter_mut().enumerate() {
                *v += amp * (w * i as f64 + phases[b]).sin();
            }
        }
        if spec.noise_sd > 0.0 {
            for v in &mut x {
                *v += noise.sample(&mut r);
            }
        }
        x
    });
    Ok(SynthSubject {
        id: subject_id(index),
        score,
        recording: EegRecording::new(spec.fs, channels)?,
        boundaries: (seg, 2 * seg),
    })
}

pub fn gen_cohort(spec: &SynthSpec, exec: Execution) -> Result<Vec<SynthSubject>> {
    spec.validate()?;
    exec.try_map_range(spec.n_subjects, |i| gen_subject(spec, i))
}

/// Generate a cohort and run it through filtering and feature extraction in
/// memory, exactly as `extract` does for a continuous recording.
pub fn cohort_features(spec: &SynthSpec, welch: WelchParams, exec: Execution) -> Result<Vec<SubjectRecord>> {
    spec.validate()?;
    exec.try_map_range(spec.n_subjects, |i| {
        let s = gen_subject(spec, i)?;
        let features = extract::from_continuous(&s.recording, s.boundaries, welch)
            .map_err(|e| e.context(format!("subject {}", s.id)))?;
        SubjectRecord::new(s.id, s.score, features)
    })
}

pub fn manifest_header() -> &'static str {
    "subject,score,coupling,seed"
}

pub fn recording_file_name(id: &str, label: SegmentLabel) -> String {
    format!("{id}_{}.csv", label.key())
}

/// Write one CSV per subject and segment plus `manifest.csv` into `dir`.
/// Files are written under temporary names and renamed into place.
pub fn gen_dataset(spec: &SynthSpec, dir: &Path, exec: Execution) -> Result<Vec<SynthSubject>> {
    spec.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let subjects = gen_cohort(spec, exec)?;
    let files = exec.try_map_range(subjects.len(), |i| -> Result<()> {
        let s = &subjects[i];
        let seg = s.segments()?;
        for (label, rec) in seg.iter() {
            write_atomic(&dir.join(recording_file_name(&s.id, label)), &write_recording(rec))?;
        }
        Ok(())
    });
    files?;
    let mut manifest = String::from(manifest_header());
    manifest.push('\n');
    for s in &subjects {
        let _ = writeln!(manifest, "{},{},{},{}", s.id, s.score, spec.coupling, spec.seed);
    }
    write_atomic(&dir.join("manifest.csv"), &manifest)?;
    Ok(subjects)
}
