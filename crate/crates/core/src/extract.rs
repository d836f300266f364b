//! Raw recordings to feature vectors: band-pass filter, segment, Welch band
//! powers and asymmetries.

use crate::error::Result;
use crate::signal::{bandpass_filter, segment, EegRecording, SegmentedRecording};
use crate::spectral::{extract_features, AsymmetryFeatureVector, WelchParams};

pub const FILTER_LOW_HZ: f64 = 0.5;
pub const FILTER_HIGH_HZ: f64 = 50.0;

/// Filter the whole recording, then cut it at `boundaries`.
pub fn from_continuous(
    rec: &EegRecording,
    boundaries: (usize, usize),
    welch: WelchParams,
) -> Result<[AsymmetryFeatureVector; 3]> {
    let filtered = bandpass_filter(rec, FILTER_LOW_HZ, FILTER_HIGH_HZ)?;
    extract_features(&segment(&filtered, boundaries)?, welch)
}

/// Segments stored separately are filtered one by one.
pub fn from_segments(seg: &SegmentedRecording, welch: WelchParams) -> Result<[AsymmetryFeatureVector; 3]> {
    let [pre, video, post] = [0, 1, 2].map(|i| {
        let (_, rec) = seg.iter().nth(i).expect("three segments");
        bandpass_filter(rec, FILTER_LOW_HZ, FILTER_HIGH_HZ)
    });
    extract_features(&SegmentedRecording::new(pre?, video?, post?)?, welch)
}
