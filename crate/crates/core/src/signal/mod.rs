//! Raw multichannel EEG: electrode labels, recordings, band-pass filtering
//! and segmentation into the three recording phases.

mod filter;
mod io;

use std::fmt;
use std::str::FromStr;

pub use filter::{bandpass_filter, ButterworthBandpass, DEFAULT_FILTER_ORDER};
pub use io::{load_recording, read_recording, write_recording, ChannelSchema};

use crate::error::{Error, Result};

/// Lower bound on the sampling rate: Nyquist for the 50 Hz filter edge.
pub const MIN_SAMPLING_RATE_HZ: f64 = 100.0;

/// Minimum duration of each segment, in seconds.
pub const MIN_SEGMENT_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElectrodeId {
    F3,
    Fz,
    F4,
    C3,
    Cz,
    C4,
    P3,
    POz,
    P4,
}

impl ElectrodeId {
    /// Canonical channel order.
    pub const ALL: [ElectrodeId; 9] = [
        ElectrodeId::F3,
        ElectrodeId::Fz,
        ElectrodeId::F4,
        ElectrodeId::C3,
        ElectrodeId::Cz,
        ElectrodeId::C4,
        ElectrodeId::P3,
        ElectrodeId::POz,
        ElectrodeId::P4,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ElectrodeId::F3 => "F3",
            ElectrodeId::Fz => "Fz",
            ElectrodeId::F4 => "F4",
            ElectrodeId::C3 => "C3",
            ElectrodeId::Cz => "Cz",
            ElectrodeId::C4 => "C4",
            ElectrodeId::P3 => "P3",
            ElectrodeId::POz => "POz",
            ElectrodeId::P4 => "P4",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_midline(self) -> bool {
        matches!(self, ElectrodeId::Fz | ElectrodeId::Cz | ElectrodeId::POz)
    }
}

impl fmt::Display for ElectrodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ElectrodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ElectrodeId::ALL
            .into_iter()
            .find(|e| e.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown electrode label {s:?}")))
    }
}

/// A validated recording: nine equal-length, finite channels in canonical
/// order at a fixed sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    sampling_rate_hz: f64,
    channels: [Vec<f64>; 9],
}

impl EegRecording {
    pub fn new(sampling_rate_hz: f64, channels: [Vec<f64>; 9]) -> Result<Self> {
        if !(sampling_rate_hz > MIN_SAMPLING_RATE_HZ) || !sampling_rate_hz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must exceed {MIN_SAMPLING_RATE_HZ} Hz, got {sampling_rate_hz}"
            )));
        }
        let len = channels[0].len();
        if len < 2 {
            return Err(Error::TooShort(format!(
                "recording needs at least 2 samples, got {len}"
            )));
        }
        for (e, ch) in ElectrodeId::ALL.iter().zip(channels.iter()) {
            if ch.len() != len {
                return Err(Error::InvalidArgument(format!(
                    "channel {e} has {} samples, expected {len}",
                    ch.len()
                )));
            }
            if let Some(i) = ch.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "channel {e} has a non-finite sample at index {i}"
                )));
            }
        }
        Ok(EegRecording {
            sampling_rate_hz,
            channels,
        })
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sampling_rate_hz
    }

    pub fn channel(&self, electrode: ElectrodeId) -> &[f64] {
        &self.channels[electrode.index()]
    }

    pub fn channels(&self) -> &[Vec<f64>; 9] {
        &self.channels
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Result<EegRecording> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "slice [{start}, {end}) out of range for length {}",
                self.len()
            )));
        }
        EegRecording::new(
            self.sampling_rate_hz,
            std::array::from_fn(|i| self.channels[i][start..end].to_vec()),
        )
    }

    pub(crate) fn map_channels<F>(&self, f: F) -> Result<EegRecording>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let mut out: [Vec<f64>; 9] = Default::default();
        for (dst, src) in out.iter_mut().zip(self.channels.iter()) {
            *dst = f(src)?;
        }
        EegRecording::new(self.sampling_rate_hz, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentLabel {
    PreVideo,
    Video,
    PostVideo,
}

impl SegmentLabel {
    pub const ALL: [SegmentLabel; 3] = [
        SegmentLabel::PreVideo,
        SegmentLabel::Video,
        SegmentLabel::PostVideo,
    ];

    /// Identifier used in file names and CSV cells.
    pub fn key(self) -> &'static str {
        match self {
            SegmentLabel::PreVideo => "pre_video",
            SegmentLabel::Video => "video",
            SegmentLabel::PostVideo => "post_video",
        }
    }

    /// Human-readable name used in rendered reports.
    pub fn title(self) -> &'static str {
        match self {
            SegmentLabel::PreVideo => "Pre-video",
            SegmentLabel::Video => "Video",
            SegmentLabel::PostVideo => "Post-video",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SegmentLabel::PreVideo => "PreVideo",
            SegmentLabel::Video => "Video",
            SegmentLabel::PostVideo => "PostVideo",
        };
        f.write_str(name)
    }
}

impl FromStr for SegmentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', ' '], "_");
        match norm.as_str() {
            "pre_video" | "prevideo" | "pre" => Ok(SegmentLabel::PreVideo),
            "video" => Ok(SegmentLabel::Video),
            "post_video" | "postvideo" | "post" => Ok(SegmentLabel::PostVideo),
            _ => Err(Error::InvalidArgument(format!("unknown segment {s:?}"))),
        }
    }
}

/// The three phases of one session, sharing a sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedRecording {
    segments: [EegRecording; 3],
}

impl SegmentedRecording {
    pub fn new(pre: EegRecording, video: EegRecording, post: EegRecording) -> Result<Self> {
        let fs = pre.sampling_rate_hz();
        if video.sampling_rate_hz() != fs || post.sampling_rate_hz() != fs {
            return Err(Error::InvalidArgument(
                "segments must share one sampling rate".into(),
            ));
        }
        Ok(SegmentedRecording {
            segments: [pre, video, post],
        })
    }

    pub fn get(&self, label: SegmentLabel) -> &EegRecording {
        &self.segments[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (SegmentLabel, &EegRecording)> {
        SegmentLabel::ALL.into_iter().zip(self.segments.iter())
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.segments[0].sampling_rate_hz()
    }
}

/// Cut a filtered recording into PreVideo `[0, b1)`, Video `[b1, b2)` and
/// PostVideo `[b2, len)`.
pub fn segment(rec: &EegRecording, boundaries: (usize, usize)) -> Result<SegmentedRecording> {
    let (b1, b2) = boundaries;
    let len = rec.len();
    if b1 == 0 {
        return Err(Error::InvalidArgument("empty PreVideo segment".into()));
    }
    if b2 <= b1 {
        return Err(Error::InvalidArgument(format!(
            "empty Video segment: boundaries ({b1}, {b2}) are not increasing"
        )));
    }
    if b2 >= len {
        return Err(Error::InvalidArgument(format!(
            "empty PostVideo segment: boundary {b2} out of range for length {len}"
        )));
    }
    let min_len = (MIN_SEGMENT_SECONDS * rec.sampling_rate_hz()).ceil() as usize;
    for (label, n) in SegmentLabel::ALL.into_iter().zip([b1, b2 - b1, len - b2]) {
        if n < min_len {
            return Err(Error::TooShort(format!(
                "{label} segment has {n} samples, needs at least {min_len} ({MIN_SEGMENT_SECONDS} s)"
            )));
        }
    }
    SegmentedRecording::new(rec.slice(0, b1)?, rec.slice(b1, b2)?, rec.slice(b2, len)?)
}
