//! Zero-phase Butterworth band-pass built from second-order sections.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::EegRecording;
use crate::error::{Error, Result};

/// Order of the analog low-pass prototype. The band-pass realization has
/// twice as many poles.
pub const DEFAULT_FILTER_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    /// Transposed direct-form II state reached after a unit step settles.
    fn step_state(&self) -> [f64; 2] {
        let y = (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2]);
        let z2 = self.b[2] - self.a[2] * y;
        let z1 = y - self.b[0];
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }
}

/// Digital Butterworth band-pass designed by the bilinear transform with
/// pre-warped band edges, stored as cascaded biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthBandpass {
    order: usize,
    sections: Vec<Biquad>,
    low_hz: f64,
    high_hz: f64,
    sampling_rate_hz: f64,
}

impl ButterworthBandpass {
    pub fn design(order: usize, low_hz: f64, high_hz: f64, sampling_rate_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("filter order must be ≥ 1".into()));
        }
        let nyquist = sampling_rate_hz / 2.0;
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
            return Err(Error::InvalidArgument(format!(
                "band edges must satisfy 0 < low < high < fs/2 (low={low_hz}, high={high_hz}, fs/2={nyquist})"
            )));
        }
        let fs2 = 2.0 * sampling_rate_hz;
        let w_low = fs2 * (PI * low_hz / sampling_rate_hz).tan();
        let w_high = fs2 * (PI * high_hz / sampling_rate_hz).tan();
        let bw = w_high - w_low;
        let w0_sq = w_low * w_high;

        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);
        let to_band = |p: Complex64| {
            let half = p * bw * 0.5;
            let disc = (half * half - w0_sq).sqrt();
            (half + disc, half - disc)
        };

        let mut sections = Vec::with_capacity(order);
        let n = order as f64;
        for k in 0..order {
            let theta = PI * (2.0 * k as f64 + 1.0 + n) / (2.0 * n);
            let proto = Complex64::from_polar(1.0, theta);
            let (r1, r2) = to_band(proto);
            if proto.im > 1e-12 {
                // The conjugate prototype pole contributes the conjugate roots.
                for r in [r1, r2] {
                    let z = bilinear(r);
                    sections.push(Biquad {
                        b: [1.0, 0.0, -1.0],
                        a: [1.0, -2.0 * z.re, z.norm_sqr()],
                    });
                }
            } else if proto.im.abs() <= 1e-12 {
                let (z1, z2) = (bilinear(r1), bilinear(r2));
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [1.0, -(z1 + z2).re, (z1 * z2).re],
                });
            }
        }
        debug_assert_eq!(sections.len(), order);

        let mut filter = ButterworthBandpass {
            order,
            sections,
            low_hz,
            high_hz,
            sampling_rate_hz,
        };
        // Unit gain at the (pre-warped) geometric center of the band.
        let center_hz = sampling_rate_hz / PI * (w0_sq.sqrt() / fs2).atan();
        let gain = filter.magnitude(center_hz);
        let per_section = gain.powf(-1.0 / order as f64);
        for s in &mut filter.sections {
            for b in &mut s.b {
                *b *= per_section;
            }
        }
        Ok(filter)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn band(&self) -> (f64, f64) {
        (self.low_hz, self.high_hz)
    }

    /// Number of samples mirrored onto each end before the two passes.
    pub fn pad_len(&self) -> usize {
        3 * 2 * self.order
    }

    /// Complex response of a single forward pass at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.sampling_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    /// Magnitude of the forward-backward (zero-phase) response: |H|².
    pub fn zero_phase_gain(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm_sqr()
    }

    fn initial_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [z1, z2] = s.step_state();
                let st = [z1 * scale, z2 * scale];
                scale *= s.dc_gain();
                st
            })
            .collect()
    }

    fn run(&self, data: &mut [f64], init: &[[f64; 2]]) {
        let x0 = data[0];
        for (s, zi) in self.sections.iter().zip(init) {
            let (mut z1, mut z2) = (zi[0] * x0, zi[1] * x0);
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in data.iter_mut() {
                let x = *v;
                let y = b0 * x + z1;
                z1 = b1 * x - a1 * y + z2;
                z2 = b2 * x - a2 * y;
                *v = y;
            }
        }
    }

    /// Forward-backward filtering with odd reflection padding of
    /// [`Self::pad_len`] samples and steady-state initial conditions.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        let n = x.len();
        if n <= pad {
            return Err(Error::TooShort(format!(
                "signal of {n} samples is too short for filter padding of {pad}"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.initial_state();
        self.run(&mut ext, &zi);
        ext.reverse();
        self.run(&mut ext, &zi);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }

    pub fn apply(&self, rec: &EegRecording) -> Result<EegRecording> {
        if rec.sampling_rate_hz() != self.sampling_rate_hz {
            return Err(Error::InvalidArgument(format!(
                "filter designed for {} Hz applied to a {} Hz recording",
                self.sampling_rate_hz,
                rec.sampling_rate_hz()
            )));
        }
        rec.map_channels(|ch| self.filtfilt(ch))
    }
}

/// Band-pass every channel between `low_hz` and `high_hz` with the default
/// zero-phase Butterworth design.
pub fn bandpass_filter(rec: &EegRecording, low_hz: f64, high_hz: f64) -> Result<EegRecording> {
    ButterworthBandpass::design(DEFAULT_FILTER_ORDER, low_hz, high_hz, rec.sampling_rate_hz())?
        .apply(rec)
}
