//! Sample containers, duration fitting and loudness normalization.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::resample::Resampler;

/// Internal sample rate of every buffer and clip.
pub const SAMPLE_RATE_HZ: u32 = 24_000;
/// Canonical clip duration in seconds.
pub const CANONICAL_SECONDS: f64 = 10.0;
/// Canonical clip length in samples (10 s at 24 kHz).
pub const CANONICAL_LEN: usize = 240_000;
/// RMS level every catalog clip is normalized to before scene gains apply.
pub const REFERENCE_DBFS: f64 = -20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AudioError {
    #[error("channel length mismatch: left {left}, right {right}")]
    ChannelMismatch { left: usize, right: usize },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("clip is silent; cannot normalize")]
    SilentClip,
    #[error("unsupported sample rate {0} Hz")]
    UnsupportedRate(u32),
    #[error("expected 1 or 2 channels, got {0}")]
    UnsupportedChannels(usize),
}

/// Fixed-rate two-channel sample block.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    left: Vec<f64>,
    right: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(left: Vec<f64>, right: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if left.len() != right.len() {
            return Err(AudioError::ChannelMismatch { left: left.len(), right: right.len() });
        }
        if let Some(index) = left.iter().chain(right.iter()).position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite { index: index % left.len().max(1) });
        }
        Ok(Self { left, right, sample_rate_hz })
    }

    /// Buffer of `len` zero frames at the internal rate.
    pub fn silent(len: usize) -> Self {
        Self { left: vec![0.0; len], right: vec![0.0; len], sample_rate_hz: SAMPLE_RATE_HZ }
    }

    pub(crate) fn from_channels_unchecked(left: Vec<f64>, right: Vec<f64>) -> Self {
        debug_assert_eq!(left.len(), right.len());
        Self { left, right, sample_rate_hz: SAMPLE_RATE_HZ }
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn channels(&self) -> [&[f64]; 2] {
        [&self.left, &self.right]
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    /// Number of frames.
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz as f64
    }

    /// Sample-wise sum into `self`. Lengths must match.
    pub fn mix_in(&mut self, other: &AudioBuffer) {
        assert_eq!(self.len(), other.len(), "mixing buffers of different length");
        for (a, b) in self.left.iter_mut().zip(&other.left) {
            *a += b;
        }
        for (a, b) in self.right.iter_mut().zip(&other.right) {
            *a += b;
        }
    }

    /// Sample-wise `self - other`.
    pub fn difference(&self, other: &AudioBuffer) -> AudioBuffer {
        assert_eq!(self.len(), other.len(), "subtracting buffers of different length");
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        AudioBuffer::from_channels_unchecked(sub(&self.left, &other.left), sub(&self.right, &other.right))
    }

    pub fn scaled(&self, factor: f64) -> AudioBuffer {
        let scale = |c: &[f64]| c.iter().map(|s| s * factor).collect::<Vec<_>>();
        AudioBuffer {
            left: scale(&self.left),
            right: scale(&self.right),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn peak(&self) -> f64 {
        self.left.iter().chain(&self.right).fold(0.0, |m, s| f64::max(m, s.abs()))
    }

    /// RMS over both channels.
    pub fn rms(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let energy: f64 = self.left.iter().chain(&self.right).map(|s| s * s).sum();
        libm::sqrt(energy / (2 * self.len()) as f64)
    }

    /// Largest per-sample absolute difference over both channels.
    pub fn max_abs_diff(&self, other: &AudioBuffer) -> f64 {
        assert_eq!(self.len(), other.len());
        self.left
            .iter()
            .zip(&other.left)
            .chain(self.right.iter().zip(&other.right))
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Mono single-event source clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceClip {
    pub label: String,
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub origin_path: String,
}

impl SourceClip {
    /// Builds an internal-rate mono clip from decoded channels.
    ///
    /// Stereo input is downmixed by channel average and any other rate is
    /// resampled to 24 kHz.
    pub fn from_channels(
        label: impl Into<String>,
        channels: &[Vec<f64>],
        sample_rate_hz: u32,
        origin_path: impl Into<String>,
    ) -> Result<Self, AudioError> {
        let mono = match channels {
            [mono] => mono.clone(),
            [l, r] => {
                if l.len() != r.len() {
                    return Err(AudioError::ChannelMismatch { left: l.len(), right: r.len() });
                }
                l.iter().zip(r).map(|(a, b)| (a + b) * 0.5).collect()
            }
            other => return Err(AudioError::UnsupportedChannels(other.len())),
        };
        if let Some(index) = mono.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite { index });
        }
        if sample_rate_hz == 0 {
            return Err(AudioError::UnsupportedRate(0));
        }
        let samples = if sample_rate_hz == SAMPLE_RATE_HZ {
            mono
        } else {
            Resampler::new(sample_rate_hz, SAMPLE_RATE_HZ).process(&mono)
        };
        Ok(Self {
            label: label.into(),
            samples,
            sample_rate_hz: SAMPLE_RATE_HZ,
            origin_path: origin_path.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

pub(crate) fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let energy: f64 = samples.iter().map(|s| s * s).sum();
    libm::sqrt(energy / samples.len() as f64)
}

/// Number of samples for `seconds` at the internal rate.
pub fn seconds_to_samples(seconds: f64) -> usize {
    libm::round(seconds * SAMPLE_RATE_HZ as f64) as usize
}

/// Trims (keeping the head) or zero-pads the clip to exactly `target_seconds`.
pub fn fit_duration(clip: &SourceClip, target_seconds: f64) -> SourceClip {
    assert!(target_seconds > 0.0, "target duration must be positive");
    let target = libm::round(target_seconds * clip.sample_rate_hz as f64) as usize;
    let mut samples = clip.samples.clone();
    samples.resize(target, 0.0);
    SourceClip { samples, ..clip.clone() }
}

/// Scales the clip so its RMS equals `10^(target_dbfs / 20)`.
pub fn normalize_rms(clip: &SourceClip, target_dbfs: f64) -> Result<SourceClip, AudioError> {
    let current = clip.rms();
    if current == 0.0 {
        return Err(AudioError::SilentClip);
    }
    let factor = db_to_linear(target_dbfs) / current;
    let samples = clip.samples.iter().map(|s| s * factor).collect();
    Ok(SourceClip { samples, ..clip.clone() })
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(samples: Vec<f64>) -> SourceClip {
        SourceClip { label: "x".into(), samples, sample_rate_hz: SAMPLE_RATE_HZ, origin_path: String::new() }
    }

    #[test]
    fn fit_trims_long_clip_from_the_front() {
        let long = clip((0..12 * 24_000).map(|i| i as f64).collect());
        let fitted = fit_duration(&long, 10.0);
        assert_eq!(fitted.len(), CANONICAL_LEN);
        assert_eq!(&fitted.samples[..], &long.samples[..CANONICAL_LEN]);
    }

    #[test]
    fn fit_is_identity_at_target_length() {
        let exact = clip((0..CANONICAL_LEN).map(|i| (i % 7) as f64).collect());
        assert_eq!(fit_duration(&exact, 10.0), exact);
    }

    #[test]
    fn fit_pads_short_clip_with_zeros() {
        let short = clip(vec![0.25; 4 * 24_000]);
        let fitted = fit_duration(&short, 10.0);
        assert_eq!(fitted.len(), CANONICAL_LEN);
        assert!(fitted.samples[..96_000].iter().all(|&s| s == 0.25));
        assert_eq!(fitted.samples[96_000..].len(), 144_000);
        assert!(fitted.samples[96_000..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn normalize_hits_target_rms() {
        let c = clip(vec![0.5, -0.5, 0.5, -0.5]);
        assert!((c.rms() - 0.5).abs() < 1e-15);
        let n = normalize_rms(&c, -20.0).unwrap();
        assert!((n.rms() - 0.1).abs() / 0.1 < 1e-6);
        let again = normalize_rms(&n, -20.0).unwrap();
        assert!((again.rms() - n.rms()).abs() / n.rms() < 1e-6);
    }

    #[test]
    fn normalize_rejects_silence() {
        assert_eq!(normalize_rms(&clip(vec![0.0; 16]), -20.0), Err(AudioError::SilentClip));
    }

    #[test]
    fn opposite_constant_channels_downmix_to_zero() {
        let c = SourceClip::from_channels("x", &[vec![0.5; 100], vec![-0.5; 100]], SAMPLE_RATE_HZ, "p").unwrap();
        assert!(c.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn buffer_rejects_nan_and_mismatch() {
        assert!(matches!(AudioBuffer::new(vec![0.0; 3], vec![0.0; 2], SAMPLE_RATE_HZ), Err(AudioError::ChannelMismatch { .. })));
        assert!(matches!(AudioBuffer::new(vec![0.0, f64::NAN], vec![0.0; 2], SAMPLE_RATE_HZ), Err(AudioError::NonFinite { .. })));
    }
}
