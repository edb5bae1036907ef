//! Rendering a mono event onto two channels with level and time cues.
//!
//! Level: constant-power panning over a pan angle that spans
//! `[pi/12, 5pi/12]` for azimuths `[-90, +90]`, so a source hard to one side
//! still reaches the far ear about 11.4 dB down.
//! Time: Woodworth's spherical-head delay, rounded to whole samples and
//! applied to the far channel (zero-padded at the head, truncated at the tail).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::{db_to_linear, AudioBuffer, SourceClip, SAMPLE_RATE_HZ};

pub const HEAD_RADIUS_M: f64 = 0.0875;
pub const SPEED_OF_SOUND_M_S: f64 = 343.0;
/// Fraction of the full `[0, pi/2]` pan range reached at +/-90 degrees.
pub const PAN_WIDTH: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Front,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Left, Direction::Front, Direction::Right];

    pub fn azimuth_deg(self) -> f64 {
        match self {
            Direction::Left => -90.0,
            Direction::Front => 0.0,
            Direction::Right => 90.0,
        }
    }

    pub fn from_azimuth(azimuth_deg: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.azimuth_deg() == azimuth_deg)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Front => "front",
            Direction::Right => "right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownDirection;

impl FromStr for Direction {
    type Err = UnknownDirection;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or(UnknownDirection)
    }
}

/// Gain in decibels.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainDb(pub f64);

impl GainDb {
    pub const UNITY: GainDb = GainDb(0.0);

    pub fn linear(self) -> f64 {
        db_to_linear(self.0)
    }
}

impl fmt::Display for GainDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Interaural delay in (fractional) samples at 24 kHz.
///
/// Positive values mean the right ear leads, i.e. the left channel is delayed.
pub fn itd_samples(azimuth_deg: f64) -> f64 {
    let theta = azimuth_deg * PI / 180.0;
    HEAD_RADIUS_M / SPEED_OF_SOUND_M_S * (theta + libm::sin(theta)) * SAMPLE_RATE_HZ as f64
}

/// Whole-sample delay actually applied for `azimuth_deg`.
pub fn itd_whole_samples(azimuth_deg: f64) -> i64 {
    libm::round(itd_samples(azimuth_deg)) as i64
}

/// Constant-power `(left, right)` gains. Front gives bit-identical gains.
pub fn pan_gains(azimuth_deg: f64) -> (f64, f64) {
    let phi = FRAC_PI_4 * (1.0 + PAN_WIDTH * azimuth_deg / 90.0);
    (libm::cos(phi), libm::cos(FRAC_PI_2 - phi))
}

fn delayed(samples: &[f64], delay: usize, gain: f64) -> Vec<f64> {
    let n = samples.len();
    let mut out = vec![0.0; n];
    if delay < n {
        for (o, s) in out[delay..].iter_mut().zip(samples) {
            *o = s * gain;
        }
    }
    out
}

/// Spatializes at an arbitrary azimuth in `[-90, 90]`.
pub fn spatialize_azimuth(clip: &SourceClip, azimuth_deg: f64, gain_db: GainDb) -> AudioBuffer {
    assert!((-90.0..=90.0).contains(&azimuth_deg), "azimuth out of range");
    let g = gain_db.linear();
    let (pan_l, pan_r) = pan_gains(azimuth_deg);
    let (gl, gr) = (g * pan_l, g * pan_r);
    let delay = itd_whole_samples(azimuth_deg);
    let left = delayed(&clip.samples, delay.max(0) as usize, gl);
    let right = delayed(&clip.samples, (-delay).max(0) as usize, gr);
    AudioBuffer::from_channels_unchecked(left, right)
}

pub fn spatialize(clip: &SourceClip, direction: Direction, gain_db: GainDb) -> AudioBuffer {
    spatialize_azimuth(clip, direction.azimuth_deg(), gain_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(at: usize, len: usize) -> SourceClip {
        let mut samples = vec![0.0; len];
        samples[at] = 1.0;
        SourceClip { label: "click".into(), samples, sample_rate_hz: SAMPLE_RATE_HZ, origin_path: "".into() }
    }

    fn argmax(x: &[f64]) -> usize {
        x.iter().enumerate().fold(0, |best, (i, v)| if v.abs() > x[best].abs() { i } else { best })
    }

    /// Brute-force cross-correlation argmax: lag `k` maximizing sum l[n] r[n + k].
    fn xcorr_lag(l: &[f64], r: &[f64], max_lag: i64) -> i64 {
        let score = |k: i64| -> f64 {
            (0..l.len() as i64)
                .filter(|n| n + k >= 0 && n + k < r.len() as i64)
                .map(|n| l[n as usize] * r[(n + k) as usize])
                .sum()
        };
        (-max_lag..=max_lag).fold(-max_lag, |best, k| if score(k) > score(best) { k } else { best })
    }

    #[test]
    fn itd_matches_woodworth_values() {
        assert_eq!(itd_samples(0.0), 0.0);
        let expected = 0.0875 / 343.0 * (PI / 2.0 + 1.0) * 24_000.0;
        assert!((itd_samples(90.0) - expected).abs() < 1e-12);
        assert!((itd_samples(90.0) - 15.74).abs() < 0.01);
        assert_eq!(itd_samples(-90.0), -itd_samples(90.0));
        assert_eq!(itd_whole_samples(90.0), 16);
    }

    #[test]
    fn front_is_symmetric() {
        let clip = SourceClip {
            label: "n".into(),
            samples: (0..4_000).map(|i| libm::sin(i as f64 * 0.731) * 0.3).collect(),
            sample_rate_hz: SAMPLE_RATE_HZ,
            origin_path: "".into(),
        };
        let out = spatialize(&clip, Direction::Front, GainDb(0.0));
        assert_eq!(out.left(), out.right());
        assert_eq!(xcorr_lag(out.left(), out.right(), 20), 0);
    }

    #[test]
    fn left_impulse_delays_the_right_channel() {
        let out = spatialize(&impulse(1_000, 4_000), Direction::Left, GainDb(0.0));
        let delta = itd_whole_samples(-90.0).unsigned_abs() as usize;
        assert_eq!(argmax(out.left()), 1_000);
        assert_eq!(argmax(out.right()), 1_000 + delta);
        assert_eq!(xcorr_lag(out.left(), out.right(), 30), delta as i64);
        assert!(out.left()[1_000] > out.right()[1_000 + delta]);
    }

    #[test]
    fn gain_scales_both_channels() {
        let clip = impulse(10, 100);
        let base = spatialize(&clip, Direction::Right, GainDb(0.0));
        let loud = spatialize(&clip, Direction::Right, GainDb(6.0));
        let ratio = libm::pow(10.0, 6.0 / 20.0);
        assert!((ratio - 1.99526).abs() < 1e-5);
        for (a, b) in base.left().iter().zip(loud.left()).chain(base.right().iter().zip(loud.right())) {
            if *a != 0.0 {
                assert!((b / a - ratio).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pan_law_preserves_power() {
        for az in [-90.0, -45.0, 0.0, 30.0, 90.0] {
            let (l, r) = pan_gains(az);
            assert!((l * l + r * r - 1.0).abs() < 1e-12);
        }
        let (l, r) = pan_gains(-90.0);
        assert!(l > r && r > 0.0);
    }

    #[test]
    fn direction_parses_case_insensitively() {
        assert_eq!("RIGHT".parse::<Direction>(), Ok(Direction::Right));
        assert!("up".parse::<Direction>().is_err());
        assert_eq!(Direction::from_azimuth(-90.0), Some(Direction::Left));
    }
}
