//! Signal-level evaluation: log-spectral distance, GCC-PHAT interaural delay,
//! per-step residual checks and the add/remove round-trip drift experiment.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::audio::AudioBuffer;
use crate::engine::{Editor, EditorError};
use crate::fft::{power_spectrum, Complex, Fft};
use crate::plan::AtomicStep;
use crate::scene::{EventId, Scene};

/// Power floor added inside the log of [`lsd`].
pub const LSD_EPSILON: f64 = 1e-10;
/// Frames whose RMS falls below this level count as silent.
pub const SILENCE_FLOOR_DBFS: f64 = -80.0;
/// Lag search range for [`gcc_mse`], above the largest physical ITD (~15.7 samples).
pub const GCC_MAX_LAG: usize = 24;
const PHAT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub window_size: usize,
    pub hop: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        Self { window_size: 1024, hop: 256 }
    }
}

impl StftParams {
    pub fn new(window_size: usize, hop: usize) -> Self {
        assert!(window_size.is_power_of_two(), "window size must be a power of two");
        assert!(hop > 0 && hop <= window_size, "hop must be in 1..=window_size");
        Self { window_size, hop }
    }

    /// Start offsets of full frames; one zero-padded frame when the signal is shorter than a window.
    pub fn frame_starts(&self, len: usize) -> impl Iterator<Item = usize> {
        let count = if len <= self.window_size { 1 } else { (len - self.window_size) / self.hop + 1 };
        let hop = self.hop;
        (0..count).map(move |i| i * hop)
    }

    fn frame(&self, signal: &[f64], start: usize) -> Vec<f64> {
        let end = (start + self.window_size).min(signal.len());
        let mut out = signal[start..end].to_vec();
        out.resize(self.window_size, 0.0);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("buffers differ: {a} vs {b} frames")]
    LengthMismatch { a: usize, b: usize },
    #[error("sample rates differ: {a} vs {b} Hz")]
    RateMismatch { a: u32, b: u32 },
    #[error("every frame is silent")]
    NoVoicedFrames,
}

fn check_shapes(a: &AudioBuffer, b: &AudioBuffer) -> Result<(), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.sample_rate_hz() != b.sample_rate_hz() {
        return Err(MetricError::RateMismatch { a: a.sample_rate_hz(), b: b.sample_rate_hz() });
    }
    Ok(())
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * libm::cos(2.0 * core::f64::consts::PI * i as f64 / n as f64))
        .collect()
}

fn lsd_channel(x: &[f64], y: &[f64], params: &StftParams, fft: &Fft, window: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut frames = 0usize;
    for start in params.frame_starts(x.len()) {
        let windowed = |s: &[f64]| -> Vec<f64> { params.frame(s, start).iter().zip(window).map(|(a, w)| a * w).collect() };
        let px = power_spectrum(fft, &windowed(x));
        let py = power_spectrum(fft, &windowed(y));
        let mean_sq = px
            .iter()
            .zip(&py)
            .map(|(a, b)| {
                let d = 10.0 * libm::log10((a + LSD_EPSILON) / (b + LSD_EPSILON));
                d * d
            })
            .sum::<f64>()
            / px.len() as f64;
        total += libm::sqrt(mean_sq);
        frames += 1;
    }
    total / frames as f64
}

/// Log-spectral distance in dB, averaged over frames and then channels.
pub fn lsd(a: &AudioBuffer, b: &AudioBuffer) -> Result<f64, MetricError> {
    lsd_with(a, b, &StftParams::default())
}

pub fn lsd_with(a: &AudioBuffer, b: &AudioBuffer, params: &StftParams) -> Result<f64, MetricError> {
    check_shapes(a, b)?;
    let fft = Fft::new(params.window_size);
    let window = hann(params.window_size);
    let left = lsd_channel(a.left(), b.left(), params, &fft, &window);
    let right = lsd_channel(a.right(), b.right(), params, &fft, &window);
    Ok((left + right) / 2.0)
}

/// Result of one GCC-PHAT delay estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tdoa {
    /// Positive when the left channel leads.
    pub lag: i64,
    /// Both frames were below the energy floor; `lag` is then 0.
    pub silent: bool,
}

fn below_floor(frame: &[f64]) -> bool {
    let floor = libm::pow(10.0, SILENCE_FLOOR_DBFS / 20.0);
    crate::audio::rms(frame) < floor
}

/// Reusable GCC-PHAT estimator for one frame length.
pub struct GccPhat {
    frame_len: usize,
    max_lag: usize,
    fft: Fft,
}

impl GccPhat {
    pub fn new(frame_len: usize, max_lag: usize) -> Self {
        assert!(frame_len >= 2 * max_lag, "frame shorter than twice the lag range");
        // Zero-padding to >= 2N makes the correlation linear rather than circular.
        let n = (2 * frame_len).next_power_of_two();
        Self { frame_len, max_lag, fft: Fft::new(n) }
    }

    pub fn estimate(&self, left: &[f64], right: &[f64]) -> Tdoa {
        assert_eq!(left.len(), self.frame_len);
        assert_eq!(right.len(), self.frame_len);
        if below_floor(left) && below_floor(right) {
            return Tdoa { lag: 0, silent: true };
        }
        let n = self.fft.len();
        // Both real frames go through one complex transform: z = l + i*r.
        let mut z = vec![Complex::ZERO; n];
        for ((b, l), r) in z.iter_mut().zip(left).zip(right) {
            *b = Complex::new(*l, *r);
        }
        self.fft.forward(&mut z);
        let mut cross: Vec<Complex> = (0..n)
            .map(|k| {
                let (a, b) = (z[k], z[(n - k) % n].conj());
                let xl = (a + b).scale(0.5);
                let d = a - b;
                let xr = Complex::new(d.im * 0.5, -d.re * 0.5);
                let g = xr * xl.conj();
                g.scale(1.0 / f64::max(libm::sqrt(g.norm_sqr()), PHAT_FLOOR))
            })
            .collect();
        self.fft.inverse(&mut cross);
        let max_lag = self.max_lag as i64;
        let mut best = (0i64, f64::NEG_INFINITY);
        for lag in -max_lag..=max_lag {
            let v = cross[lag.rem_euclid(n as i64) as usize].re;
            // Ties prefer the smaller |lag|, then the negative side.
            if v > best.1 || (v == best.1 && lag.abs() < best.0.abs()) {
                best = (lag, v);
            }
        }
        Tdoa { lag: best.0, silent: false }
    }
}

/// GCC-PHAT delay between two equal-length frames, searched in `[-max_lag, max_lag]`.
pub fn gcc_phat_tdoa(left: &[f64], right: &[f64], max_lag: usize) -> Tdoa {
    assert_eq!(left.len(), right.len(), "frames differ in length");
    GccPhat::new(left.len(), max_lag).estimate(left, right)
}

/// Per-frame interaural delays of a stereo buffer.
pub fn tdoa_track(audio: &AudioBuffer, params: &StftParams, max_lag: usize) -> Vec<Tdoa> {
    let gcc = GccPhat::new(params.window_size, max_lag);
    params
        .frame_starts(audio.len())
        .map(|start| gcc.estimate(&params.frame(audio.left(), start), &params.frame(audio.right(), start)))
        .collect()
}

/// Mean squared difference (samples^2) of the per-frame delays of two buffers.
pub fn gcc_mse(a: &AudioBuffer, b: &AudioBuffer) -> Result<f64, MetricError> {
    check_shapes(a, b)?;
    let params = StftParams::default();
    let ta = tdoa_track(a, &params, GCC_MAX_LAG);
    let tb = tdoa_track(b, &params, GCC_MAX_LAG);
    let diffs: Vec<f64> = ta
        .iter()
        .zip(&tb)
        .filter(|(x, y)| !x.silent && !y.silent)
        .map(|(x, y)| (x.lag - y.lag) as f64)
        .collect();
    if diffs.is_empty() {
        return Err(MetricError::NoVoicedFrames);
    }
    Ok(diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64)
}

/// Audio change a step should cause: added or changed contributions minus removed or old ones.
pub fn expected_step_delta(before: &Scene, after: &Scene, edited: &[EventId]) -> AudioBuffer {
    let mut delta = AudioBuffer::silent(after.len_samples());
    for id in edited {
        if let Some(e) = after.event(id) {
            delta.mix_in(&e.render());
        }
        if let Some(e) = before.event(id) {
            delta.mix_in(&e.render().scaled(-1.0));
        }
    }
    delta
}

/// Largest per-sample gap between `after - before` and `expected_delta`.
pub fn residual_error(before: &AudioBuffer, after: &AudioBuffer, expected_delta: &AudioBuffer) -> f64 {
    after.difference(before).max_abs_diff(expected_delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripResult {
    pub rounds: usize,
    pub lsd_per_round: Vec<f64>,
    pub editor_id: String,
    pub label_used: String,
}

impl RoundTripResult {
    /// `round,lsd` rows, rounds numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,lsd\n");
        for (i, v) in self.lsd_per_round.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, v));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriftError {
    #[error("round {round}: {source}")]
    Editor { round: usize, source: EditorError },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Adds then removes `pseudo_label` through `editor` for `rounds` rounds,
/// recording the LSD to the original after each round.
pub fn roundtrip_drift(
    editor: &mut dyn Editor,
    audio: &AudioBuffer,
    pseudo_label: &str,
    rounds: usize,
) -> Result<RoundTripResult, DriftError> {
    let add = AtomicStep::add(pseudo_label, None, None);
    let remove = AtomicStep::remove(pseudo_label);
    let mut current = audio.clone();
    let mut lsd_per_round = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        for step in [&add, &remove] {
            current = editor.edit(&current, step).map_err(|source| DriftError::Editor { round, source })?;
        }
        lsd_per_round.push(lsd(&current, audio)?);
    }
    Ok(RoundTripResult { rounds, lsd_per_round, editor_id: editor.id(), label_used: pseudo_label.into() })
}
