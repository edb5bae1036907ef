//! Polyphase windowed-sinc resampling.
//!
//! Each output sample is a 64-tap dot product against the input, with taps
//! drawn from a Kaiser-windowed sinc whose cutoff follows the lower of the two
//! Nyquist frequencies. Ratios are reduced to `up / down` with a gcd; the
//! per-phase coefficient table is precomputed unless the phase count is large.

use alloc::vec::Vec;
use core::f64::consts::PI;

pub const TAPS_PER_PHASE: usize = 64;
const HALF_TAPS: usize = TAPS_PER_PHASE / 2;
const KAISER_BETA: f64 = 8.6;
const MAX_TABLE_PHASES: usize = 4096;

#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    cutoff: f64,
    // `up` rows of TAPS_PER_PHASE coefficients, or empty when computed on the fly.
    table: Vec<f64>,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        libm::sin(PI * x) / (PI * x)
    }
}

impl Resampler {
    pub fn new(from_hz: u32, to_hz: u32) -> Self {
        assert!(from_hz > 0 && to_hz > 0, "sample rates must be positive");
        let g = gcd(from_hz as usize, to_hz as usize);
        let up = to_hz as usize / g;
        let down = from_hz as usize / g;
        let cutoff = f64::min(1.0, up as f64 / down as f64);
        let mut resampler = Self { up, down, cutoff, table: Vec::new() };
        if up <= MAX_TABLE_PHASES {
            let mut table = Vec::with_capacity(up * TAPS_PER_PHASE);
            for phase in 0..up {
                table.extend_from_slice(&resampler.phase_taps(phase));
            }
            resampler.table = table;
        }
        resampler
    }

    /// Normalized taps for output positions whose fractional input offset is `phase / up`.
    fn phase_taps(&self, phase: usize) -> [f64; TAPS_PER_PHASE] {
        let frac = phase as f64 / self.up as f64;
        let i0_beta = bessel_i0(KAISER_BETA);
        let mut taps = [0.0; TAPS_PER_PHASE];
        let mut sum = 0.0;
        for (k, tap) in taps.iter_mut().enumerate() {
            // Distance from the output instant to input sample `floor(t) - 31 + k`.
            let tau = frac + (HALF_TAPS - 1) as f64 - k as f64;
            let ratio = tau / HALF_TAPS as f64;
            let window = bessel_i0(KAISER_BETA * libm::sqrt(f64::max(0.0, 1.0 - ratio * ratio))) / i0_beta;
            *tap = self.cutoff * sinc(self.cutoff * tau) * window;
            sum += *tap;
        }
        for tap in &mut taps {
            *tap /= sum;
        }
        taps
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len * self.up + self.down / 2) / self.down
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let out_len = self.output_len(input.len());
        let mut out = Vec::with_capacity(out_len);
        let mut scratch;
        for m in 0..out_len {
            let pos = m * self.down;
            let base = pos / self.up;
            let phase = pos % self.up;
            let taps: &[f64] = if self.table.is_empty() {
                scratch = self.phase_taps(phase);
                &scratch
            } else {
                &self.table[phase * TAPS_PER_PHASE..(phase + 1) * TAPS_PER_PHASE]
            };
            let first = base as isize - (HALF_TAPS as isize - 1);
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                let j = first + k as isize;
                if j >= 0 && (j as usize) < input.len() {
                    acc += tap * input[j as usize];
                }
            }
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::{magnitude_spectrum, Fft};

    fn sine(freq: f64, rate: u32, seconds: f64) -> Vec<f64> {
        let n = (rate as f64 * seconds) as usize;
        (0..n).map(|i| libm::sin(2.0 * PI * freq * i as f64 / rate as f64)).collect()
    }

    fn dominant_bin_hz(signal: &[f64], rate: u32) -> f64 {
        let n = 16_384;
        let frame: Vec<f64> = signal[4_000..4_000 + n].to_vec();
        let spectrum = magnitude_spectrum(&Fft::new(n), &frame);
        let (bin, _) = spectrum
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
        bin as f64 * rate as f64 / n as f64
    }

    #[test]
    fn downsampled_sine_keeps_its_frequency() {
        let out = Resampler::new(48_000, 24_000).process(&sine(1_000.0, 48_000, 1.0));
        assert_eq!(out.len(), 24_000);
        let peak = dominant_bin_hz(&out, 24_000);
        assert!((peak - 1_000.0).abs() <= 24_000.0 / 16_384.0, "peak at {peak}");
    }

    #[test]
    fn upsampled_sine_keeps_its_frequency_and_level() {
        let out = Resampler::new(22_050, 24_000).process(&sine(440.0, 22_050, 1.0));
        assert_eq!(out.len(), 24_000);
        let peak = dominant_bin_hz(&out, 24_000);
        assert!((peak - 440.0).abs() <= 24_000.0 / 16_384.0, "peak at {peak}");
        let mid = &out[2_000..22_000];
        let rms = libm::sqrt(mid.iter().map(|s| s * s).sum::<f64>() / mid.len() as f64);
        assert!((rms - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3, "rms {rms}");
    }

    #[test]
    fn dc_passes_at_unity_gain() {
        let out = Resampler::new(44_100, 24_000).process(&[0.5; 44_100]);
        assert!(out[100..out.len() - 100].iter().all(|s| (s - 0.5).abs() < 1e-12));
    }

    #[test]
    fn large_phase_count_matches_table_path() {
        let input = sine(300.0, 24_001, 0.05);
        let on_the_fly = Resampler::new(24_001, 24_000);
        assert!(on_the_fly.table.is_empty());
        let out = on_the_fly.process(&input);
        assert_eq!(out.len(), on_the_fly.output_len(input.len()));
        // Output sample m sits at m / 24000 s, so it must match the same sine sampled at 24 kHz.
        let expected = sine(300.0, 24_000, 0.05);
        for i in 100..out.len() - 100 {
            assert!((out[i] - expected[i]).abs() < 1e-3, "{i}: {} vs {}", out[i], expected[i]);
        }
    }
}
