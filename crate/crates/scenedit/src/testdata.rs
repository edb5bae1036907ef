//! Small synthetic clip catalog for tests and demos.
//!
//! Every label gets two clips built from a label-specific tone, a burst
//! envelope and broadband noise. Files vary in length (4, 10 and 12 s),
//! encoding (16-bit int, float32) and layout (mono, stereo, 48 kHz) so that
//! ingestion, fitting and resampling are all exercised.

use std::f64::consts::PI;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use rand::{Rng, SeedableRng};
use scenedit_core::SeededRng;

pub const TEST_CATALOG_LABELS: &[&str] = &[
    "dog_bark",
    "car_engine",
    "rain",
    "bird_chirp",
    "clock_tick",
    "wind",
    "crowd_chatter",
    "rooster_crow",
    "church_bell",
    "footsteps",
    "keyboard_typing",
    "sea_waves",
    "thunder",
    "crickets_chirping",
    "siren",
    "children_playing",
];

pub const CLIPS_PER_LABEL: usize = 2;

/// Mono test signal; deterministic in `(label_index, clip_index)`.
pub fn synth_signal(label_index: usize, clip_index: usize, rate: u32, seconds: f64) -> Vec<f64> {
    let mut rng = SeededRng::seed_from_u64((label_index * 1000 + clip_index) as u64);
    let freq = 180.0 + 140.0 * label_index as f64 + 37.0 * clip_index as f64;
    let burst_hz = 0.5 + 0.3 * (label_index % 5) as f64;
    let n = (rate as f64 * seconds).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let envelope = 0.55 + 0.45 * (2.0 * PI * burst_hz * t).sin();
            let tone = 0.3 * (2.0 * PI * freq * t).sin() + 0.1 * (2.0 * PI * 2.7 * freq * t).sin();
            let noise: f64 = rng.gen_range(-0.15..0.15);
            envelope * (tone + noise)
        })
        .collect()
}

fn write_wav(path: &Path, spec: WavSpec, channels: &[Vec<f64>]) -> Result<(), hound::Error> {
    let mut w = WavWriter::create(path, spec)?;
    for i in 0..channels[0].len() {
        for ch in channels {
            match spec.sample_format {
                SampleFormat::Float => w.write_sample(ch[i] as f32)?,
                SampleFormat::Int => w.write_sample((ch[i] * 32767.0).round() as i16)?,
            }
        }
    }
    w.finalize()
}

/// Writes `<root>/<label>/clip<k>.wav` for every test label.
pub fn write_test_catalog(root: &Path) -> Result<(), hound::Error> {
    for (j, label) in TEST_CATALOG_LABELS.iter().enumerate() {
        let dir = root.join(label);
        std::fs::create_dir_all(&dir)?;
        for c in 0..CLIPS_PER_LABEL {
            let path = dir.join(format!("clip{c}.wav"));
            let int16 = |channels, rate| WavSpec { channels, sample_rate: rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
            match (j + c) % 3 {
                0 => write_wav(&path, int16(1, 24_000), &[synth_signal(j, c, 24_000, 10.0)])?,
                1 => {
                    let s = synth_signal(j, c, 24_000, 4.0);
                    let spec = WavSpec { channels: 2, sample_rate: 24_000, bits_per_sample: 32, sample_format: SampleFormat::Float };
                    write_wav(&path, spec, &[s.clone(), s])?;
                }
                _ => write_wav(&path, int16(1, 48_000), &[synth_signal(j, c, 48_000, 12.0)])?,
            }
        }
    }
    Ok(())
}
