//! WAV ingestion and export.
//!
//! Reads PCM integer (8/16/24/32-bit) and 32-bit float files with one or two
//! channels at any rate. Exports are always stereo 32-bit float at 24 kHz.

use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use scenedit_core::{AudioBuffer, AudioError, SourceClip, SAMPLE_RATE_HZ};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("cannot read {path}: {message}")]
    Unreadable { path: PathBuf, message: String },
    #[error("unsupported WAV format in {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Audio { path: PathBuf, source: AudioError },
}

impl WavError {
    pub fn is_io(&self) -> bool {
        matches!(self, WavError::Unreadable { .. } | WavError::Write { .. })
    }
}

fn read_error(path: &Path, err: hound::Error) -> WavError {
    match err {
        hound::Error::Unsupported => WavError::UnsupportedFormat { path: path.into(), detail: "non-PCM encoding".into() },
        hound::Error::InvalidSampleFormat => {
            WavError::UnsupportedFormat { path: path.into(), detail: "sample format does not match bit depth".into() }
        }
        other => WavError::Unreadable { path: path.into(), message: other.to_string() },
    }
}

/// Decoded channels (deinterleaved, scaled to [-1, 1]) and the file's sample rate.
pub fn read_channels(path: &Path) -> Result<(Vec<Vec<f64>>, u32), WavError> {
    let mut reader = WavReader::open(path).map_err(|e| read_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if !(1..=2).contains(&channels) {
        return Err(WavError::UnsupportedFormat { path: path.into(), detail: format!("{channels} channels") });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => {
            reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>().map_err(|e| read_error(path, e))?
        }
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(|e| read_error(path, e))?
        }
        (format, bits) => {
            return Err(WavError::UnsupportedFormat { path: path.into(), detail: format!("{format:?} {bits}-bit") });
        }
    };
    let mut out = vec![Vec::with_capacity(interleaved.len() / channels); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, s) in frame.iter().enumerate() {
            out[c].push(*s);
        }
    }
    Ok((out, spec.sample_rate))
}

/// Mono 24 kHz clip: stereo files are averaged, other rates resampled.
pub fn load_clip(path: &Path, label: &str) -> Result<SourceClip, WavError> {
    let (channels, rate) = read_channels(path)?;
    SourceClip::from_channels(label, &channels, rate, path.to_string_lossy())
        .map_err(|source| WavError::Audio { path: path.into(), source })
}

/// Reads a stereo file at its own rate. Mono files are rejected.
pub fn read_stereo(path: &Path) -> Result<AudioBuffer, WavError> {
    let (mut channels, rate) = read_channels(path)?;
    if channels.len() != 2 {
        return Err(WavError::UnsupportedFormat { path: path.into(), detail: "expected 2 channels".into() });
    }
    let right = channels.pop().expect("two channels");
    let left = channels.pop().expect("two channels");
    AudioBuffer::new(left, right, rate).map_err(|source| WavError::Audio { path: path.into(), source })
}

pub fn export_spec() -> WavSpec {
    WavSpec { channels: 2, sample_rate: SAMPLE_RATE_HZ, bits_per_sample: 32, sample_format: SampleFormat::Float }
}

/// Writes `audio * scale` as stereo float32.
pub fn write_stereo_scaled(path: &Path, audio: &AudioBuffer, scale: f64) -> Result<(), WavError> {
    let werr = |e: hound::Error| WavError::Write { path: path.into(), message: e.to_string() };
    let spec = WavSpec { sample_rate: audio.sample_rate_hz(), ..export_spec() };
    let mut writer = WavWriter::create(path, spec).map_err(werr)?;
    for (l, r) in audio.left().iter().zip(audio.right()) {
        writer.write_sample((l * scale) as f32).map_err(werr)?;
        writer.write_sample((r * scale) as f32).map_err(werr)?;
    }
    writer.finalize().map_err(werr)
}

pub fn write_stereo(path: &Path, audio: &AudioBuffer) -> Result<(), WavError> {
    write_stereo_scaled(path, audio, 1.0)
}

/// Gain applied on export so the file does not clip: 1 unless the peak exceeds 1.
pub fn export_gain(audio: &AudioBuffer) -> f64 {
    let peak = audio.peak();
    if peak > 1.0 {
        1.0 / peak
    } else {
        1.0
    }
}

/// Peak-safe export; returns the gain that was applied.
pub fn export(path: &Path, audio: &AudioBuffer) -> Result<f64, WavError> {
    let gain = export_gain(audio);
    write_stereo_scaled(path, audio, gain)?;
    Ok(gain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_int(path: &Path, bits: u16, channels: u16, rate: u32, frames: &[Vec<i32>]) {
        let spec = WavSpec { channels, sample_rate: rate, bits_per_sample: bits, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(path, spec).unwrap();
        for frame in frames {
            for s in frame {
                if bits == 8 {
                    w.write_sample(*s as i8).unwrap();
                } else {
                    w.write_sample(*s).unwrap();
                }
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn integer_depths_scale_to_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        for bits in [8u16, 16, 24, 32] {
            let half = 1i64 << (bits - 2);
            let path = dir.path().join(format!("b{bits}.wav"));
            write_int(&path, bits, 1, 24_000, &[vec![half as i32], vec![-(half as i32)]]);
            let clip = load_clip(&path, "x").unwrap();
            assert_eq!(clip.samples, vec![0.5, -0.5], "{bits}-bit");
        }
    }

    #[test]
    fn opposite_stereo_downmixes_to_silence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        write_int(&path, 16, 2, 24_000, &vec![vec![16384, -16384]; 100]);
        let clip = load_clip(&path, "x").unwrap();
        assert_eq!(clip.len(), 100);
        assert!(clip.samples.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn export_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.wav");
        let audio = AudioBuffer::new(vec![0.1, -0.25, 0.3], vec![0.0, 0.5, -1.0], 24_000).unwrap();
        write_stereo(&path, &audio).unwrap();
        let back = read_stereo(&path).unwrap();
        for (a, b) in audio.left().iter().chain(audio.right()).zip(back.left().iter().chain(back.right())) {
            assert_eq!(*a as f32 as f64, *b);
        }
        assert_eq!(reader_spec(&path), export_spec());
    }

    fn reader_spec(path: &Path) -> WavSpec {
        WavReader::open(path).unwrap().spec()
    }

    #[test]
    fn export_gain_only_above_unity() {
        let loud = AudioBuffer::new(vec![2.0], vec![-0.5], 24_000).unwrap();
        assert_eq!(export_gain(&loud), 0.5);
        assert_eq!(export_gain(&loud.scaled(0.25)), 1.0);
    }

    #[test]
    fn text_file_is_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.wav");
        std::fs::write(&path, "not audio").unwrap();
        assert!(matches!(load_clip(&path, "x"), Err(WavError::Unreadable { .. })));
    }
}
