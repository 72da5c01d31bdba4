//! WAV input and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Sample encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavFormat {
    Int16,
    Int24,
    #[default]
    Float32,
}

/// Mono audio in [-1, 1] with its sample rate in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// Reads 16/24-bit PCM or 32-bit float WAV, averaging all channels.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Audio> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedAudio("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / (1u32 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (format, bits) => {
            return Err(Error::UnsupportedAudio(format!("{bits}-bit {format:?} samples")));
        }
    };
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Ok(Audio {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Writes a mono WAV. Samples outside [-1, 1] are clamped; the number of
/// clamped samples is returned.
pub fn write_wav(path: impl AsRef<Path>, signal: &[f64], sample_rate: u32, format: WavFormat) -> Result<usize> {
    if sample_rate == 0 {
        return Err(Error::InvalidParameter("sample rate must be positive".into()));
    }
    let (bits, sample_format) = match format {
        WavFormat::Int16 => (16, SampleFormat::Int),
        WavFormat::Int24 => (24, SampleFormat::Int),
        WavFormat::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: bits,
        sample_format,
    };
    let mut writer = WavWriter::create(path, spec)?;
    let mut clipped = 0;
    for &v in signal {
        let c = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
        if c != v {
            clipped += 1;
        }
        match format {
            WavFormat::Float32 => writer.write_sample(c as f32)?,
            WavFormat::Int16 | WavFormat::Int24 => {
                let full = (1i64 << (bits - 1)) as f64;
                let q = (c * full).round().clamp(-full, full - 1.0) as i32;
                writer.write_sample(q)?
            }
        }
    }
    writer.finalize()?;
    Ok(clipped)
}
