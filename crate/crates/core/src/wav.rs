//! Mono WAV file I/O (16-bit integer PCM and 32-bit float).
//!
//! All audio in the toolkit flows through these two functions so that
//! encoding decisions stay in one place. Multichannel files are rejected
//! rather than downmixed: a silent downmix policy would change SNR
//! semantics downstream.

use std::path::Path;

use crate::error::WavError;

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    /// 16-bit signed integer PCM. Round trips within one quantization step.
    Int16,
    /// 32-bit IEEE float. Round trips bit-exact at f32 precision.
    Float32,
}

/// Read a mono WAV file, returning samples in [-1, 1] and the sample rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, u32), WavError> {
    let reader = hound::WavReader::open(path).map_err(|e| decode_err(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(WavError::Multichannel {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| decode_err(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| decode_err(path, e))?,
        (format, bits) => {
            return Err(WavError::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    };
    Ok((samples, spec.sample_rate))
}

/// Write a mono WAV file. Samples must lie in [-1, 1] and be finite.
pub fn write_wav(
    path: &Path,
    samples: &[f64],
    sample_rate: u32,
    format: SampleFormat,
) -> Result<(), WavError> {
    if let Some(index) = samples
        .iter()
        .position(|&x| !x.is_finite() || !(-1.0..=1.0).contains(&x))
    {
        return Err(WavError::SampleOutOfRange {
            path: path.to_path_buf(),
            index,
        });
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: match format {
            SampleFormat::Int16 => 16,
            SampleFormat::Float32 => 32,
        },
        sample_format: match format {
            SampleFormat::Int16 => hound::SampleFormat::Int,
            SampleFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| decode_err(path, e))?;
    match format {
        SampleFormat::Int16 => {
            for &x in samples {
                let q = (x * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q).map_err(|e| decode_err(path, e))?;
            }
        }
        SampleFormat::Float32 => {
            for &x in samples {
                writer
                    .write_sample(x as f32)
                    .map_err(|e| decode_err(path, e))?;
            }
        }
    }
    writer.finalize().map_err(|e| decode_err(path, e))?;
    Ok(())
}

fn decode_err(path: &Path, e: hound::Error) -> WavError {
    match e {
        hound::Error::IoError(source) => WavError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => WavError::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}
