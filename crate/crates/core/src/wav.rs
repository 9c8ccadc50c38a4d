//! WAV decoding to mono `f32` and 32-bit float encoding.

use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed wav: {0}")]
    Format(#[from] hound::Error),
    #[error("unsupported wav encoding: {bits}-bit {format}")]
    Unsupported { bits: u16, format: &'static str },
}

/// Decoded audio after channel mixdown.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoAudio {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    /// Channel count of the source file before mixdown.
    pub source_channels: u16,
}

/// Averages interleaved frames into a single channel.
pub fn mix_to_mono(interleaved: &[f32], channels: usize) -> Vec<f32> {
    if channels <= 1 {
        return interleaved.to_vec();
    }
    interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect()
}

pub fn decode_mono<R: Read>(reader: R) -> Result<MonoAudio, WavError> {
    let mut reader = WavReader::new(reader)?;
    let spec = reader.spec();
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader.samples::<f32>().collect::<Result<_, _>>()?,
        (SampleFormat::Int, bits) => return Err(WavError::Unsupported { bits, format: "int" }),
        (SampleFormat::Float, bits) => return Err(WavError::Unsupported { bits, format: "float" }),
    };
    Ok(MonoAudio {
        samples: mix_to_mono(&interleaved, spec.channels as usize),
        sample_rate: spec.sample_rate,
        source_channels: spec.channels,
    })
}

pub fn read_mono(path: impl AsRef<Path>) -> Result<MonoAudio, WavError> {
    let file = std::fs::File::open(path)?;
    decode_mono(std::io::BufReader::new(file))
}

fn float_spec(sample_rate: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    }
}

pub fn encode_f32<W: Write + Seek>(out: W, samples: &[f32], sample_rate: u32) -> Result<(), WavError> {
    let mut writer = WavWriter::new(out, float_spec(sample_rate))?;
    for &s in samples {
        writer.write_sample(s)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Mono 32-bit float WAV as an in-memory byte vector.
pub fn encode_f32_bytes(samples: &[f32], sample_rate: u32) -> Result<Vec<u8>, WavError> {
    let mut cursor = Cursor::new(Vec::new());
    encode_f32(&mut cursor, samples, sample_rate)?;
    Ok(cursor.into_inner())
}

pub fn write_f32(path: impl AsRef<Path>, samples: &[f32], sample_rate: u32) -> Result<(), WavError> {
    let bytes = encode_f32_bytes(samples, sample_rate)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// 16-bit PCM writer, used for compact library fixtures.
pub fn write_i16(path: impl AsRef<Path>, samples: &[f32], sample_rate: u32, channels: u16) -> Result<(), WavError> {
    let spec = WavSpec {
        channels,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}
