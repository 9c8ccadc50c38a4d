//! Windowed complex spectrogram and log-power features.
//!
//! Each frame takes `WINDOW_LEN` samples starting at `k * HOP_LEN` (no centre
//! padding), applies a periodic Hann window, zero-pads to `FFT_SIZE` and keeps
//! the `NUM_BINS` non-negative frequency bins. With the default sizes an
//! input of `T >= 1024` samples yields `floor((T - 1024) / 256) + 1` frames.
//!
//! Log power is `10 * log10(|z|^2 + LOG_EPSILON)`, floored at -180 dB for
//! silent bins.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub const WINDOW_LEN: usize = 1024;
pub const HOP_LEN: usize = 256;
pub const FFT_SIZE: usize = 2048;
pub const NUM_BINS: usize = FFT_SIZE / 2 + 1;
pub const LOG_EPSILON: f64 = 1e-18;
/// `10 * log10(LOG_EPSILON)`.
pub const LOG_FLOOR_DB: f64 = -180.0;

pub const SPG_MAGIC: &[u8; 4] = b"SPG1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("input has {len} samples, at least {window_len} are required")]
    InputTooShort { len: usize, window_len: usize },
    #[error("input sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("invalid frame configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed spectrogram file: {0}")]
    Malformed(String),
}

/// Frame geometry of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub window_len: usize,
    pub hop_len: usize,
    pub fft_size: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { window_len: WINDOW_LEN, hop_len: HOP_LEN, fft_size: FFT_SIZE }
    }
}

impl FrameConfig {
    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames for an input of `len` samples, `None` if shorter than a window.
    pub fn frame_count(&self, len: usize) -> Option<usize> {
        (len >= self.window_len).then(|| (len - self.window_len) / self.hop_len + 1)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.window_len == 0 || self.hop_len == 0 {
            return Err(SpectralError::InvalidConfig("window and hop must be positive".into()));
        }
        if self.fft_size < self.window_len {
            return Err(SpectralError::InvalidConfig(format!(
                "fft_size {} is smaller than window_len {}",
                self.fft_size, self.window_len
            )));
        }
        Ok(())
    }
}

/// Periodic Hann window, `0.5 - 0.5 cos(2 pi n / len)`.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
        .collect()
}

/// Complex spectrogram, stored frame-major (`num_bins` values per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    config: FrameConfig,
    num_frames: usize,
    data: Vec<Complex64>,
}

impl ComplexSpectrogram {
    pub fn num_bins(&self) -> usize {
        self.config.num_bins()
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn config(&self) -> FrameConfig {
        self.config
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[frame * self.num_bins() + bin]
    }

    pub fn frame(&self, frame: usize) -> &[Complex64] {
        let n = self.num_bins();
        &self.data[frame * n..(frame + 1) * n]
    }
}

/// Reusable planned transform for one frame geometry.
pub struct FrameTransform {
    config: FrameConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl FrameTransform {
    pub fn new(config: FrameConfig) -> Result<Self, SpectralError> {
        config.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(config.fft_size);
        Ok(Self { config, window: hann_window(config.window_len), fft })
    }

    pub fn transform(&self, samples: &[f32]) -> Result<ComplexSpectrogram, SpectralError> {
        let cfg = self.config;
        let num_frames = cfg
            .frame_count(samples.len())
            .ok_or(SpectralError::InputTooShort { len: samples.len(), window_len: cfg.window_len })?;
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SpectralError::NonFiniteSample { index });
        }
        let bins = cfg.num_bins();
        let mut data = Vec::with_capacity(bins * num_frames);
        let mut buf = vec![Complex64::default(); cfg.fft_size];
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        for k in 0..num_frames {
            let frame = &samples[k * cfg.hop_len..k * cfg.hop_len + cfg.window_len];
            for (slot, (&s, &w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                *slot = Complex64::new(s as f64 * w, 0.0);
            }
            buf[cfg.window_len..].fill(Complex64::default());
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            data.extend_from_slice(&buf[..bins]);
        }
        Ok(ComplexSpectrogram { config: cfg, num_frames, data })
    }
}

/// Windowed transform with the default 1024/256/2048 geometry.
pub fn fbsp_transform(samples: &[f32]) -> Result<ComplexSpectrogram, SpectralError> {
    fbsp_transform_with(samples, FrameConfig::default())
}

pub fn fbsp_transform_with(samples: &[f32], config: FrameConfig) -> Result<ComplexSpectrogram, SpectralError> {
    FrameTransform::new(config)?.transform(samples)
}

/// Log-power spectrogram in dB, stored frame-major like [`ComplexSpectrogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogPowerSpectrogram {
    num_bins: usize,
    num_frames: usize,
    epsilon: f64,
    values: Vec<f64>,
}

pub fn power_to_db(power: f64, epsilon: f64) -> f64 {
    10.0 * (power + epsilon).log10()
}

pub fn log_power(spec: &ComplexSpectrogram) -> LogPowerSpectrogram {
    log_power_with_epsilon(spec, LOG_EPSILON)
}

pub fn log_power_with_epsilon(spec: &ComplexSpectrogram, epsilon: f64) -> LogPowerSpectrogram {
    LogPowerSpectrogram {
        num_bins: spec.num_bins(),
        num_frames: spec.num_frames,
        epsilon,
        values: spec.data.iter().map(|z| power_to_db(z.norm_sqr(), epsilon)).collect(),
    }
}

impl LogPowerSpectrogram {
    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.values[frame * self.num_bins + bin]
    }

    pub fn frame(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.num_bins..(frame + 1) * self.num_bins]
    }

    /// All values, frame-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_db(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_db(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Encodes as an SPG1 file: magic `SPG1`, `u32` bin count, `u32` frame
    /// count, then `f32` values bin-major (all frames of bin 0 first), all
    /// little-endian.
    pub fn to_spg_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.values.len());
        out.extend_from_slice(SPG_MAGIC);
        out.extend_from_slice(&(self.num_bins as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_frames as u32).to_le_bytes());
        for bin in 0..self.num_bins {
            for frame in 0..self.num_frames {
                out.extend_from_slice(&(self.get(bin, frame) as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_spg_bytes(bytes: &[u8]) -> Result<Self, SpectralError> {
        let malformed = |m: &str| SpectralError::Malformed(m.to_string());
        if bytes.len() < 12 || &bytes[..4] != SPG_MAGIC {
            return Err(malformed("missing SPG1 header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
        let (num_bins, num_frames) = (word(4), word(8));
        let expected = num_bins
            .checked_mul(num_frames)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| malformed("dimensions overflow"))?;
        if bytes.len() - 12 != expected {
            return Err(SpectralError::Malformed(format!(
                "payload is {} bytes, header implies {expected}",
                bytes.len() - 12
            )));
        }
        let mut values = vec![0.0; num_bins * num_frames];
        for (i, chunk) in bytes[12..].chunks_exact(4).enumerate() {
            let (bin, frame) = (i / num_frames.max(1), i % num_frames.max(1));
            values[frame * num_bins + bin] = f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64;
        }
        Ok(Self { num_bins, num_frames, epsilon: LOG_EPSILON, values })
    }

    /// CSV with one row per bin and one column per frame.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.num_frames).map(|f| format!("frame_{f}")).collect();
        writeln!(out, "bin,{}", header.join(","))?;
        for bin in 0..self.num_bins {
            write!(out, "{bin}")?;
            for frame in 0..self.num_frames {
                write!(out, ",{:.4}", self.get(bin, frame))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Features of one control-step chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkFeatures {
    pub spectrogram: LogPowerSpectrogram,
    /// True when the chunk was shorter than one window and was zero-padded.
    pub padded: bool,
}

/// Log-power spectrogram of every chunk, each computed independently, in
/// input order. Chunks shorter than a window are zero-padded to one window.
pub fn features_for_chunks(chunks: &[Vec<f32>]) -> Result<Vec<ChunkFeatures>, SpectralError> {
    let transform = FrameTransform::new(FrameConfig::default())?;
    let one = |chunk: &Vec<f32>| -> Result<ChunkFeatures, SpectralError> {
        let padded = chunk.len() < WINDOW_LEN;
        let spec = if padded {
            let mut p = chunk.clone();
            p.resize(WINDOW_LEN, 0.0);
            transform.transform(&p)?
        } else {
            transform.transform(chunk)?
        };
        Ok(ChunkFeatures { spectrogram: log_power(&spec), padded })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        chunks.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        chunks.iter().map(one).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(NUM_BINS, 1025);
        assert_eq!(WINDOW_LEN, 1024);
        assert_eq!(HOP_LEN, 256);
        assert_eq!(LOG_EPSILON, 1e-18);
        assert_eq!(10.0 * LOG_EPSILON.log10(), LOG_FLOOR_DB);
    }

    #[test]
    fn zero_input_gives_zero_frames_and_floor() {
        let spec = fbsp_transform(&vec![0.0; 4096]).unwrap();
        assert_eq!((spec.num_bins(), spec.num_frames()), (1025, 13));
        assert!(spec.data.iter().all(|z| *z == Complex64::default()));
        let lp = log_power(&spec);
        assert!(lp.values().iter().all(|&v| v == -180.0));
    }

    #[test]
    fn one_second_at_48k_has_184_frames() {
        let spec = fbsp_transform(&vec![0.1; 48_000]).unwrap();
        assert_eq!(spec.num_frames(), 184);
    }

    #[test]
    fn short_input_is_rejected() {
        let err = fbsp_transform(&vec![0.0; 1023]).unwrap_err();
        assert_eq!(err, SpectralError::InputTooShort { len: 1023, window_len: 1024 });
        let mut x = vec![0.0; 1024];
        x[3] = f32::NAN;
        assert_eq!(fbsp_transform(&x).unwrap_err(), SpectralError::NonFiniteSample { index: 3 });
    }

    #[test]
    fn log_power_examples() {
        assert_eq!(power_to_db(0.0, LOG_EPSILON), -180.0);
        assert!(power_to_db(1.0, LOG_EPSILON).abs() < 1e-12);
        assert!((power_to_db(10.0, LOG_EPSILON) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn spg_roundtrip_and_layout() {
        let x: Vec<f32> = (0..1536).map(|i| ((i as f32) * 0.3).sin()).collect();
        let lp = log_power(&fbsp_transform(&x).unwrap());
        let bytes = lp.to_spg_bytes();
        assert_eq!(&bytes[..4], b"SPG1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1025);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        // Bin-major: second value is bin 0, frame 1.
        let second = f32::from_le_bytes(bytes[16..20].try_into().unwrap());
        assert_eq!(second, lp.get(0, 1) as f32);
        let back = LogPowerSpectrogram::from_spg_bytes(&bytes).unwrap();
        assert_eq!((back.num_bins(), back.num_frames()), (1025, 3));
        assert!(back.values().iter().zip(lp.values()).all(|(a, b)| *a == *b as f32 as f64));
        assert!(LogPowerSpectrogram::from_spg_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn short_chunks_are_padded_and_flagged() {
        let feats = features_for_chunks(&[vec![0.0; 500], vec![0.0; 1920]]).unwrap();
        assert!(feats[0].padded && !feats[1].padded);
        assert_eq!(feats[0].spectrogram.num_frames(), 1);
        assert_eq!(feats[1].spectrogram.num_frames(), 4);
    }

    #[test]
    fn csv_has_row_per_bin() {
        let lp = log_power(&fbsp_transform(&vec![0.0; 1024]).unwrap());
        let mut out = Vec::new();
        lp.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1026);
        assert!(text.starts_with("bin,frame_0\n0,-180.0000"));
    }
}
