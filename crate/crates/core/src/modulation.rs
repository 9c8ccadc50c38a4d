//! Event-driven rendering: clip retrieval, force/size/duration modulation,
//! additive mixing and per-control-step chunking.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{CollisionEvent, EventStream};
use crate::library::{AudioClip, Library, LibraryError, QueryKey};
use crate::wav::{self, WavError};
use crate::{CONTROL_RATE_HZ, LIBRARY_SAMPLE_RATE};

#[derive(Debug, Error)]
pub enum ModulationError {
    #[error("force must be positive, got {0}")]
    NonPositiveForce(f64),
    #[error("size must be positive, got {0}")]
    NonPositiveSize(f64),
    #[error("resampling ratio must be finite and positive, got {0}")]
    InvalidRatio(f64),
    #[error("target duration must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("target duration {target} s is shorter than the crossfade {crossfade} s")]
    TargetShorterThanCrossfade { target: f64, crossfade: f64 },
    #[error("invalid render config: {0}")]
    InvalidConfig(String),
    #[error("event {index} (t = {time} s) cannot be resolved: {source}")]
    UnresolvableEvent {
        index: usize,
        time: f64,
        #[source]
        source: LibraryError,
    },
    #[error("worker pool: {0}")]
    WorkerPool(String),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Rendering parameters. Deserializes from partial JSON; missing keys take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub output_sample_rate: u32,
    pub control_rate: f64,
    /// Exponent of the force ratio in the gain law; 1.0 is linear.
    pub gain_law_exponent: f64,
    pub gain_clamp: [f64; 2],
    /// Exponent of `size_reference / size` in the pitch law.
    pub pitch_exponent: f64,
    pub pitch_ratio_clamp: [f64; 2],
    /// Crossfade length in seconds for loop seams and the final fade-out.
    pub crossfade: f64,
    pub rng_seed: u64,
    /// Applies a seeded ±3 % gain variation per event.
    pub gain_jitter: bool,
    /// Skips events with no matching library group instead of failing.
    pub skip_unknown: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            output_sample_rate: LIBRARY_SAMPLE_RATE,
            control_rate: CONTROL_RATE_HZ,
            gain_law_exponent: 1.0,
            gain_clamp: [0.05, 4.0],
            pitch_exponent: 0.5,
            pitch_ratio_clamp: [0.5, 2.0],
            crossfade: 0.01,
            rng_seed: 0,
            gain_jitter: false,
            skip_unknown: false,
        }
    }
}

const GAIN_JITTER: f64 = 0.03;

impl RenderConfig {
    pub fn validate(&self) -> Result<(), ModulationError> {
        let bad = |msg: String| Err(ModulationError::InvalidConfig(msg));
        if self.output_sample_rate == 0 {
            return bad("output_sample_rate must be positive".into());
        }
        if !(self.control_rate.is_finite() && self.control_rate > 0.0) {
            return bad(format!("control_rate must be positive, got {}", self.control_rate));
        }
        for (name, [lo, hi]) in [("gain_clamp", self.gain_clamp), ("pitch_ratio_clamp", self.pitch_ratio_clamp)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
                return bad(format!("{name} must satisfy 0 < low < high, got [{lo}, {hi}]"));
            }
        }
        if !self.gain_law_exponent.is_finite() || !self.pitch_exponent.is_finite() {
            return bad("exponents must be finite".into());
        }
        if !(self.crossfade.is_finite() && self.crossfade >= 0.0) {
            return bad(format!("crossfade must be non-negative, got {}", self.crossfade));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ModulationError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ModulationError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn crossfade_samples(&self, sample_rate: u32) -> usize {
        (self.crossfade * sample_rate as f64).round() as usize
    }
}

/// `clamp((force / force_reference) ^ gain_law_exponent, gain_clamp)`.
pub fn gain_for_force(force: f64, force_reference: f64, cfg: &RenderConfig) -> Result<f64, ModulationError> {
    for f in [force, force_reference] {
        if !(f.is_finite() && f > 0.0) {
            return Err(ModulationError::NonPositiveForce(f));
        }
    }
    let [lo, hi] = cfg.gain_clamp;
    Ok((force / force_reference).powf(cfg.gain_law_exponent).clamp(lo, hi))
}

/// `clamp((size_reference / size) ^ pitch_exponent, pitch_ratio_clamp)`;
/// smaller objects ring higher.
pub fn pitch_ratio_for_size(size: f64, size_reference: f64, cfg: &RenderConfig) -> Result<f64, ModulationError> {
    for s in [size, size_reference] {
        if !(s.is_finite() && s > 0.0) {
            return Err(ModulationError::NonPositiveSize(s));
        }
    }
    let [lo, hi] = cfg.pitch_ratio_clamp;
    Ok((size_reference / size).powf(cfg.pitch_exponent).clamp(lo, hi))
}

/// Linear-interpolation resampling by playback-rate `ratio`.
///
/// Output sample `i` reads the input at position `i * ratio`; the output has
/// `floor(len / ratio)` samples, so pitch scales by `ratio` and duration by
/// `1 / ratio`.
pub fn resample_samples(samples: &[f32], ratio: f64) -> Result<Vec<f32>, ModulationError> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(ModulationError::InvalidRatio(ratio));
    }
    if ratio == 1.0 {
        return Ok(samples.to_vec());
    }
    let out_len = (samples.len() as f64 / ratio).floor() as usize;
    let last = samples.len().saturating_sub(1);
    Ok((0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let j = (pos.floor() as usize).min(last);
            let frac = pos - j as f64;
            let a = samples[j] as f64;
            if frac == 0.0 {
                return a as f32;
            }
            let b = samples[(j + 1).min(last)] as f64;
            (a + (b - a) * frac) as f32
        })
        .collect())
}

pub fn resample(clip: &AudioClip, ratio: f64) -> Result<AudioClip, ModulationError> {
    Ok(AudioClip { samples: resample_samples(&clip.samples, ratio)?, ..clip.clone() })
}

/// Loops (with equal-power crossfades) or truncates to exactly
/// `round(target * sample_rate)` samples, finishing with a linear fade-out of
/// one crossfade length.
pub fn fit_samples(
    samples: &[f32],
    sample_rate: u32,
    target: f64,
    cfg: &RenderConfig,
) -> Result<Vec<f32>, ModulationError> {
    if !(target.is_finite() && target > 0.0) {
        return Err(ModulationError::NonPositiveTarget(target));
    }
    if target < cfg.crossfade {
        return Err(ModulationError::TargetShorterThanCrossfade { target, crossfade: cfg.crossfade });
    }
    let target_len = (target * sample_rate as f64).round() as usize;
    let fade = cfg.crossfade_samples(sample_rate);
    let mut out: Vec<f32> = samples.to_vec();

    if !samples.is_empty() {
        let seam = fade.min(samples.len() / 2);
        let (fade_out, fade_in) = equal_power_curves(seam);
        while out.len() < target_len {
            let start = out.len() - seam;
            for k in 0..seam {
                out[start + k] = (out[start + k] as f64 * fade_out[k] + samples[k] as f64 * fade_in[k]) as f32;
            }
            out.extend_from_slice(&samples[seam..]);
        }
    }
    out.resize(target_len, 0.0);

    let n = fade.min(out.len());
    let start = out.len() - n;
    for (k, s) in out[start..].iter_mut().enumerate() {
        let gain = (n - 1 - k) as f64 / n as f64;
        *s = (*s as f64 * gain) as f32;
    }
    Ok(out)
}

fn equal_power_curves(n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) / n as f64 * std::f64::consts::FRAC_PI_2;
            (t.cos(), t.sin())
        })
        .unzip()
}

pub fn fit_duration(clip: &AudioClip, target: f64, cfg: &RenderConfig) -> Result<AudioClip, ModulationError> {
    Ok(AudioClip { samples: fit_samples(&clip.samples, clip.sample_rate, target, cfg)?, ..clip.clone() })
}

/// Mono float audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<(), ModulationError> {
        Ok(wav::write_f32(path, &self.samples, self.sample_rate)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderStats {
    pub events: usize,
    pub rendered: usize,
    /// Indices (into the stream) of events skipped as unresolvable.
    pub skipped: Vec<usize>,
    pub clipped_samples: usize,
    pub peak_abs_pre_clamp: f64,
    pub total_samples: usize,
    pub sample_rate: u32,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    /// Final audio, hard-clamped to [-1, 1].
    pub buffer: AudioBuffer,
    /// Accumulation buffer before clamping.
    pub mix: Vec<f64>,
    pub stats: RenderStats,
}

/// One event's modulated contribution, ready to mix.
#[derive(Debug, Clone, PartialEq)]
pub struct EventVoice {
    pub offset: usize,
    pub gain: f64,
    pub pitch_ratio: f64,
    pub clip_id: String,
    pub samples: Vec<f32>,
}

/// Retrieves and modulates the clip for one event.
///
/// Events with a positive duration shorter than the crossfade play the
/// pitch-shifted clip at its natural length.
pub fn voice_for_event(
    event: &CollisionEvent,
    index: usize,
    library: &Library,
    cfg: &RenderConfig,
) -> Result<EventVoice, ModulationError> {
    let key = QueryKey {
        material_pair: event.material_pair.clone(),
        interaction_type: event.interaction_type,
        force_magnitude: event.force_magnitude,
    };
    let clip = library
        .query(&key)
        .map_err(|source| ModulationError::UnresolvableEvent { index, time: event.time, source })?;
    let mut gain = gain_for_force(event.force_magnitude, clip.force_reference, cfg)?;
    if cfg.gain_jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(index as u64);
        gain *= 1.0 + rng.gen_range(-GAIN_JITTER..=GAIN_JITTER);
    }
    let pitch_ratio = pitch_ratio_for_size(event.object_size, clip.size_reference, cfg)?;
    let playback = pitch_ratio * clip.sample_rate as f64 / cfg.output_sample_rate as f64;
    let mut samples = resample_samples(&clip.samples, playback)?;
    if event.duration > 0.0 && event.duration >= cfg.crossfade {
        samples = fit_samples(&samples, cfg.output_sample_rate, event.duration, cfg)?;
    }
    Ok(EventVoice {
        offset: (event.time * cfg.output_sample_rate as f64).round() as usize,
        gain,
        pitch_ratio,
        clip_id: clip.id.clone(),
        samples,
    })
}

/// Renders an event stream with the default worker pool.
pub fn render(stream: &EventStream, library: &Library, cfg: &RenderConfig) -> Result<RenderOutput, ModulationError> {
    cfg.validate()?;
    let voices = voices(stream, library, cfg);
    mix_voices(stream, voices, cfg)
}

/// Renders with a dedicated pool of `threads` workers. Output is bit-identical
/// for every thread count.
pub fn render_with_threads(
    stream: &EventStream,
    library: &Library,
    cfg: &RenderConfig,
    threads: usize,
) -> Result<RenderOutput, ModulationError> {
    cfg.validate()?;
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| ModulationError::WorkerPool(e.to_string()))?;
        let voices = pool.install(|| voices(stream, library, cfg));
        mix_voices(stream, voices, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        mix_voices(stream, voices(stream, library, cfg), cfg)
    }
}

fn voices(stream: &EventStream, library: &Library, cfg: &RenderConfig) -> Vec<Result<EventVoice, ModulationError>> {
    let events = stream.events();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        events.par_iter().enumerate().map(|(i, e)| voice_for_event(e, i, library, cfg)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        events.iter().enumerate().map(|(i, e)| voice_for_event(e, i, library, cfg)).collect()
    }
}

/// Mixes voices into the accumulation buffer in event order.
fn mix_voices(
    stream: &EventStream,
    voices: Vec<Result<EventVoice, ModulationError>>,
    cfg: &RenderConfig,
) -> Result<RenderOutput, ModulationError> {
    let sample_rate = cfg.output_sample_rate;
    let total = (stream.episode_duration() * sample_rate as f64).round() as usize;
    let mut mix = vec![0.0f64; total];
    let mut skipped = Vec::new();
    let mut rendered = 0;

    for (index, voice) in voices.into_iter().enumerate() {
        let voice = match voice {
            Ok(v) => v,
            Err(ModulationError::UnresolvableEvent { .. }) if cfg.skip_unknown => {
                skipped.push(index);
                continue;
            }
            Err(e) => return Err(e),
        };
        rendered += 1;
        if voice.offset >= total {
            continue;
        }
        for (acc, &s) in mix[voice.offset..].iter_mut().zip(&voice.samples) {
            *acc += s as f64 * voice.gain;
        }
    }

    let mut clipped = 0;
    let mut peak = 0.0f64;
    let samples = mix
        .iter()
        .map(|&v| {
            peak = peak.max(v.abs());
            if v.abs() > 1.0 {
                clipped += 1;
            }
            v.clamp(-1.0, 1.0) as f32
        })
        .collect();

    Ok(RenderOutput {
        buffer: AudioBuffer { samples, sample_rate },
        mix,
        stats: RenderStats {
            events: stream.len(),
            rendered,
            skipped,
            clipped_samples: clipped,
            peak_abs_pre_clamp: peak,
            total_samples: total,
            sample_rate,
        },
    })
}

/// Audio split into equal-length control-step chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkedAudio {
    pub chunk_samples: usize,
    pub chunks: Vec<Vec<f32>>,
    /// True when the final chunk was zero-padded.
    pub padded_tail: bool,
    /// Length of the source buffer.
    pub source_len: usize,
    pub sample_rate: u32,
}

/// Sidecar written next to chunk files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSidecar {
    pub chunk_samples: usize,
    pub count: usize,
    pub padded_tail: bool,
}

pub const CHUNK_SIDECAR_FILE: &str = "chunks.json";

impl ChunkedAudio {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Concatenation with the tail padding removed.
    pub fn concat(&self) -> Vec<f32> {
        let mut out: Vec<f32> = self.chunks.concat();
        out.truncate(self.source_len);
        out
    }

    pub fn sidecar(&self) -> ChunkSidecar {
        ChunkSidecar { chunk_samples: self.chunk_samples, count: self.chunks.len(), padded_tail: self.padded_tail }
    }

    /// Writes `chunk_00000.wav`, `chunk_00001.wav`, ... and `chunks.json`
    /// into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), ModulationError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (i, chunk) in self.chunks.iter().enumerate() {
            wav::write_f32(dir.join(chunk_file_name(i)), chunk, self.sample_rate)?;
        }
        let sidecar = serde_json::to_string_pretty(&self.sidecar()).expect("sidecar serializes");
        std::fs::write(dir.join(CHUNK_SIDECAR_FILE), sidecar + "\n")?;
        Ok(())
    }
}

pub fn chunk_file_name(index: usize) -> String {
    format!("chunk_{index:05}.wav")
}

/// Splits a buffer into chunks of `round(sample_rate / control_rate)`
/// samples, zero-padding the last one if needed.
pub fn chunk_stream(buffer: &AudioBuffer, control_rate: f64) -> Result<ChunkedAudio, ModulationError> {
    if !(control_rate.is_finite() && control_rate > 0.0) || buffer.sample_rate == 0 {
        return Err(ModulationError::InvalidConfig(format!("control_rate must be positive, got {control_rate}")));
    }
    let chunk_samples = ((buffer.sample_rate as f64 / control_rate).round() as usize).max(1);
    let mut padded_tail = false;
    let chunks = buffer
        .samples
        .chunks(chunk_samples)
        .map(|c| {
            let mut chunk = c.to_vec();
            if chunk.len() < chunk_samples {
                padded_tail = true;
                chunk.resize(chunk_samples, 0.0);
            }
            chunk
        })
        .collect();
    Ok(ChunkedAudio {
        chunk_samples,
        chunks,
        padded_tail,
        source_len: buffer.samples.len(),
        sample_rate: buffer.sample_rate,
    })
}
