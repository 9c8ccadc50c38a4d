//! Browser bindings: render a contact sound, look at its spectrogram, and run
//! the fusion forward pass on it. Drawing and playback live in `www/`.

use std::sync::OnceLock;

use contact_audio::events::{CollisionEvent, ContactKind, EventStream};
use contact_audio::fusion::{audio_tokens_from_spectrogram, run_demo, ModelDims};
use contact_audio::modulation::{render, RenderConfig};
use contact_audio::procedural::demo_library;
use contact_audio::spectral::{fbsp_transform, log_power};
use contact_audio::{InteractionType, Library, MaterialPair};
use wasm_bindgen::prelude::*;

/// Silence rendered after the event so decays are not cut off.
const TAIL_SECONDS: f64 = 0.4;
const ONSET_SECONDS: f64 = 0.05;

fn library() -> &'static Library {
    static LIB: OnceLock<Library> = OnceLock::new();
    LIB.get_or_init(|| demo_library().expect("built-in library is valid"))
}

/// Material pairs available in the built-in library, as a JSON array of
/// `"first/second"` strings.
#[wasm_bindgen]
pub fn material_pairs() -> String {
    let mut pairs: Vec<String> = library().iter().map(|c| format!("{}/{}", c.material_pair.first, c.material_pair.second)).collect();
    pairs.dedup();
    serde_json::to_string(&pairs).expect("strings serialize")
}

/// Renders one contact event (`pair` as `"first/second"`) and returns mono
/// samples at 48 kHz.
#[wasm_bindgen]
pub fn render_contact(pair: &str, interaction: &str, force: f64, size: f64, duration: f64) -> Result<Vec<f32>, String> {
    let (first, second) = pair.split_once('/').ok_or_else(|| format!("pair must look like a/b, got {pair:?}"))?;
    let interaction = interaction.parse::<InteractionType>().map_err(|e| e.to_string())?;
    let duration = if interaction == InteractionType::Impact { 0.0 } else { duration };
    let event = CollisionEvent {
        time: ONSET_SECONDS,
        kind: ContactKind::GripperObject,
        material_pair: MaterialPair::new(first, second),
        interaction_type: interaction,
        impact_velocity: 0.0,
        force_magnitude: force,
        object_size: size,
        duration,
    };
    let episode = ONSET_SECONDS + duration.max(0.6) + TAIL_SECONDS;
    let stream = EventStream::new(vec![event], episode).map_err(|e| e.to_string())?;
    let out = render(&stream, library(), &RenderConfig::default()).map_err(|e| e.to_string())?;
    Ok(out.buffer.samples)
}

/// Log-power spectrogram, frame-major, in dB.
#[wasm_bindgen]
pub struct Spectrogram {
    bins: usize,
    frames: usize,
    min_db: f64,
    max_db: f64,
    data: Vec<f32>,
}

#[wasm_bindgen]
impl Spectrogram {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn min_db(&self) -> f64 {
        self.min_db
    }

    pub fn max_db(&self) -> f64 {
        self.max_db
    }

    /// `frames * bins` values; frame `f`, bin `k` is at `f * bins + k`.
    pub fn data(&self) -> Vec<f32> {
        self.data.clone()
    }
}

#[wasm_bindgen]
pub fn spectrogram(samples: &[f32]) -> Result<Spectrogram, String> {
    let spec = log_power(&fbsp_transform(samples).map_err(|e| e.to_string())?);
    Ok(Spectrogram {
        bins: spec.num_bins(),
        frames: spec.num_frames(),
        min_db: spec.min_db(),
        max_db: spec.max_db(),
        data: spec.values().iter().map(|&v| v as f32).collect(),
    })
}

/// Seeded forward pass with `k x d` actions. When `samples` is non-empty its
/// spectrogram frames become the audio tokens. Returns the report as JSON.
#[wasm_bindgen]
pub fn fuse_demo(seed: u32, k: usize, d: usize, samples: &[f32]) -> Result<String, String> {
    let dims = ModelDims { k, d, n_third: 64, n_wrist: 64, ..ModelDims::default() };
    let audio = if samples.is_empty() {
        None
    } else {
        let spec = log_power(&fbsp_transform(samples).map_err(|e| e.to_string())?);
        Some(audio_tokens_from_spectrogram(&spec, dims.d_aud).map_err(|e| e.to_string())?)
    };
    let report = run_demo(seed as u64, dims, audio).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}
