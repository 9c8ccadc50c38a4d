//! Procedural stand-ins for recorded contact clips.
//!
//! Struck solids are modelled as a sum of exponentially decaying modes; scrapes
//! and sustained contacts add seeded band-limited noise. Used to build test
//! fixtures and the browser demo library when no recordings are at hand.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contact::{InteractionType, MaterialPair};
use crate::library::{AudioClip, Library, LibraryError};
use crate::LIBRARY_SAMPLE_RATE;

/// One resonant mode: frequency (Hz), relative amplitude, decay time constant (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub freq: f64,
    pub amp: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSound {
    pub modes: Vec<Mode>,
    /// Amplitude of the noise component relative to the modes.
    pub noise: f64,
    /// One-pole low-pass coefficient for the noise, in (0, 1].
    pub noise_smoothing: f64,
    pub duration: f64,
    /// Peak level after normalization.
    pub peak: f32,
    pub seed: u64,
}

impl ContactSound {
    pub fn synthesize(&self, sample_rate: u32) -> Vec<f32> {
        let n = (self.duration * sample_rate as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let white = Uniform::new_inclusive(-1.0, 1.0);
        let mut lp = 0.0f64;
        let mut out: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / sample_rate as f64;
                let tonal: f64 = self
                    .modes
                    .iter()
                    .map(|m| m.amp * (-t / m.decay).exp() * (2.0 * std::f64::consts::PI * m.freq * t).sin())
                    .sum();
                lp += self.noise_smoothing * (white.sample(&mut rng) - lp);
                tonal + self.noise * lp
            })
            .collect();
        // Short attack ramp avoids a click at onset.
        for (i, s) in out.iter_mut().take(48).enumerate() {
            *s *= i as f64 / 48.0;
        }
        let peak = out.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let scale = if peak > 0.0 { self.peak as f64 / peak } else { 0.0 };
        out.into_iter().map(|s| (s * scale) as f32).collect()
    }
}

/// Base modal frequency (Hz) for a material id; unknown ids hash to a value.
fn base_frequency(material: &str) -> f64 {
    match material {
        "steel" | "metal" => 2200.0,
        "glass" | "ceramic" => 1800.0,
        "wood" => 650.0,
        "plastic" => 900.0,
        "rubber" | "foam" => 300.0,
        "whiteboard" => 1100.0,
        _ => 400.0 + (material.bytes().map(|b| b as u32).sum::<u32>() % 1600) as f64,
    }
}

fn ringing(material: &str) -> f64 {
    match material {
        "steel" | "metal" | "glass" | "ceramic" => 0.25,
        "wood" | "plastic" | "whiteboard" => 0.06,
        _ => 0.03,
    }
}

/// A plausible contact sound for a material pair and interaction.
pub fn preset(pair: &MaterialPair, interaction: InteractionType, seed: u64) -> ContactSound {
    let f0 = base_frequency(&pair.second) * 0.7 + base_frequency(&pair.first) * 0.3;
    let decay = ringing(&pair.second).max(ringing(&pair.first) * 0.5);
    let modes = [1.0, 2.76, 5.40, 8.93]
        .iter()
        .enumerate()
        .map(|(i, &r)| Mode { freq: f0 * r, amp: 1.0 / (i as f64 + 1.0), decay: decay / (i as f64 + 1.0) })
        .collect();
    let (noise, smoothing, duration) = match interaction {
        InteractionType::Impact => (0.15, 0.6, (decay * 4.0).clamp(0.08, 0.6)),
        InteractionType::Scrape => (1.2, 0.35, 0.4),
        InteractionType::SustainedContact => (0.6, 0.15, 0.5),
    };
    ContactSound { modes, noise, noise_smoothing: smoothing, duration, peak: 0.5, seed }
}

pub fn preset_clip(
    id: impl Into<String>,
    pair: MaterialPair,
    interaction: InteractionType,
    force_reference: f64,
    size_reference: f64,
    seed: u64,
) -> AudioClip {
    let mut sound = preset(&pair, interaction, seed);
    // Harder recordings are brighter and louder.
    sound.peak = (0.25 * force_reference.sqrt()).clamp(0.1, 0.9) as f32;
    AudioClip {
        id: id.into(),
        samples: sound.synthesize(LIBRARY_SAMPLE_RATE),
        sample_rate: LIBRARY_SAMPLE_RATE,
        material_pair: pair,
        interaction_type: interaction,
        force_reference,
        size_reference,
    }
}

/// Small library covering a few gripper/object pairs at two force levels.
pub fn demo_library() -> Result<Library, LibraryError> {
    let pairs = [("rubber", "wood"), ("rubber", "steel"), ("rubber", "plastic"), ("plastic", "whiteboard"), ("steel", "ceramic")];
    let mut clips = Vec::new();
    let mut seed = 1;
    for (a, b) in pairs {
        for interaction in InteractionType::ALL {
            for force in [1.0, 4.0] {
                let id = format!("{a}-{b}-{interaction}-{force}n");
                clips.push(preset_clip(id, MaterialPair::new(a, b), interaction, force, 0.05, seed));
                seed += 1;
            }
        }
    }
    Library::from_clips(clips)
}
