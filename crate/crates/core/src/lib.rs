//! Contact-audio tooling for simulated manipulation.
//!
//! The crate turns collision event streams into rendered contact audio using a
//! recorded clip library, computes log-power spectrogram features per control
//! timestep, carries a small numeric model of multimodal token fusion and the
//! action head, and scores episodes with success rate and task completion rate.
//!
//! Pipeline, end to end:
//!
//! ```text
//! events.jsonl ──parse──▶ EventStream ──coalesce──▶ EventStream
//!                                                     │
//! manifest.json ──load──▶ Library ───────────────────▶ render ──▶ AudioBuffer
//!                                                                   │
//!                                       chunk_stream ◀──────────────┘
//!                                            │
//!                                 features_for_chunks ──▶ LogPowerSpectrogram[]
//! ```

// Range checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod evaluation;
pub mod events;
pub mod fusion;
pub mod library;
pub mod modulation;
pub mod procedural;
pub mod spectral;
pub mod wav;

pub use contact::{InteractionType, MaterialPair};
pub use evaluation::{aggregate, tcr, EpisodeResult, EvalError, EvalReport};
pub use events::{coalesce_contacts, parse_events, CollisionEvent, ContactKind, EventError, EventStream};
pub use library::{load_library, AudioClip, Library, LibraryError, QueryKey};
pub use modulation::{chunk_stream, render, AudioBuffer, ChunkedAudio, ModulationError, RenderConfig};
pub use spectral::{fbsp_transform, features_for_chunks, log_power, ComplexSpectrogram, LogPowerSpectrogram};

/// Sample rate of every clip in the recorded contact-sound library.
pub const LIBRARY_SAMPLE_RATE: u32 = 48_000;

/// Sample rate of the gripper contact microphones on the physical robot.
pub const ROBOT_MIC_SAMPLE_RATE: u32 = 44_100;

/// Policy control frequency in Hz; one audio chunk per control step.
pub const CONTROL_RATE_HZ: f64 = 25.0;
