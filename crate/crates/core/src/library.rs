//! Structured contact-sound library indexed by material pair, interaction type
//! and recording force.
//!
//! A library is described by a JSON manifest:
//!
//! ```json
//! {
//!   "version": 1,
//!   "entries": [
//!     {
//!       "clip_id": "rubber-wood-impact-2n",
//!       "file": "clips/rubber_wood_2n.wav",
//!       "material_pair": ["rubber", "wood"],
//!       "interaction_type": "impact",
//!       "force_reference_n": 2.0,
//!       "size_reference_m": 0.05,
//!       "symmetric": false
//!     }
//!   ]
//! }
//! ```
//!
//! `file` is resolved relative to the manifest's directory. `symmetric` is
//! optional; when true the clip is also registered under the reversed pair.
//! Audio is WAV, 16-bit PCM or 32-bit float, mono or stereo (mixed to mono),
//! and must be recorded at 48 kHz.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{InteractionType, MaterialPair};
use crate::wav::{self, WavError};
use crate::LIBRARY_SAMPLE_RATE;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LibraryError {
    #[error("missing file {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{0}")]
    SchemaViolation(String),
    #[error("clip {clip_id:?} is sampled at {found} Hz, library clips must be 48000 Hz")]
    SampleRateMismatch { clip_id: String, found: u32 },
    #[error("{0}")]
    DuplicateKey(String),
    #[error("clip {clip_id:?} has no samples")]
    EmptyClip { clip_id: String },
    #[error("no clips for material pair {0}")]
    UnknownMaterialPair(MaterialPair),
    #[error("no {interaction} clips for material pair {pair}")]
    UnknownInteractionType { pair: MaterialPair, interaction: InteractionType },
    #[error("query force must be positive, got {0}")]
    NonPositiveForce(f64),
}

impl LibraryError {
    /// Stable name of the error kind, used as the prefix of diagnostic lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::MissingFile { .. } => "MissingFile",
            Self::SchemaViolation(_) => "SchemaViolation",
            Self::SampleRateMismatch { .. } => "SampleRateMismatch",
            Self::DuplicateKey(_) => "DuplicateKey",
            Self::EmptyClip { .. } => "EmptyClip",
            Self::UnknownMaterialPair(_) => "UnknownMaterialPair",
            Self::UnknownInteractionType { .. } => "UnknownInteractionType",
            Self::NonPositiveForce(_) => "NonPositiveForce",
        }
    }
}

/// A recorded contact sound and the conditions it was recorded under.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub id: String,
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub material_pair: MaterialPair,
    pub interaction_type: InteractionType,
    /// Contact force during recording, newtons.
    pub force_reference: f64,
    /// Characteristic object size during recording, meters.
    pub size_reference: f64,
}

impl AudioClip {
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    fn validate(&self) -> Result<(), LibraryError> {
        if self.sample_rate != LIBRARY_SAMPLE_RATE {
            return Err(LibraryError::SampleRateMismatch { clip_id: self.id.clone(), found: self.sample_rate });
        }
        if self.samples.is_empty() {
            return Err(LibraryError::EmptyClip { clip_id: self.id.clone() });
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(LibraryError::SchemaViolation(format!(
                "clip {:?}: sample {i} is {} (must be finite and within [-1, 1])",
                self.id, self.samples[i]
            )));
        }
        positive(&self.id, "force_reference_n", self.force_reference)?;
        positive(&self.id, "size_reference_m", self.size_reference)?;
        Ok(())
    }
}

fn positive(clip_id: &str, field: &str, value: f64) -> Result<(), LibraryError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(LibraryError::SchemaViolation(format!("clip {clip_id:?}: {field} must be positive, got {value}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub file: PathBuf,
    pub material_pair: MaterialPair,
    pub interaction_type: InteractionType,
    pub force_reference_n: f64,
    pub size_reference_m: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryManifest {
    pub version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl LibraryManifest {
    pub fn from_json(text: &str) -> Result<Self, LibraryError> {
        let manifest: Self =
            serde_json::from_str(text).map_err(|e| LibraryError::SchemaViolation(format!("manifest: {e}")))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(LibraryError::SchemaViolation(format!(
                "manifest: unsupported version {}, expected {MANIFEST_VERSION}",
                manifest.version
            )));
        }
        Ok(manifest)
    }
}

/// Lookup key built from a collision event.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryKey {
    pub material_pair: MaterialPair,
    pub interaction_type: InteractionType,
    pub force_magnitude: f64,
}

type GroupKey = (MaterialPair, InteractionType);

/// Immutable in-memory clip library.
///
/// Clips are grouped by `(material_pair, interaction_type)`; each group is
/// sorted by `force_reference` ascending.
#[derive(Debug, Clone, Default)]
pub struct Library {
    clips: Vec<AudioClip>,
    groups: BTreeMap<GroupKey, Vec<usize>>,
}

impl Library {
    /// Builds a library from clips that are all registered under their own
    /// material pair only.
    pub fn from_clips(clips: impl IntoIterator<Item = AudioClip>) -> Result<Self, LibraryError> {
        let mut lib = Self::default();
        for clip in clips {
            lib.insert(clip, false)?;
        }
        Ok(lib)
    }

    /// Adds one clip, optionally also under the reversed material pair.
    fn insert(&mut self, clip: AudioClip, symmetric: bool) -> Result<(), LibraryError> {
        clip.validate()?;
        if self.clips.iter().any(|c| c.id == clip.id) {
            return Err(LibraryError::DuplicateKey(format!("clip_id {:?} appears more than once", clip.id)));
        }
        let mut keys = vec![(clip.material_pair.clone(), clip.interaction_type)];
        if symmetric && clip.material_pair.first != clip.material_pair.second {
            keys.push((clip.material_pair.reversed(), clip.interaction_type));
        }
        for key in &keys {
            if let Some(other) = self.groups.get(key).and_then(|g| {
                g.iter().map(|&i| &self.clips[i]).find(|c| c.force_reference == clip.force_reference)
            }) {
                return Err(LibraryError::DuplicateKey(format!(
                    "clip {:?} duplicates {:?}: both are {} {} at {} N",
                    clip.id, other.id, key.0, key.1, clip.force_reference
                )));
            }
        }
        let index = self.clips.len();
        self.clips.push(clip);
        for key in keys {
            let group = self.groups.entry(key).or_default();
            let force = self.clips[index].force_reference;
            let at = group.partition_point(|&i| self.clips[i].force_reference < force);
            group.insert(at, index);
        }
        Ok(())
    }

    pub fn clip_count(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    /// Clips in group order: by `(material_pair, interaction_type)`, then by
    /// force. Symmetric clips appear once per registered pair.
    pub fn iter(&self) -> impl Iterator<Item = &AudioClip> + '_ {
        self.groups.values().flat_map(move |g| g.iter().map(move |&i| &self.clips[i]))
    }

    /// Clips of one group, sorted by force ascending.
    pub fn group(&self, pair: &MaterialPair, interaction: InteractionType) -> Vec<&AudioClip> {
        self.groups
            .get(&(pair.clone(), interaction))
            .map(|g| g.iter().map(|&i| &self.clips[i]).collect())
            .unwrap_or_default()
    }

    pub fn get(&self, clip_id: &str) -> Option<&AudioClip> {
        self.clips.iter().find(|c| c.id == clip_id)
    }

    /// Nearest-force clip for the key's group. Ties go to the lower force.
    pub fn query(&self, key: &QueryKey) -> Result<&AudioClip, LibraryError> {
        if !(key.force_magnitude.is_finite() && key.force_magnitude > 0.0) {
            return Err(LibraryError::NonPositiveForce(key.force_magnitude));
        }
        let Some(group) = self.groups.get(&(key.material_pair.clone(), key.interaction_type)) else {
            let pair_known = self.groups.keys().any(|(pair, _)| *pair == key.material_pair);
            return Err(if pair_known {
                LibraryError::UnknownInteractionType {
                    pair: key.material_pair.clone(),
                    interaction: key.interaction_type,
                }
            } else {
                LibraryError::UnknownMaterialPair(key.material_pair.clone())
            });
        };
        let force = key.force_magnitude;
        let upper = group.partition_point(|&i| self.clips[i].force_reference < force);
        let pick = match (upper.checked_sub(1), group.get(upper)) {
            (Some(lo), Some(&hi)) => {
                let below = force - self.clips[group[lo]].force_reference;
                let above = self.clips[hi].force_reference - force;
                if below <= above {
                    group[lo]
                } else {
                    hi
                }
            }
            (Some(lo), None) => group[lo],
            (None, Some(&hi)) => hi,
            (None, None) => unreachable!("groups are never empty"),
        };
        Ok(&self.clips[pick])
    }
}

fn load_entry(base: &Path, entry: &ManifestEntry) -> Result<AudioClip, LibraryError> {
    let path = base.join(&entry.file);
    if !path.is_file() {
        return Err(LibraryError::MissingFile { path });
    }
    let audio = wav::read_mono(&path).map_err(|e| match e {
        WavError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => LibraryError::MissingFile { path: path.clone() },
        other => LibraryError::SchemaViolation(format!("clip {:?} ({}): {other}", entry.clip_id, path.display())),
    })?;
    Ok(AudioClip {
        id: entry.clip_id.clone(),
        samples: audio.samples,
        sample_rate: audio.sample_rate,
        material_pair: entry.material_pair.clone(),
        interaction_type: entry.interaction_type,
        force_reference: entry.force_reference_n,
        size_reference: entry.size_reference_m,
    })
}

/// Loads every entry of a manifest and returns all problems found, one per
/// offending entry, instead of stopping at the first.
pub fn validate_library(manifest_path: impl AsRef<Path>) -> Result<Library, Vec<LibraryError>> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path).map_err(|e| {
        vec![if e.kind() == std::io::ErrorKind::NotFound {
            LibraryError::MissingFile { path: manifest_path.to_path_buf() }
        } else {
            LibraryError::SchemaViolation(format!("manifest {}: {e}", manifest_path.display()))
        }]
    })?;
    let manifest = LibraryManifest::from_json(&text).map_err(|e| vec![e])?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    library_from_manifest(&manifest, base)
}

/// Builds a library from an already-parsed manifest whose files live under `base`.
pub fn library_from_manifest(manifest: &LibraryManifest, base: &Path) -> Result<Library, Vec<LibraryError>> {
    let mut errors = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut lib = Library::default();
    for entry in &manifest.entries {
        if !seen_ids.insert(entry.clip_id.as_str()) {
            errors.push(LibraryError::DuplicateKey(format!("clip_id {:?} appears more than once", entry.clip_id)));
            continue;
        }
        match load_entry(base, entry).and_then(|clip| lib.insert(clip, entry.symmetric)) {
            Ok(()) => {}
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(lib)
    } else {
        Err(errors)
    }
}

/// Loads a manifest and all referenced clips, failing on the first problem.
pub fn load_library(manifest_path: impl AsRef<Path>) -> Result<Library, LibraryError> {
    validate_library(manifest_path).map_err(|mut errors| errors.swap_remove(0))
}
