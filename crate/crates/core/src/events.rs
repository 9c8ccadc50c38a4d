//! Collision event streams emitted by a simulator.
//!
//! Streams are JSON Lines. The first non-blank line is a header, every
//! following non-blank line is one event:
//!
//! ```text
//! {"episode_duration_s": 2.0}
//! {"t": 0.12, "kind": "gripper_object", "material_pair": ["rubber", "wood"], "interaction": "impact",
//!  "velocity_mps": 0.3, "force_n": 2.0, "size_m": 0.05, "duration_s": 0.0}
//! ```
//!
//! (each object sits on a single line). Line numbers in errors are 1-based
//! and count blank lines.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{InteractionType, MaterialPair};
use crate::CONTROL_RATE_HZ;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("line {line}: {field} must be {requirement}, got {value}")]
    NegativeQuantity { line: usize, field: &'static str, requirement: &'static str, value: f64 },
    #[error("line {line}: event ends at {end} s, past the episode end {episode_duration} s")]
    EventPastEpisodeEnd { line: usize, end: f64, episode_duration: f64 },
}

impl EventError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SchemaViolation { .. } => "SchemaViolation",
            Self::NegativeQuantity { .. } => "NegativeQuantity",
            Self::EventPastEpisodeEnd { .. } => "EventPastEpisodeEnd",
        }
    }

    pub fn line(&self) -> usize {
        match self {
            Self::SchemaViolation { line, .. }
            | Self::NegativeQuantity { line, .. }
            | Self::EventPastEpisodeEnd { line, .. } => *line,
        }
    }
}

/// Which bodies took part in the contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactKind {
    GripperObject,
    ObjectEnvironment,
}

/// One contact occurrence reported by the collision monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionEvent {
    /// Seconds since episode start.
    #[serde(rename = "t")]
    pub time: f64,
    pub kind: ContactKind,
    pub material_pair: MaterialPair,
    #[serde(rename = "interaction")]
    pub interaction_type: InteractionType,
    #[serde(rename = "velocity_mps")]
    pub impact_velocity: f64,
    #[serde(rename = "force_n")]
    pub force_magnitude: f64,
    #[serde(rename = "size_m")]
    pub object_size: f64,
    /// Zero for instantaneous impacts.
    #[serde(rename = "duration_s")]
    pub duration: f64,
}

impl CollisionEvent {
    pub fn end(&self) -> f64 {
        self.time + self.duration
    }

    fn check(&self, line: usize, episode_duration: f64) -> Result<(), EventError> {
        let fields: [(&'static str, f64, bool); 5] = [
            ("t", self.time, false),
            ("duration_s", self.duration, false),
            ("velocity_mps", self.impact_velocity, false),
            ("force_n", self.force_magnitude, true),
            ("size_m", self.object_size, true),
        ];
        for (field, value, strict) in fields {
            if !value.is_finite() {
                return Err(EventError::SchemaViolation { line, message: format!("{field} must be finite") });
            }
            if (strict && value <= 0.0) || value < 0.0 {
                return Err(EventError::NegativeQuantity {
                    line,
                    field,
                    requirement: if strict { "positive" } else { "non-negative" },
                    value,
                });
            }
        }
        if self.end() > episode_duration {
            return Err(EventError::EventPastEpisodeEnd { line, end: self.end(), episode_duration });
        }
        Ok(())
    }

    fn group_key(&self) -> (ContactKind, MaterialPair, InteractionType) {
        (self.kind, self.material_pair.clone(), self.interaction_type)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StreamHeader {
    episode_duration_s: f64,
}

/// Time-ordered events of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<CollisionEvent>,
    episode_duration: f64,
}

impl EventStream {
    /// Validates and time-sorts (stably) the given events.
    pub fn new(mut events: Vec<CollisionEvent>, episode_duration: f64) -> Result<Self, EventError> {
        check_duration(0, episode_duration)?;
        for (i, e) in events.iter().enumerate() {
            e.check(i + 1, episode_duration)?;
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self { events, episode_duration })
    }

    pub fn empty(episode_duration: f64) -> Result<Self, EventError> {
        Self::new(Vec::new(), episode_duration)
    }

    pub fn events(&self) -> &[CollisionEvent] {
        &self.events
    }

    pub fn episode_duration(&self) -> f64 {
        self.episode_duration
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Serializes back to the JSONL wire format.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&StreamHeader { episode_duration_s: self.episode_duration })
            .expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

fn check_duration(line: usize, d: f64) -> Result<(), EventError> {
    if !d.is_finite() {
        return Err(EventError::SchemaViolation { line, message: "episode_duration_s must be finite".into() });
    }
    if d < 0.0 {
        return Err(EventError::NegativeQuantity {
            line,
            field: "episode_duration_s",
            requirement: "non-negative",
            value: d,
        });
    }
    Ok(())
}

/// Parses a JSONL event stream: header line, then one event per line.
pub fn parse_events(input: &str) -> Result<EventStream, EventError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());

    let Some((header_line, header_text)) = lines.next() else {
        return Err(EventError::SchemaViolation { line: 1, message: "missing header line".into() });
    };
    let header: StreamHeader = serde_json::from_str(header_text).map_err(|e| EventError::SchemaViolation {
        line: header_line,
        message: format!("invalid header (expected {{\"episode_duration_s\": <seconds>}}): {e}"),
    })?;
    check_duration(header_line, header.episode_duration_s)?;

    let mut events = Vec::new();
    for (line, text) in lines {
        let event: CollisionEvent = serde_json::from_str(text)
            .map_err(|e| EventError::SchemaViolation { line, message: e.to_string() })?;
        event.check(line, header.episode_duration_s)?;
        events.push(event);
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(EventStream { events, episode_duration: header.episode_duration_s })
}

/// Default bridging gap for coalescing: one control period.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1.0 / CONTROL_RATE_HZ;

/// Merges per-frame contact reports into continuous contact intervals using
/// the default control period (1/25 s) for retagging.
pub fn coalesce_contacts(stream: &EventStream, gap_threshold: f64) -> EventStream {
    coalesce_contacts_with_period(stream, gap_threshold, 1.0 / CONTROL_RATE_HZ)
}

/// Merges events of the same `(kind, material_pair, interaction_type)` whose
/// gap `next.t - (prev.t + prev.duration)` is at most `gap_threshold`.
///
/// A merged event spans the union of its constituents and carries their
/// maximum force and velocity; size is taken from the first constituent. A
/// merged event longer than `control_period` becomes `SustainedContact`.
/// Retagging can put an event into a new group, so passes repeat until none
/// merges anything; the result is a fixed point, which makes the function
/// idempotent.
pub fn coalesce_contacts_with_period(stream: &EventStream, gap_threshold: f64, control_period: f64) -> EventStream {
    assert!(gap_threshold >= 0.0, "gap_threshold must be non-negative");
    let mut events = stream.events.clone();
    loop {
        let (merged, changed) = merge_pass(&events, gap_threshold, control_period);
        events = merged;
        if !changed {
            break;
        }
    }
    EventStream { events, episode_duration: stream.episode_duration }
}

fn merge_pass(events: &[CollisionEvent], gap_threshold: f64, control_period: f64) -> (Vec<CollisionEvent>, bool) {
    struct Open {
        index: usize,
        end: f64,
        parts: usize,
    }
    let mut out: Vec<CollisionEvent> = Vec::with_capacity(events.len());
    let mut parts: Vec<usize> = Vec::with_capacity(events.len());
    let mut open: HashMap<_, Open> = HashMap::new();

    for event in events {
        let key = event.group_key();
        if let Some(run) = open.get_mut(&key) {
            if event.time - run.end <= gap_threshold {
                let merged = &mut out[run.index];
                run.end = run.end.max(event.end());
                run.parts += 1;
                parts[run.index] = run.parts;
                merged.force_magnitude = merged.force_magnitude.max(event.force_magnitude);
                merged.impact_velocity = merged.impact_velocity.max(event.impact_velocity);
                merged.duration = span(merged.time, run.end);
                continue;
            }
        }
        open.insert(key, Open { index: out.len(), end: event.end(), parts: 1 });
        out.push(event.clone());
        parts.push(1);
    }

    let changed = out.len() != events.len();
    for (event, &n) in out.iter_mut().zip(&parts) {
        if n > 1 && event.duration > control_period {
            event.interaction_type = InteractionType::SustainedContact;
        }
    }
    // Start times come from already-sorted events, so `out` stays sorted.
    (out, changed)
}

/// Duration from `start` to `end` such that `start + duration <= end` holds
/// in floating point.
fn span(start: f64, end: f64) -> f64 {
    let mut d = end - start;
    while start + d > end && d > 0.0 {
        d = d.next_down();
    }
    d.max(0.0)
}
