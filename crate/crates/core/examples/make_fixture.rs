//! Writes a small procedural library, a 5-event stream and an episode log.
//!
//! ```text
//! cargo run -p contact-audio --example make_fixture -- <out-dir>
//! ```

use std::path::PathBuf;

use contact_audio::library::{LibraryManifest, ManifestEntry};
use contact_audio::procedural::preset_clip;
use contact_audio::{wav, InteractionType, MaterialPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixture".into()).into();
    std::fs::create_dir_all(out.join("clips"))?;

    let specs = [
        ("rubber-wood-impact-1n", ("rubber", "wood"), InteractionType::Impact, 1.0),
        ("rubber-wood-impact-4n", ("rubber", "wood"), InteractionType::Impact, 4.0),
        ("rubber-steel-scrape-2n", ("rubber", "steel"), InteractionType::Scrape, 2.0),
        ("plastic-whiteboard-sustained-1n", ("plastic", "whiteboard"), InteractionType::SustainedContact, 1.0),
    ];
    let mut entries = Vec::new();
    for (seed, (id, (a, b), interaction, force)) in specs.into_iter().enumerate() {
        let clip = preset_clip(id, MaterialPair::new(a, b), interaction, force, 0.05, seed as u64 + 1);
        let file = PathBuf::from("clips").join(format!("{id}.wav"));
        wav::write_i16(out.join(&file), &clip.samples, clip.sample_rate, 1)?;
        entries.push(ManifestEntry {
            clip_id: id.to_string(),
            file,
            material_pair: clip.material_pair,
            interaction_type: interaction,
            force_reference_n: force,
            size_reference_m: 0.05,
            symmetric: false,
        });
    }
    let manifest = LibraryManifest { version: 1, entries };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    let events = [
        r#"{"episode_duration_s": 2.0}"#,
        r#"{"t": 0.10, "kind": "gripper_object", "material_pair": ["rubber", "wood"], "interaction": "impact", "velocity_mps": 0.35, "force_n": 2.0, "size_m": 0.05, "duration_s": 0.0}"#,
        r#"{"t": 0.42, "kind": "object_environment", "material_pair": ["rubber", "steel"], "interaction": "scrape", "velocity_mps": 0.10, "force_n": 1.5, "size_m": 0.08, "duration_s": 0.30}"#,
        r#"{"t": 0.80, "kind": "gripper_object", "material_pair": ["plastic", "whiteboard"], "interaction": "sustained", "velocity_mps": 0.05, "force_n": 1.2, "size_m": 0.03, "duration_s": 0.60}"#,
        r#"{"t": 1.50, "kind": "gripper_object", "material_pair": ["rubber", "wood"], "interaction": "impact", "velocity_mps": 0.60, "force_n": 5.0, "size_m": 0.02, "duration_s": 0.0}"#,
        r#"{"t": 1.52, "kind": "gripper_object", "material_pair": ["rubber", "wood"], "interaction": "impact", "velocity_mps": 0.20, "force_n": 1.0, "size_m": 0.02, "duration_s": 0.0}"#,
    ];
    std::fs::write(out.join("events.jsonl"), events.join("\n") + "\n")?;

    let episodes = [
        r#"{"task": "erase_whiteboard", "achieved": 42.0, "target": 42.0, "success": true}"#,
        r#"{"task": "erase_whiteboard", "achieved": 30.5, "target": 42.0, "success": false}"#,
        r#"{"task": "erase_whiteboard", "achieved": 42.0, "target": 42.0, "success": true}"#,
        r#"{"task": "scoop_5g_oatmeal", "achieved": 5.4, "target": 5.0, "success": true}"#,
        r#"{"task": "scoop_5g_oatmeal", "achieved": 2.5, "target": 5.0, "success": false}"#,
    ];
    std::fs::write(out.join("episodes.jsonl"), episodes.join("\n") + "\n")?;
    println!("wrote fixture to {}", out.display());
    Ok(())
}
