use contact_audio_web::{fuse_demo, material_pairs, render_contact, spectrogram};

#[test]
fn pairs_are_listed_once() {
    let pairs: Vec<String> = serde_json::from_str(&material_pairs()).unwrap();
    assert_eq!(pairs.len(), 5);
    assert!(pairs.contains(&"rubber/wood".to_string()));
}

#[test]
fn render_then_spectrogram() {
    let samples = render_contact("rubber/steel", "scrape", 2.0, 0.05, 0.5).unwrap();
    // 0.05 s onset + 0.6 s minimum body + 0.4 s tail.
    assert_eq!(samples.len(), 50_400);
    assert!(samples.iter().any(|s| s.abs() > 0.01));
    let spec = spectrogram(&samples).unwrap();
    assert_eq!(spec.bins(), 1025);
    assert_eq!(spec.frames(), (samples.len() - 1024) / 256 + 1);
    assert_eq!(spec.data().len(), spec.bins() * spec.frames());
    assert!(spec.min_db() >= -180.0 && spec.max_db() > spec.min_db());
}

#[test]
fn bad_inputs_are_errors_not_panics() {
    assert!(render_contact("rubber", "impact", 1.0, 0.05, 0.0).is_err());
    assert!(render_contact("rubber/wood", "slide", 1.0, 0.05, 0.0).is_err());
    assert!(render_contact("felt/glass", "impact", 1.0, 0.05, 0.0).is_err());
    assert!(render_contact("rubber/wood", "impact", -1.0, 0.05, 0.0).is_err());
    assert!(spectrogram(&[0.0; 100]).is_err());
}

#[test]
fn fuse_demo_uses_rendered_audio() {
    let samples = render_contact("rubber/wood", "impact", 1.0, 0.05, 0.0).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fuse_demo(3, 4, 7, &samples).unwrap()).unwrap();
    assert_eq!(v["audio_source"], "spectrogram");
    assert_eq!(v["action_block"].as_array().unwrap().len(), 4);
    assert_eq!(v["sequence_shape"][0], v["expected_sequence_rows"]);
    let synthetic: serde_json::Value = serde_json::from_str(&fuse_demo(3, 4, 7, &[]).unwrap()).unwrap();
    assert_eq!(synthetic["audio_source"], "synthetic");
}
