//! Generates the desk scene and writes it as a sequence directory.
//!
//! cargo run --example synth_scene -- /tmp/desk

use std::path::PathBuf;

use radarcloud::io::write_sequence;
use radarcloud::synth::{SceneSpec, SyntheticScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("radarcloud-desk"));

    let scene = SyntheticScene::new(SceneSpec::desk())?;
    let seq = scene.sequence()?;
    for (k, frame) in seq.frames.iter().enumerate() {
        let radar = scene.spec().radar.as_ref().expect("desk scene has a radar");
        let rf = scene.radar_frame(radar, k)?;
        println!(
            "frame {k}: lidar_points={} objects={} radar_targets={} skipped={}",
            frame.cloud.len(),
            frame.labels.len(),
            rf.targets.len(),
            rf.skipped.len()
        );
    }
    write_sequence(&out, &seq)?;
    println!("wrote {}", out.display());
    Ok(())
}
