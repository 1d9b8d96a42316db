//! Dense ground truth for one frame of the desk scene: stitch neighbouring
//! LiDAR frames, drop the ground, voxelize at doubled resolution and keep
//! voxels whose radar parent cell is bright enough.

use radarcloud::gt::{GtConfig, GtPipeline};
use radarcloud::synth::{SceneSpec, SyntheticScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = SyntheticScene::new(SceneSpec::desk())?;
    let seq = scene.sequence()?;
    let k = seq.len() / 2;

    for t in [0, 1, seq.stitch_window] {
        let pipeline = GtPipeline::new(GtConfig {
            stitch_window: Some(t),
            ..GtConfig::default()
        });
        let gt = pipeline.run(&seq, k)?;
        let [nr, ne, na] = gt.grid.dims();
        println!(
            "frame {k} t={t}: raw={} stitched={} voxelized={} kept={} threshold={:.3} grid={nr}x{ne}x{na}",
            seq.frames[k].cloud.len(),
            gt.stitched.len(),
            gt.voxelized.occupied_count(),
            gt.grid.occupied_count(),
            gt.intensity_threshold
        );
    }
    Ok(())
}
