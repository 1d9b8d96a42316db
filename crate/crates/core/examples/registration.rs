//! Ground removal and ego-motion recovery on generated frames, compared with
//! the exact motion the scene was built from.

use radarcloud::gt::estimate_ego_motion;
use radarcloud::registration::{fit_ground_plane, remove_ground, IcpConfig, RansacConfig};
use radarcloud::synth::{SceneSpec, SyntheticScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SceneSpec::desk();
    spec.objects.clear();
    let scene = SyntheticScene::new(spec)?;
    let seq = scene.sequence()?;

    let ransac = RansacConfig::default();
    let mut statics = Vec::new();
    for frame in &seq.frames {
        let fit = fit_ground_plane(&frame.cloud, &ransac)?;
        let plane = fit.plane().expect("desk scene has ground");
        let n = plane.normal();
        let kept = remove_ground(&frame.cloud, plane, ransac.inlier_threshold);
        println!(
            "frame {}: normal=({:.4}, {:.4}, {:.4}) offset={:.3} kept {}/{}",
            frame.cloud.frame_id,
            n.x,
            n.y,
            n.z,
            plane.offset(),
            kept.len(),
            frame.cloud.len()
        );
        statics.push(kept);
    }

    let estimated = estimate_ego_motion(&statics, &IcpConfig::default())?;
    for (k, est) in &estimated {
        let (rot_deg, trans_m) = est.distance_to(&seq.ego_motion[k]);
        println!(
            "motion {k}->{}: rotation error {rot_deg:.2e} deg, translation error {trans_m:.2e} m",
            k + 1
        );
    }
    Ok(())
}
