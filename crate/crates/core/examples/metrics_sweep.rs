//! Point-budget evaluation: sweep a CFAR score field to fixed point counts
//! and score each cloud against the dense ground truth.

use radarcloud::cfar::{cfar_score_field, CfarConfig};
use radarcloud::gt::{GtConfig, GtPipeline};
use radarcloud::metrics::{cells_above, evaluate, grid_to_point_cloud, threshold_sweep, MetricConfig};
use radarcloud::synth::{SceneSpec, SyntheticScene};
use radarcloud::RadarTensor4D;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = 3;
    let scene = SyntheticScene::new(SceneSpec::pole_field())?;
    let seq = scene.sequence()?;
    let gt = grid_to_point_cloud(&GtPipeline::new(GtConfig::default()).run(&seq, k)?.grid);
    let tensor = seq.frames[k].radar.clone().expect("frame has radar");

    let scores = cfar_score_field(&tensor, &CfarConfig::os(2, 8, 12, 8.0))?;
    let scores = RadarTensor4D::new(*tensor.spec(), scores)?;
    let metric = MetricConfig::default();
    println!("gt voxels={}", gt.len());
    for entry in threshold_sweep(scores.data(), &[100, 200, 400, 800, 1600])? {
        let cloud = cells_above(&scores, entry.threshold);
        let report = evaluate(&gt, &cloud, &metric)?;
        println!(
            "budget={} threshold={:.4} {}",
            entry.target,
            entry.threshold,
            report.to_line()
        );
    }
    Ok(())
}
