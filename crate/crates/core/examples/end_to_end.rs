//! Matched-budget comparison on the pole field: CA- and OS-CFAR against
//! thresholding the clean doubled-resolution score field.

use radarcloud::cfar::{cfar_score_field, CfarConfig};
use radarcloud::gt::{GtConfig, GtPipeline};
use radarcloud::metrics::{
    cells_above, evaluate, grid_to_point_cloud, scores_to_point_cloud, threshold_sweep, MetricConfig,
};
use radarcloud::synth::{SceneSpec, SyntheticScene};
use radarcloud::RadarTensor4D;

const BUDGETS: [usize; 2] = [400, 500];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = 3;
    let scene = SyntheticScene::new(SceneSpec::pole_field())?;
    let seq = scene.sequence()?;
    let gt = grid_to_point_cloud(&GtPipeline::new(GtConfig::default()).run(&seq, k)?.grid);
    let tensor = seq.frames[k].radar.clone().expect("frame has radar");
    let spec = *tensor.spec();
    let metric = MetricConfig::default();

    let oracle = scene.oracle_score_field(&spec, k);
    for entry in threshold_sweep(&oracle, &BUDGETS)? {
        let cloud = scores_to_point_cloud(&oracle, &spec, entry.threshold)?;
        println!(
            "oracle budget={} {}",
            entry.target,
            evaluate(&gt, &cloud, &metric)?.to_line()
        );
    }
    for (name, cfg) in [("ca", CfarConfig::ca(2, 8, 8.0)), ("os", CfarConfig::os(2, 8, 12, 8.0))] {
        let scores = RadarTensor4D::new(spec, cfar_score_field(&tensor, &cfg)?)?;
        for entry in threshold_sweep(scores.data(), &BUDGETS)? {
            let cloud = cells_above(&scores, entry.threshold);
            println!(
                "{name} budget={} {}",
                entry.target,
                evaluate(&gt, &cloud, &metric)?.to_line()
            );
        }
    }
    Ok(())
}
