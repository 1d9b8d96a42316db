//! Weighted dice + focal loss over three decoder layers, with analytic
//! gradients compared against central differences.

use radarcloud::loss::{gradient_check, hybrid_loss, LossConfig, PredictionGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = LossConfig::default();
    let layers: Vec<PredictionGrid> = [512, 64, 8]
        .into_iter()
        .map(|n| {
            let targets: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
            let probs = targets
                .iter()
                .map(|&t| {
                    if t {
                        rng.random_range(0.4..0.95)
                    } else {
                        rng.random_range(0.02..0.5)
                    }
                })
                .collect();
            PredictionGrid::new(probs, targets)
        })
        .collect::<Result<_, _>>()?;

    let loss = hybrid_loss(&layers, &cfg)?;
    println!("lambda_f={} total={:.6}", cfg.lambda_f, loss.value);
    for (i, l) in loss.layers.iter().enumerate() {
        println!(
            "layer {i}: weight={} dice={:.6} focal={:.3e} weighted={:.6}",
            l.weight, l.dice, l.focal, l.weighted
        );
    }

    let small = &layers[2];
    let check = gradient_check(small, &cfg, 1e-6);
    println!(
        "gradient check on {} voxels: dice rel err={:.2e} focal rel err={:.2e}",
        small.len(),
        check.dice,
        check.focal
    );
    Ok(())
}
