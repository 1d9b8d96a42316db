//! Weighted hybrid dice + focal loss over multi-resolution occupancy
//! predictions, with analytic gradients.
//!
//! The focal term is **mean**-reduced over voxels, so `lambda_f` keeps the
//! same meaning whatever the grid size. Probabilities are clamped to
//! `[1e-7, 1 - 1e-7]` before use; the gradient is zero for inputs outside
//! that band.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("prediction has {pred} voxels but target has {target}")]
    ShapeMismatch { pred: usize, target: usize },
    #[error("probability {value} at voxel {index} is not in [0, 1]")]
    InvalidProbability { index: usize, value: f64 },
    #[error("expected {expected} layers, got {got}")]
    LayerCount { expected: usize, got: usize },
    #[error("invalid loss configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Weight of the focal term against the dice term.
    pub lambda_f: f64,
    pub focal_gamma: f64,
    pub focal_alpha: f64,
    pub dice_smooth: f64,
    pub layer_weights: Vec<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_f: 700.0,
            focal_gamma: 2.0,
            focal_alpha: 0.25,
            dice_smooth: 1.0,
            layer_weights: vec![1.0, 0.5, 0.25],
        }
    }
}

impl LossConfig {
    /// `lambda_f = 0` is accepted so the pure dice objective stays reachable.
    pub fn validate(&self) -> Result<(), LossError> {
        let bad = |m: String| Err(LossError::InvalidConfig(m));
        if !(self.lambda_f.is_finite() && self.lambda_f >= 0.0) {
            return bad(format!("lambda_f must be >= 0, got {}", self.lambda_f));
        }
        if !(self.focal_gamma.is_finite() && self.focal_gamma >= 0.0) {
            return bad(format!("focal_gamma must be >= 0, got {}", self.focal_gamma));
        }
        if !(self.focal_alpha > 0.0 && self.focal_alpha < 1.0) {
            return bad(format!("focal_alpha must be in (0, 1), got {}", self.focal_alpha));
        }
        if !(self.dice_smooth.is_finite() && self.dice_smooth > 0.0) {
            return bad(format!("dice_smooth must be > 0, got {}", self.dice_smooth));
        }
        if self.layer_weights.is_empty() || self.layer_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad(format!(
                "layer weights must be non-empty and >= 0, got {:?}",
                self.layer_weights
            ));
        }
        Ok(())
    }
}

/// Occupancy probabilities with their binary target, flattened in the same
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid {
    probabilities: Vec<f64>,
    targets: Vec<bool>,
}

impl PredictionGrid {
    pub fn new(probabilities: Vec<f64>, targets: Vec<bool>) -> Result<Self, LossError> {
        if probabilities.len() != targets.len() {
            return Err(LossError::ShapeMismatch {
                pred: probabilities.len(),
                target: targets.len(),
            });
        }
        if let Some((index, &value)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(LossError::InvalidProbability { index, value });
        }
        Ok(Self { probabilities, targets })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn targets(&self) -> &[bool] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

fn clamped(p: f64) -> (f64, bool) {
    let c = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    (c, c == p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// d value / d p, one entry per voxel.
    pub gradient: Vec<f64>,
}

/// `1 - (2 Σpg + ε) / (Σp + Σg + ε)`.
pub fn dice_loss(pred: &PredictionGrid, cfg: &LossConfig) -> LossValue {
    let eps = cfg.dice_smooth;
    let (mut sum_p, mut sum_g, mut inter) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.probabilities.iter().zip(&pred.targets) {
        let p = clamped(p).0;
        sum_p += p;
        if g {
            sum_g += 1.0;
            inter += p;
        }
    }
    let num = 2.0 * inter + eps;
    let den = sum_p + sum_g + eps;
    let gradient = pred
        .probabilities
        .iter()
        .zip(&pred.targets)
        .map(|(&p, &g)| {
            if !clamped(p).1 {
                return 0.0;
            }
            let g = if g { 1.0 } else { 0.0 };
            -(2.0 * g * den - num) / (den * den)
        })
        .collect();
    LossValue {
        value: 1.0 - num / den,
        gradient,
    }
}

/// Mean over voxels of `-α_t (1 - p_t)^γ log p_t`.
pub fn focal_loss(pred: &PredictionGrid, cfg: &LossConfig) -> LossValue {
    let n = pred.len().max(1) as f64;
    let (alpha, gamma) = (cfg.focal_alpha, cfg.focal_gamma);
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(pred.len());
    for (&p_raw, &g) in pred.probabilities.iter().zip(&pred.targets) {
        let (p, inside) = clamped(p_raw);
        let (pt, at, sign) = if g {
            (p, alpha, 1.0)
        } else {
            (1.0 - p, 1.0 - alpha, -1.0)
        };
        let q = 1.0 - pt;
        value += -at * q.powf(gamma) * pt.ln();
        // d/dpt of -(1-pt)^γ log pt, then dpt/dp = sign
        let mut d = -q.powf(gamma) / pt;
        if gamma != 0.0 {
            d += gamma * q.powf(gamma - 1.0) * pt.ln();
        }
        gradient.push(if inside { sign * at * d / n } else { 0.0 });
    }
    LossValue {
        value: value / n,
        gradient,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerLoss {
    pub weight: f64,
    pub dice: f64,
    pub focal: f64,
    /// `weight * (dice + lambda_f * focal)`
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridLoss {
    pub value: f64,
    pub layers: Vec<LayerLoss>,
    /// Gradient of the total with respect to each layer's probabilities.
    pub gradients: Vec<Vec<f64>>,
}

/// `Σ_i w_i (dice_i + λ_F focal_i)` over one prediction per resolution,
/// finest first. Each layer carries its own target.
pub fn hybrid_loss(preds: &[PredictionGrid], cfg: &LossConfig) -> Result<HybridLoss, LossError> {
    cfg.validate()?;
    if preds.len() != cfg.layer_weights.len() {
        return Err(LossError::LayerCount {
            expected: cfg.layer_weights.len(),
            got: preds.len(),
        });
    }
    let mut out = HybridLoss {
        value: 0.0,
        layers: Vec::with_capacity(preds.len()),
        gradients: Vec::with_capacity(preds.len()),
    };
    for (pred, &w) in preds.iter().zip(&cfg.layer_weights) {
        let dice = dice_loss(pred, cfg);
        let focal = focal_loss(pred, cfg);
        let weighted = w * (dice.value + cfg.lambda_f * focal.value);
        out.value += weighted;
        out.layers.push(LayerLoss {
            weight: w,
            dice: dice.value,
            focal: focal.value,
            weighted,
        });
        out.gradients.push(
            dice.gradient
                .iter()
                .zip(&focal.gradient)
                .map(|(d, f)| w * (d + cfg.lambda_f * f))
                .collect(),
        );
    }
    Ok(out)
}

/// Central differences of `f` at `p` with step `h`, one coordinate at a time.
pub fn finite_difference_gradient(p: &[f64], h: f64, f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let all: Vec<usize> = (0..p.len()).collect();
    finite_difference_at(p, h, &all, f)
}

/// Central differences of `f` at `p` along the listed coordinates only.
pub fn finite_difference_at(p: &[f64], h: f64, indices: &[usize], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = p.to_vec();
    indices
        .iter()
        .map(|&i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `max_i |a_i - b_i| / max(|a_i|, |b_i|)`, with exact matches counting as 0.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub dice: f64,
    pub focal: f64,
}

/// Max relative error of the analytic dice and focal gradients against
/// central differences with step `h`.
pub fn gradient_check(pred: &PredictionGrid, cfg: &LossConfig, h: f64) -> GradientCheck {
    let all: Vec<usize> = (0..pred.len()).collect();
    gradient_check_at(pred, cfg, h, &all)
}

/// As [`gradient_check`], restricted to the voxels in `indices`. Each probed
/// voxel costs two full loss evaluations.
pub fn gradient_check_at(pred: &PredictionGrid, cfg: &LossConfig, h: f64, indices: &[usize]) -> GradientCheck {
    let with = |p: &[f64]| PredictionGrid {
        probabilities: p.to_vec(),
        targets: pred.targets.clone(),
    };
    let pick = |g: Vec<f64>| indices.iter().map(|&i| g[i]).collect::<Vec<_>>();
    let fd_dice = finite_difference_at(&pred.probabilities, h, indices, |p| dice_loss(&with(p), cfg).value);
    let fd_focal = finite_difference_at(&pred.probabilities, h, indices, |p| focal_loss(&with(p), cfg).value);
    GradientCheck {
        dice: max_relative_error(&pick(dice_loss(pred, cfg).gradient), &fd_dice),
        focal: max_relative_error(&pick(focal_loss(pred, cfg).gradient), &fd_focal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> PredictionGrid {
        let p = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
        let g = (0..n).map(|_| rng.random_bool(0.4)).collect();
        PredictionGrid::new(p, g).unwrap()
    }

    fn perfect(targets: Vec<bool>) -> PredictionGrid {
        let p = targets.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
        PredictionGrid::new(p, targets).unwrap()
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            PredictionGrid::new(vec![0.5], vec![true, false]),
            Err(LossError::ShapeMismatch { pred: 1, target: 2 })
        ));
        assert!(matches!(
            PredictionGrid::new(vec![0.5, 1.5], vec![true, false]),
            Err(LossError::InvalidProbability { index: 1, .. })
        ));
        assert!(PredictionGrid::new(vec![f64::NAN], vec![true]).is_err());
        let cfg = LossConfig {
            focal_alpha: 1.0,
            ..LossConfig::default()
        };
        assert!(cfg.validate().is_err());
        let g = perfect(vec![true; 8]);
        assert!(matches!(
            hybrid_loss(&[g.clone(), g], &LossConfig::default()),
            Err(LossError::LayerCount { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn dice_limits() {
        let cfg = LossConfig::default();
        assert!(dice_loss(&perfect(vec![true; 1000]), &cfg).value < 1e-6);
        let tiny = PredictionGrid::new(vec![1e-4; 1000], vec![false; 1000]).unwrap();
        let v = dice_loss(&tiny, &cfg).value;
        assert!((v - (1.0 - 1.0 / (0.1 + 1.0))).abs() < 1e-12);
        let tinier = PredictionGrid::new(vec![1e-6; 1000], vec![false; 1000]).unwrap();
        assert!(dice_loss(&tinier, &cfg).value < v);
    }

    #[test]
    fn focal_limits_and_bce() {
        let cfg = LossConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let targets: Vec<bool> = (0..100).map(|_| rng.random_bool(0.5)).collect();
        assert!(focal_loss(&perfect(targets), &cfg).value < 1e-12);

        let bce_cfg = LossConfig {
            focal_gamma: 0.0,
            focal_alpha: 0.5,
            ..cfg
        };
        let g = random_grid(&mut rng, 64);
        let bce = g
            .probabilities()
            .iter()
            .zip(g.targets())
            .map(|(&p, &t)| if t { -p.ln() } else { -(1.0 - p).ln() })
            .sum::<f64>()
            / 64.0;
        assert!((focal_loss(&g, &bce_cfg).value - 0.5 * bce).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = LossConfig::default();
        for _ in 0..100 {
            let layers: Vec<PredictionGrid> = (0..3).map(|_| random_grid(&mut rng, 64)).collect();
            let check = gradient_check(&layers[0], &cfg, 1e-5);
            assert!(check.dice < 1e-4 && check.focal < 1e-4, "{check:?}");

            let hybrid = hybrid_loss(&layers, &cfg).unwrap();
            for (i, layer) in layers.iter().enumerate() {
                let fd = finite_difference_gradient(layer.probabilities(), 1e-5, |p| {
                    let mut ls = layers.clone();
                    ls[i].probabilities = p.to_vec();
                    hybrid_loss(&ls, &cfg).unwrap().value
                });
                assert!(max_relative_error(&hybrid.gradients[i], &fd) < 1e-4);
            }
        }
    }

    #[test]
    fn clamped_inputs_have_zero_gradient() {
        let g = PredictionGrid::new(vec![0.0, 1.0, 0.5], vec![true, false, true]).unwrap();
        let cfg = LossConfig::default();
        for grad in [dice_loss(&g, &cfg).gradient, focal_loss(&g, &cfg).gradient] {
            assert_eq!(&grad[..2], &[0.0, 0.0]);
            assert!(grad[2] != 0.0);
        }
        assert!(focal_loss(&g, &cfg).value.is_finite());
    }

    #[test]
    fn hybrid_weighting() {
        let cfg = LossConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let layer = random_grid(&mut rng, 64);
        let one = hybrid_loss(&[layer.clone(), layer.clone(), layer.clone()], &cfg).unwrap();
        let l = one.layers[0].dice + cfg.lambda_f * one.layers[0].focal;
        assert!((one.value - 1.75 * l).abs() < 1e-12 * l);

        let layers: Vec<PredictionGrid> = [64, 8, 1].iter().map(|&n| random_grid(&mut rng, n)).collect();
        let h = hybrid_loss(&layers, &cfg).unwrap();
        let by_hand: f64 = layers
            .iter()
            .zip([1.0, 0.5, 0.25])
            .map(|(g, w)| w * (dice_loss(g, &cfg).value + 700.0 * focal_loss(g, &cfg).value))
            .sum();
        assert!((h.value - by_hand).abs() < 1e-12);

        let dice_only = hybrid_loss(
            &layers,
            &LossConfig {
                lambda_f: 0.0,
                ..cfg.clone()
            },
        )
        .unwrap();
        let dice_sum: f64 = layers
            .iter()
            .zip([1.0, 0.5, 0.25])
            .map(|(g, w)| w * dice_loss(g, &cfg).value)
            .sum();
        assert_eq!(dice_only.value, dice_sum);

        let perfect_layers: Vec<PredictionGrid> = [1000, 125, 27]
            .iter()
            .map(|&n| perfect((0..n).map(|i| i % 3 != 0).collect()))
            .collect();
        assert!(hybrid_loss(&perfect_layers, &cfg).unwrap().value < 1e-5);
    }

    #[test]
    fn moving_toward_target_decreases_loss() {
        let cfg = LossConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let layers: Vec<PredictionGrid> = (0..3).map(|_| random_grid(&mut rng, 27)).collect();
            let base = hybrid_loss(&layers, &cfg).unwrap();
            assert!(base
                .layers
                .iter()
                .all(|l| l.dice >= 0.0 && l.dice < 1.0 && l.focal >= 0.0));
            let (i, v) = (rng.random_range(0..3), rng.random_range(0..27));
            let mut moved = layers.clone();
            let p = moved[i].probabilities[v];
            moved[i].probabilities[v] = if moved[i].targets[v] {
                p + (1.0 - p) * 0.5
            } else {
                p * 0.5
            };
            assert!(hybrid_loss(&moved, &cfg).unwrap().value < base.value);
        }
    }
}
