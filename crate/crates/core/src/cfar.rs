//! Cell-averaging and ordered-statistic CFAR on a [`RadarTensor4D`].
//!
//! The window is one-dimensional along [`CfarAxis`]: `guard_cells` on each
//! side of the cell under test are skipped, the next `train_cells` on each
//! side estimate the noise level. A cell is a detection when
//! `Z > threshold_scale · Z_noise` (strict). Training cells from both sides
//! are pooled before the OS rank is taken.
//!
//! [`cfar`] is the fast path (prefix sums for CA, a sliding sorted window for
//! OS). [`cfar_oracle`] recomputes every statistic from scratch per cell and
//! is kept as the reference for equivalence tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{Point, PointCloud};
use crate::geometry::{spherical_to_cartesian, SphericalCoord};
use crate::grid::{GridSpec, RadarTensor4D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfarError {
    #[error("invalid CFAR configuration: {0}")]
    InvalidConfig(String),
    #[error("CFAR window of {window} cells does not fit the {axis:?} axis of length {axis_len}")]
    WindowTooLarge {
        axis: CfarAxis,
        window: usize,
        axis_len: usize,
    },
    #[error("expected a {expected:?} configuration, got {actual:?}")]
    VariantMismatch { expected: CfarVariant, actual: CfarVariant },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfarVariant {
    #[serde(alias = "ca")]
    CellAveraging,
    #[serde(alias = "os")]
    OrderedStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfarAxis {
    Range,
    Doppler,
}

/// What happens to cells whose full window leaves the tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgePolicy {
    /// Never detected.
    Skip,
    /// Training cells per side shrink to what fits on both sides; the OS
    /// rank is rescaled proportionally.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarConfig {
    pub variant: CfarVariant,
    pub axis: CfarAxis,
    pub guard_cells: usize,
    pub train_cells: usize,
    pub threshold_scale: f64,
    /// 1-based rank among the pooled training cells (OS only).
    pub order_k: usize,
    pub edge_policy: EdgePolicy,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self {
            variant: CfarVariant::CellAveraging,
            axis: CfarAxis::Range,
            guard_cells: 2,
            train_cells: 4,
            threshold_scale: 8.0,
            order_k: 6,
            edge_policy: EdgePolicy::Skip,
        }
    }
}

impl CfarConfig {
    pub fn ca(guard_cells: usize, train_cells: usize, threshold_scale: f64) -> Self {
        Self {
            variant: CfarVariant::CellAveraging,
            guard_cells,
            train_cells,
            threshold_scale,
            ..Self::default()
        }
    }

    pub fn os(guard_cells: usize, train_cells: usize, order_k: usize, threshold_scale: f64) -> Self {
        Self {
            variant: CfarVariant::OrderedStatistic,
            guard_cells,
            train_cells,
            threshold_scale,
            order_k,
            ..Self::default()
        }
    }

    pub fn with_axis(mut self, axis: CfarAxis) -> Self {
        self.axis = axis;
        self
    }

    pub fn with_edge_policy(mut self, edge_policy: EdgePolicy) -> Self {
        self.edge_policy = edge_policy;
        self
    }

    pub fn with_threshold_scale(mut self, threshold_scale: f64) -> Self {
        self.threshold_scale = threshold_scale;
        self
    }

    pub fn validate(&self) -> Result<(), CfarError> {
        if self.train_cells < 1 {
            return Err(CfarError::InvalidConfig("train_cells must be >= 1".into()));
        }
        if !(self.threshold_scale.is_finite() && self.threshold_scale > 0.0) {
            return Err(CfarError::InvalidConfig(format!(
                "threshold_scale must be > 0, got {}",
                self.threshold_scale
            )));
        }
        if self.variant == CfarVariant::OrderedStatistic && !(1..=2 * self.train_cells).contains(&self.order_k) {
            return Err(CfarError::InvalidConfig(format!(
                "order_k must be in 1..={}, got {}",
                2 * self.train_cells,
                self.order_k
            )));
        }
        Ok(())
    }

    fn half_window(&self) -> usize {
        self.guard_cells + self.train_cells
    }

    fn check_fits(&self, spec: &GridSpec) -> Result<(), CfarError> {
        let axis_len = match self.axis {
            CfarAxis::Range => spec.range_bins,
            CfarAxis::Doppler => spec.doppler_bins,
        };
        let window = 2 * self.half_window();
        if window >= axis_len {
            return Err(CfarError::WindowTooLarge {
                axis: self.axis,
                window,
                axis_len,
            });
        }
        Ok(())
    }

    /// Training cells per side at position `i` of a line of length `n`, or
    /// `None` if the cell cannot be tested.
    fn train_at(&self, i: usize, n: usize) -> Option<usize> {
        let g = self.guard_cells;
        let left = i.checked_sub(g)?;
        let right = (n - 1 - i).checked_sub(g)?;
        let available = left.min(right);
        match self.edge_policy {
            EdgePolicy::Skip => (available >= self.train_cells).then_some(self.train_cells),
            EdgePolicy::Clamp => {
                let t = available.min(self.train_cells);
                (t >= 1).then_some(t)
            }
        }
    }

    /// OS rank for a window of `t` cells per side.
    fn rank_for(&self, t: usize) -> usize {
        if t == self.train_cells {
            self.order_k
        } else {
            (self.order_k * t).div_ceil(self.train_cells).max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// (d, r, e, a)
    pub index: [usize; 4],
    pub intensity: f64,
    pub position: SphericalCoord,
    pub doppler_velocity: f64,
}

/// Detections sorted by flat tensor offset; indices are unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionList {
    pub detections: Vec<Detection>,
}

impl DetectionList {
    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn indices(&self) -> Vec<[usize; 4]> {
        self.detections.iter().map(|d| d.index).collect()
    }

    fn from_mask(tensor: &RadarTensor4D, mask: &[bool]) -> Self {
        let spec = tensor.spec();
        let detections = mask
            .iter()
            .enumerate()
            .filter(|(_, hit)| **hit)
            .map(|(offset, _)| {
                let index = tensor.index_of(offset);
                let [d, r, e, a] = index;
                Detection {
                    index,
                    intensity: tensor.data()[offset],
                    position: spec.bin_center(r, e, a),
                    doppler_velocity: spec.doppler_velocity(d),
                }
            })
            .collect();
        Self { detections }
    }
}

/// Iterates the tensor as 1-D lines along `axis`: yields (offset of the
/// first cell, stride, length).
fn lines(spec: &GridSpec, axis: CfarAxis) -> impl Iterator<Item = (usize, usize, usize)> {
    let (nd, nr, ne, na) = (
        spec.doppler_bins,
        spec.range_bins,
        spec.elevation_bins,
        spec.azimuth_bins,
    );
    let ea = ne * na;
    // (outer lines, inner lines, stride, length)
    let (outer, inner, stride, len) = match axis {
        CfarAxis::Range => (nd, ea, ea, nr),
        CfarAxis::Doppler => (1, nr * ea, nr * ea, nd),
    };
    (0..outer).flat_map(move |o| (0..inner).map(move |i| (o * nr * ea + i, stride, len)))
}

fn validate_for(tensor: &RadarTensor4D, cfg: &CfarConfig) -> Result<(), CfarError> {
    cfg.validate()?;
    cfg.check_fits(tensor.spec())
}

pub fn ca_cfar(tensor: &RadarTensor4D, cfg: &CfarConfig) -> Result<DetectionList, CfarError> {
    expect_variant(cfg, CfarVariant::CellAveraging)?;
    cfar(tensor, cfg)
}

pub fn os_cfar(tensor: &RadarTensor4D, cfg: &CfarConfig) -> Result<DetectionList, CfarError> {
    expect_variant(cfg, CfarVariant::OrderedStatistic)?;
    cfar(tensor, cfg)
}

fn expect_variant(cfg: &CfarConfig, expected: CfarVariant) -> Result<(), CfarError> {
    if cfg.variant != expected {
        return Err(CfarError::VariantMismatch {
            expected,
            actual: cfg.variant,
        });
    }
    Ok(())
}

/// Runs the variant selected by `cfg.variant`.
pub fn cfar(tensor: &RadarTensor4D, cfg: &CfarConfig) -> Result<DetectionList, CfarError> {
    Ok(DetectionList::from_mask(tensor, &cfar_mask(tensor, cfg)?))
}

/// Per-cell detection flags in tensor memory order.
pub fn cfar_mask(tensor: &RadarTensor4D, cfg: &CfarConfig) -> Result<Vec<bool>, CfarError> {
    validate_for(tensor, cfg)?;
    let data = tensor.data();
    let mut mask = vec![false; data.len()];
    let mut line = Vec::new();
    let mut scratch = Vec::new();
    let delta = cfg.threshold_scale;
    for (start, stride, n) in lines(tensor.spec(), cfg.axis) {
        line.clear();
        line.extend((0..n).map(|i| data[start + i * stride]));
        match cfg.variant {
            CfarVariant::CellAveraging => {
                ca_line(&line, cfg, &mut scratch, |i, noise| {
                    mask[start + i * stride] = line[i] > delta * noise;
                });
            }
            CfarVariant::OrderedStatistic => {
                os_line(&line, cfg, &mut scratch, |i, noise| {
                    mask[start + i * stride] = line[i] > delta * noise;
                });
            }
        }
    }
    Ok(mask)
}

/// Ratio `Z / Z_noise` per cell (0 where the cell cannot be tested, and
/// `f32::MAX` for a positive cell over a zero noise estimate, so score files
/// hold it exactly). Thresholding this field at `δ` reproduces the detector
/// up to rounding; it is what the point-budget sweep tunes.
pub fn cfar_score_field(tensor: &RadarTensor4D, cfg: &CfarConfig) -> Result<Vec<f64>, CfarError> {
    validate_for(tensor, cfg)?;
    let data = tensor.data();
    let mut scores = vec![0.0; data.len()];
    let mut line = Vec::new();
    let mut scratch = Vec::new();
    for (start, stride, n) in lines(tensor.spec(), cfg.axis) {
        line.clear();
        line.extend((0..n).map(|i| data[start + i * stride]));
        let mut record = |i: usize, noise: f64| {
            let z = line[i];
            scores[start + i * stride] = if noise > 0.0 {
                z / noise
            } else if z > 0.0 {
                f64::from(f32::MAX)
            } else {
                0.0
            };
        };
        match cfg.variant {
            CfarVariant::CellAveraging => ca_line(&line, cfg, &mut scratch, &mut record),
            CfarVariant::OrderedStatistic => os_line(&line, cfg, &mut scratch, &mut record),
        }
    }
    Ok(scores)
}

fn ca_line(line: &[f64], cfg: &CfarConfig, prefix: &mut Vec<f64>, mut emit: impl FnMut(usize, f64)) {
    let n = line.len();
    let g = cfg.guard_cells;
    prefix.clear();
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in line {
        acc += v;
        prefix.push(acc);
    }
    for i in 0..n {
        let Some(t) = cfg.train_at(i, n) else { continue };
        let left = prefix[i - g] - prefix[i - g - t];
        let right = prefix[i + g + t + 1] - prefix[i + g + 1];
        emit(i, (left + right) / (2 * t) as f64);
    }
}

fn os_line(line: &[f64], cfg: &CfarConfig, window: &mut Vec<f64>, mut emit: impl FnMut(usize, f64)) {
    let n = line.len();
    let g = cfg.guard_cells;
    let full = cfg.train_cells;
    let k = cfg.order_k;
    // `window` holds the sorted pooled training cells of the previous
    // full-width position, if any.
    let mut sliding_from: Option<usize> = None;
    for i in 0..n {
        let Some(t) = cfg.train_at(i, n) else { continue };
        if t != full {
            let mut cells: Vec<f64> = line[i - g - t..i - g]
                .iter()
                .chain(&line[i + g + 1..i + g + t + 1])
                .copied()
                .collect();
            let rank = cfg.rank_for(t);
            let (_, kth, _) = cells.select_nth_unstable_by(rank - 1, f64::total_cmp);
            emit(i, *kth);
            continue;
        }
        match sliding_from {
            Some(prev) if prev + 1 == i => {
                sorted_remove(window, line[prev - g - full]);
                sorted_insert(window, line[i - g - 1]);
                sorted_remove(window, line[i + g]);
                sorted_insert(window, line[i + g + full]);
            }
            _ => {
                window.clear();
                window.extend_from_slice(&line[i - g - full..i - g]);
                window.extend_from_slice(&line[i + g + 1..i + g + full + 1]);
                window.sort_by(f64::total_cmp);
            }
        }
        sliding_from = Some(i);
        emit(i, window[k - 1]);
    }
}

fn sorted_insert(window: &mut Vec<f64>, value: f64) {
    let pos = window.partition_point(|v| v.total_cmp(&value).is_lt());
    window.insert(pos, value);
}

fn sorted_remove(window: &mut Vec<f64>, value: f64) {
    let pos = window.partition_point(|v| v.total_cmp(&value).is_lt());
    debug_assert!(pos < window.len() && window[pos].total_cmp(&value).is_eq());
    window.remove(pos);
}

/// Reference detector: recomputes the training statistic of every cell
/// directly, with no reuse between neighbouring cells.
pub fn cfar_oracle(tensor: &RadarTensor4D, cfg: &CfarConfig) -> Result<DetectionList, CfarError> {
    validate_for(tensor, cfg)?;
    let spec = *tensor.spec();
    let data = tensor.data();
    let mut mask = vec![false; data.len()];
    for d in 0..spec.doppler_bins {
        for r in 0..spec.range_bins {
            for e in 0..spec.elevation_bins {
                for a in 0..spec.azimuth_bins {
                    let (pos, n) = match cfg.axis {
                        CfarAxis::Range => (r, spec.range_bins),
                        CfarAxis::Doppler => (d, spec.doppler_bins),
                    };
                    let at = |j: usize| match cfg.axis {
                        CfarAxis::Range => tensor.get(d, j, e, a),
                        CfarAxis::Doppler => tensor.get(j, r, e, a),
                    };
                    let Some(t) = cfg.train_at(pos, n) else { continue };
                    let g = cfg.guard_cells;
                    let mut training = Vec::with_capacity(2 * t);
                    for j in (pos - g - t)..(pos - g) {
                        training.push(at(j));
                    }
                    for j in (pos + g + 1)..=(pos + g + t) {
                        training.push(at(j));
                    }
                    let noise = match cfg.variant {
                        CfarVariant::CellAveraging => {
                            let mut sum = 0.0;
                            for v in &training {
                                sum += v;
                            }
                            sum / training.len() as f64
                        }
                        CfarVariant::OrderedStatistic => {
                            training.sort_by(f64::total_cmp);
                            training[cfg.rank_for(t) - 1]
                        }
                    };
                    let offset = tensor.offset(d, r, e, a);
                    mask[offset] = data[offset] > cfg.threshold_scale * noise;
                }
            }
        }
    }
    Ok(DetectionList::from_mask(tensor, &mask))
}

/// One Cartesian point per detection at its bin center, intensity = `Z`.
pub fn detections_to_point_cloud(dets: &DetectionList, frame_id: u64) -> PointCloud {
    PointCloud::new(
        dets.detections
            .iter()
            .map(|d| Point {
                position: spherical_to_cartesian(&d.position),
                intensity: d.intensity,
            })
            .collect(),
        frame_id,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn range_line_spec(n: usize) -> GridSpec {
        GridSpec {
            doppler_bins: 1,
            range_bins: n,
            elevation_bins: 1,
            azimuth_bins: 1,
            ..GridSpec::k_radar()
        }
    }

    fn line_tensor(values: &[f64]) -> RadarTensor4D {
        RadarTensor4D::new(range_line_spec(values.len()), values.to_vec()).unwrap()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, dims: [usize; 4]) -> RadarTensor4D {
        let spec = GridSpec {
            doppler_bins: dims[0],
            range_bins: dims[1],
            elevation_bins: dims[2],
            azimuth_bins: dims[3],
            ..GridSpec::k_radar()
        };
        let data = (0..spec.cell_count()).map(|_| rng.random_range(0.0..10.0)).collect();
        RadarTensor4D::new(spec, data).unwrap()
    }

    #[test]
    fn ca_uniform_floor_example() {
        let t = line_tensor(&[2.0, 2.0, 2.0, 2.0, 10.0, 2.0, 2.0, 2.0, 2.0]);
        let cfg = CfarConfig::ca(1, 2, 3.0);
        let fast = ca_cfar(&t, &cfg).unwrap();
        assert_eq!(fast.indices(), vec![[0, 4, 0, 0]]);
        assert_eq!(cfar_oracle(&t, &cfg).unwrap(), fast);
        assert_eq!(fast.detections[0].intensity, 10.0);
    }

    #[test]
    fn all_zero_tensor_detects_nothing() {
        let spec = GridSpec {
            doppler_bins: 4,
            range_bins: 16,
            elevation_bins: 2,
            azimuth_bins: 2,
            ..GridSpec::k_radar()
        };
        let t = RadarTensor4D::zeros(spec).unwrap();
        for delta in [1e-9, 1.0, 100.0] {
            assert!(cfar(&t, &CfarConfig::ca(1, 2, delta)).unwrap().is_empty());
            assert!(cfar(&t, &CfarConfig::os(1, 2, 2, delta)).unwrap().is_empty());
        }
    }

    // training values 1..8 split around the cell, guard 1
    fn os_example(cell: f64) -> RadarTensor4D {
        line_tensor(&[1.0, 2.0, 3.0, 4.0, 0.0, cell, 0.0, 5.0, 6.0, 7.0, 8.0])
    }

    #[test]
    fn os_rank_example() {
        let cfg = CfarConfig::os(1, 4, 3, 2.0);
        let hit = os_cfar(&os_example(7.0), &cfg).unwrap();
        assert_eq!(hit.indices(), vec![[0, 5, 0, 0]]);
        // 6 > 2·3 is false
        let miss = os_cfar(&os_example(6.0), &cfg).unwrap();
        assert!(miss.is_empty());
        assert_eq!(cfar_oracle(&os_example(7.0), &cfg).unwrap(), hit);
        assert!(cfar_oracle(&os_example(6.0), &cfg).unwrap().is_empty());
    }

    #[test]
    fn window_too_large() {
        let t = line_tensor(&[1.0; 9]);
        assert!(matches!(
            cfar(&t, &CfarConfig::ca(2, 3, 1.0)),
            Err(CfarError::WindowTooLarge {
                window: 10,
                axis_len: 9,
                ..
            })
        ));
        assert!(matches!(
            cfar_oracle(&t, &CfarConfig::ca(2, 3, 1.0).with_edge_policy(EdgePolicy::Clamp)),
            Err(CfarError::WindowTooLarge { .. })
        ));
        // doppler axis of length 1
        assert!(cfar(&t, &CfarConfig::ca(0, 1, 1.0).with_axis(CfarAxis::Doppler)).is_err());
    }

    #[test]
    fn config_validation() {
        let t = line_tensor(&[1.0; 20]);
        assert!(matches!(
            cfar(&t, &CfarConfig::ca(1, 0, 1.0)),
            Err(CfarError::InvalidConfig(_))
        ));
        assert!(cfar(&t, &CfarConfig::ca(1, 2, 0.0)).is_err());
        assert!(cfar(&t, &CfarConfig::ca(1, 2, f64::NAN)).is_err());
        assert!(cfar(&t, &CfarConfig::os(1, 2, 0, 1.0)).is_err());
        assert!(cfar(&t, &CfarConfig::os(1, 2, 5, 1.0)).is_err());
        assert!(matches!(
            ca_cfar(&t, &CfarConfig::os(1, 2, 2, 1.0)),
            Err(CfarError::VariantMismatch { .. })
        ));
        assert!(os_cfar(&t, &CfarConfig::ca(1, 2, 1.0)).is_err());
    }

    #[test]
    fn skip_policy_never_detects_edges() {
        let mut v = vec![1.0; 12];
        v[0] = 100.0;
        v[11] = 100.0;
        v[6] = 100.0;
        let t = line_tensor(&v);
        let skip = cfar(&t, &CfarConfig::ca(1, 2, 3.0)).unwrap();
        assert_eq!(skip.indices(), vec![[0, 6, 0, 0]]);
        // clamp still needs one training cell beyond the guard on both sides
        let clamp = cfar(&t, &CfarConfig::ca(1, 2, 3.0).with_edge_policy(EdgePolicy::Clamp)).unwrap();
        assert_eq!(clamp.indices(), vec![[0, 6, 0, 0]]);
        v[0] = 1.0;
        v[2] = 100.0;
        let t = line_tensor(&v);
        let clamp = cfar(&t, &CfarConfig::ca(1, 2, 3.0).with_edge_policy(EdgePolicy::Clamp)).unwrap();
        assert!(clamp.indices().contains(&[0, 2, 0, 0]));
        let skip = cfar(&t, &CfarConfig::ca(1, 2, 3.0)).unwrap();
        assert!(!skip.indices().contains(&[0, 2, 0, 0]));
    }

    #[test]
    fn fast_matches_oracle_on_random_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..40 {
            let t = random_tensor(&mut rng, [8, 16, 4, 4]);
            for variant in [CfarVariant::CellAveraging, CfarVariant::OrderedStatistic] {
                for axis in [CfarAxis::Range, CfarAxis::Doppler] {
                    for edge in [EdgePolicy::Skip, EdgePolicy::Clamp] {
                        let cfg = CfarConfig {
                            variant,
                            axis,
                            guard_cells: trial % 2,
                            train_cells: 1 + trial % 3,
                            threshold_scale: 0.5 + (trial % 5) as f64 * 0.4,
                            order_k: 1 + trial % 2,
                            edge_policy: edge,
                        };
                        assert_eq!(cfar(&t, &cfg), cfar_oracle(&t, &cfg), "{cfg:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn score_field_agrees_with_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = random_tensor(&mut rng, [4, 20, 3, 3]);
        for cfg in [CfarConfig::ca(1, 3, 1.7), CfarConfig::os(1, 3, 4, 1.3)] {
            let mask = cfar_mask(&t, &cfg).unwrap();
            let scores = cfar_score_field(&t, &cfg).unwrap();
            for (m, s) in mask.iter().zip(&scores) {
                assert_eq!(*m, *s > cfg.threshold_scale);
            }
        }
    }

    #[test]
    fn detection_to_point_on_boresight() {
        let spec = GridSpec::k_radar();
        let mut t = RadarTensor4D::zeros(GridSpec {
            doppler_bins: 1,
            ..spec
        })
        .unwrap();
        t.set(0, 0, 53, 18, 4.0).unwrap();
        let dets = DetectionList::from_mask(&t, &t.data().iter().map(|v| *v > 0.0).collect::<Vec<_>>());
        let cloud = detections_to_point_cloud(&dets, 3);
        assert_eq!(cloud.len(), 1);
        let p = cloud.points[0].position;
        assert!((p - nalgebra::Vector3::new(0.23, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(cloud.points[0].intensity, 4.0);
        assert!(detections_to_point_cloud(&DetectionList::default(), 0).is_empty());
    }

    #[test]
    fn detection_bins_round_trip() {
        let spec = GridSpec::k_radar();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2000 {
            let (r, e, a) = (
                rng.random_range(0..spec.range_bins),
                rng.random_range(0..spec.elevation_bins),
                rng.random_range(0..spec.azimuth_bins),
            );
            let p = spec.bin_center_cartesian(r, e, a);
            assert_eq!(spec.spatial_bin(&p), Some([r, e, a]));
        }
    }
}
