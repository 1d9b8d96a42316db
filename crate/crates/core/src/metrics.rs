//! Radar point cloud density (RPCD) and accuracy (RPCA), plus the point
//! budget threshold sweep used to compare detectors at matched counts.
//!
//! Both metrics use a closed ball: a neighbour at exactly the radius counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{Point, PointCloud};
use crate::grid::{GridSpec, OccupancyGrid3D, RadarTensor4D};
use crate::spatial::KdTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("{0} is undefined for an empty {1} cloud")]
    UndefinedMetric(&'static str, &'static str),
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid score field: {0}")]
    InvalidScores(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// δ_d, meters.
    pub density_radius: f64,
    /// δ_a, meters.
    pub accuracy_radius: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            density_radius: 0.3,
            accuracy_radius: 0.5,
        }
    }
}

impl MetricConfig {
    fn validate(&self) -> Result<(), MetricError> {
        for (name, r) in [
            ("density_radius", self.density_radius),
            ("accuracy_radius", self.accuracy_radius),
        ] {
            if !(r.is_finite() && r > 0.0) {
                return Err(MetricError::InvalidConfig(format!("{name} must be > 0, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rpcd: f64,
    pub rpca: f64,
    pub radar_point_count: usize,
    pub gt_point_count: usize,
}

impl MetricReport {
    /// `key=value` pairs on one line.
    pub fn to_line(&self) -> String {
        format!(
            "rpcd={} rpca={} radar_points={} gt_points={}",
            self.rpcd, self.rpca, self.radar_point_count, self.gt_point_count
        )
    }
}

/// Indices of `queries` with at least one `reference` point within `radius`.
pub fn matched_indices(queries: &PointCloud, reference: &PointCloud, radius: f64) -> Vec<usize> {
    let tree = KdTree::new(reference.positions());
    queries
        .positions()
        .enumerate()
        .filter(|(_, q)| tree.any_within(q, radius))
        .map(|(i, _)| i)
        .collect()
}

/// Fraction of ground-truth points with a radar point within δ_d.
pub fn rpcd(gt: &PointCloud, radar: &PointCloud, cfg: &MetricConfig) -> Result<f64, MetricError> {
    cfg.validate()?;
    if gt.is_empty() {
        return Err(MetricError::UndefinedMetric("RPCD", "ground-truth"));
    }
    if radar.is_empty() {
        return Ok(0.0);
    }
    Ok(matched_indices(gt, radar, cfg.density_radius).len() as f64 / gt.len() as f64)
}

/// Fraction of radar points with a ground-truth point within δ_a.
pub fn rpca(gt: &PointCloud, radar: &PointCloud, cfg: &MetricConfig) -> Result<f64, MetricError> {
    cfg.validate()?;
    if radar.is_empty() {
        return Err(MetricError::UndefinedMetric("RPCA", "radar"));
    }
    if gt.is_empty() {
        return Ok(0.0);
    }
    Ok(matched_indices(radar, gt, cfg.accuracy_radius).len() as f64 / radar.len() as f64)
}

pub fn evaluate(gt: &PointCloud, radar: &PointCloud, cfg: &MetricConfig) -> Result<MetricReport, MetricError> {
    Ok(MetricReport {
        rpcd: rpcd(gt, radar, cfg)?,
        rpca: rpca(gt, radar, cfg)?,
        radar_point_count: radar.len(),
        gt_point_count: gt.len(),
    })
}

/// One point per occupied voxel, at the voxel center (doubled resolution).
pub fn grid_to_point_cloud(grid: &OccupancyGrid3D) -> PointCloud {
    let spec = grid.spec();
    PointCloud::new(
        grid.occupied_indices()
            .map(|[r, e, a]| Point {
                position: spec.doubled_bin_center_cartesian(r, e, a),
                intensity: 1.0,
            })
            .collect(),
        0,
    )
}

/// Cells of a native-resolution score tensor strictly above `threshold`, at
/// their bin centers, carrying their score.
pub fn cells_above(scores: &RadarTensor4D, threshold: f64) -> PointCloud {
    let spec = scores.spec();
    let points = scores
        .data()
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(o, s)| {
            let [_, r, e, a] = scores.index_of(o);
            Point {
                position: spec.bin_center_cartesian(r, e, a),
                intensity: *s,
            }
        })
        .collect();
    PointCloud::new(points, 0)
}

/// Voxels of a doubled-resolution score field strictly above `threshold`,
/// as points at voxel centers carrying their score.
pub fn scores_to_point_cloud(scores: &[f64], spec: &GridSpec, threshold: f64) -> Result<PointCloud, MetricError> {
    let [nr, ne, na] = spec.doubled_dims();
    if scores.len() != nr * ne * na {
        return Err(MetricError::InvalidScores(format!(
            "expected {} voxels for a {nr}x{ne}x{na} grid, got {}",
            nr * ne * na,
            scores.len()
        )));
    }
    let points = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(o, s)| {
            let (r, e, a) = (o / (ne * na), (o / na) % ne, o % na);
            Point {
                position: spec.doubled_bin_center_cartesian(r, e, a),
                intensity: *s,
            }
        })
        .collect();
    Ok(PointCloud::new(points, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub target: usize,
    /// Keep voxels with score strictly above this value.
    pub threshold: f64,
    pub count: usize,
    /// The budget could not be approached because of ties or because it
    /// exceeds the number of voxels.
    pub saturated: bool,
}

/// For each point budget `N`, the threshold whose above-threshold count is
/// closest to `N` (ties go to the smaller count). Among thresholds giving
/// that count the smallest one, a score value, is returned; a count equal to
/// the whole field uses a threshold one unit below the minimum score.
pub fn threshold_sweep(scores: &[f64], targets: &[usize]) -> Result<Vec<SweepEntry>, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::InvalidScores("empty score field".into()));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(MetricError::InvalidScores(format!("non-finite score {bad}")));
    }
    if targets.contains(&0) {
        return Err(MetricError::InvalidScores("point budgets must be >= 1".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len();
    // thresholds[j] = j-th unique score ascending, counts[j] = #scores > it
    let mut thresholds = Vec::new();
    let mut counts = Vec::new();
    let mut i = 0;
    while i < total {
        let v = sorted[i];
        let mut j = i;
        while j < total && sorted[j] == v {
            j += 1;
        }
        thresholds.push(v);
        counts.push(total - j);
        i = j;
    }
    let below_min = sorted[0] - 1.0;

    Ok(targets
        .iter()
        .map(|&target| {
            // counts is strictly decreasing; first j with counts[j] <= target
            let j = counts.partition_point(|&c| c > target);
            let at_or_below = (thresholds[j], counts[j]);
            let above = if j == 0 {
                (below_min, total)
            } else {
                (thresholds[j - 1], counts[j - 1])
            };
            let (threshold, count) = if above.1.abs_diff(target) < target.abs_diff(at_or_below.1) {
                above
            } else {
                at_or_below
            };
            SweepEntry {
                target,
                threshold,
                count,
                saturated: count != target && (count == 0 || count == total),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> PointCloud {
        PointCloud::from_positions(
            (0..n).map(|_| {
                Vector3::new(
                    rng.random_range(-scale..scale),
                    rng.random_range(-scale..scale),
                    rng.random_range(-scale / 4.0..scale / 4.0),
                )
            }),
            0,
        )
    }

    fn brute(queries: &PointCloud, reference: &PointCloud, radius: f64) -> Vec<usize> {
        queries
            .points
            .iter()
            .enumerate()
            .filter(|(_, q)| {
                reference.points.iter().any(|r| {
                    let d = q.position - r.position;
                    d.x * d.x + d.y * d.y + d.z * d.z <= radius * radius
                })
            })
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn identical_clouds_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = cloud(&mut rng, 100, 10.0);
        let r = evaluate(&c, &c, &MetricConfig::default()).unwrap();
        assert_eq!((r.rpcd, r.rpca), (1.0, 1.0));
        assert_eq!(r.to_line(), "rpcd=1 rpca=1 radar_points=100 gt_points=100");
    }

    #[test]
    fn empty_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = cloud(&mut rng, 10, 5.0);
        let empty = PointCloud::default();
        let cfg = MetricConfig::default();
        assert_eq!(rpcd(&c, &empty, &cfg), Ok(0.0));
        assert_eq!(rpca(&empty, &c, &cfg), Ok(0.0));
        assert!(matches!(rpcd(&empty, &c, &cfg), Err(MetricError::UndefinedMetric(..))));
        assert!(matches!(rpca(&c, &empty, &cfg), Err(MetricError::UndefinedMetric(..))));
        let bad = MetricConfig {
            density_radius: 0.0,
            ..cfg
        };
        assert!(rpcd(&c, &c, &bad).is_err());
    }

    #[test]
    fn displaced_radar_scores_zero() {
        let gt = PointCloud::from_positions([Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)], 0);
        let radar = PointCloud::from_positions([Vector3::new(0.0, 5.0, 0.0)], 0);
        assert_eq!(rpca(&gt, &radar, &MetricConfig::default()), Ok(0.0));
        // exactly on the radius counts
        let edge = PointCloud::from_positions([Vector3::new(0.0, 0.5, 0.0)], 0);
        assert_eq!(rpca(&gt, &edge, &MetricConfig::default()), Ok(1.0));
        let subset = PointCloud::from_positions([Vector3::new(1.0, 0.0, 0.0)], 0);
        assert_eq!(rpca(&gt, &subset, &MetricConfig::default()), Ok(1.0));
        assert_eq!(rpcd(&gt, &subset, &MetricConfig::default()), Ok(0.5));
    }

    #[test]
    fn matches_quadratic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = MetricConfig::default();
        for _ in 0..10 {
            let gt = cloud(&mut rng, 300, 4.0);
            let radar = cloud(&mut rng, 100, 4.0);
            let d = brute(&gt, &radar, cfg.density_radius);
            let a = brute(&radar, &gt, cfg.accuracy_radius);
            assert_eq!(matched_indices(&gt, &radar, cfg.density_radius), d);
            assert_eq!(rpcd(&gt, &radar, &cfg).unwrap(), d.len() as f64 / 300.0);
            assert_eq!(rpca(&gt, &radar, &cfg).unwrap(), a.len() as f64 / 100.0);
        }
    }

    #[test]
    fn sweep_distinct_scores() {
        let scores: Vec<f64> = (1..=100).map(f64::from).collect();
        let res = threshold_sweep(&scores, &[50, 1, 100, 150]).unwrap();
        assert_eq!(res[0].count, 50);
        assert_eq!(res[0].threshold, 50.0);
        assert!(!res[0].saturated);
        assert_eq!(res[1].count, 1);
        assert_eq!(res[2].count, 100);
        assert!(res[2].threshold < 1.0 && !res[2].saturated);
        assert_eq!(res[3].count, 100);
        assert!(res[3].saturated);
    }

    #[test]
    fn sweep_all_ties() {
        let res = threshold_sweep(&[3.0; 100], &[10, 90]).unwrap();
        assert_eq!((res[0].count, res[0].saturated), (0, true));
        assert_eq!((res[1].count, res[1].saturated), (100, true));
        assert!(threshold_sweep(&[], &[1]).is_err());
        assert!(threshold_sweep(&[1.0], &[0]).is_err());
        assert!(threshold_sweep(&[f64::NAN], &[1]).is_err());
    }

    #[test]
    fn sweep_is_optimal_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let scores: Vec<f64> = (0..3000).map(|_| (rng.random_range(0.0..50.0f64)).round()).collect();
        let targets: Vec<usize> = (1..60).map(|i| i * 50).collect();
        let res = threshold_sweep(&scores, &targets).unwrap();
        let mut uniques = scores.clone();
        uniques.sort_by(f64::total_cmp);
        uniques.dedup();
        for e in &res {
            let achieved = scores.iter().filter(|s| **s > e.threshold).count();
            assert_eq!(achieved, e.count);
            let best = uniques
                .iter()
                .map(|u| scores.iter().filter(|s| *s > u).count())
                .chain([scores.len()])
                .map(|c| c.abs_diff(e.target))
                .min()
                .unwrap();
            assert_eq!(e.count.abs_diff(e.target), best);
        }
        for w in res.windows(2) {
            assert!(w[1].threshold <= w[0].threshold);
        }
    }

    #[test]
    fn grid_points() {
        let spec = GridSpec {
            doppler_bins: 1,
            range_bins: 4,
            elevation_bins: 3,
            azimuth_bins: 3,
            ..GridSpec::k_radar()
        };
        let mut grid = OccupancyGrid3D::empty(spec).unwrap();
        assert!(grid_to_point_cloud(&grid).is_empty());
        // doubled voxel (1, 3, 3): range 0.345 m, elevation/azimuth +0.25°
        grid.set(1, 3, 3, true);
        let c = grid_to_point_cloud(&grid);
        assert_eq!(c.len(), 1);
        let expected = crate::geometry::spherical_to_cartesian(&crate::geometry::SphericalCoord {
            range: 0.345,
            elevation: 0.25,
            azimuth: 0.25,
        });
        let p = c.points[0].position;
        assert!((p - expected).norm() < 1e-12, "{p:?}");
        grid.set(0, 0, 0, true);
        assert_eq!(grid_to_point_cloud(&grid).len(), grid.occupied_count());

        let mut scores = vec![0.0; 8 * 6 * 6];
        scores[grid.offset(1, 3, 3)] = 2.0;
        let pts = scores_to_point_cloud(&scores, &spec, 1.0).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(scores_to_point_cloud(&scores[1..], &spec, 1.0).is_err());
    }

    #[test]
    fn cells_above_threshold() {
        let spec = GridSpec {
            doppler_bins: 2,
            range_bins: 3,
            elevation_bins: 1,
            azimuth_bins: 1,
            ..GridSpec::k_radar()
        };
        let mut t = RadarTensor4D::zeros(spec).unwrap();
        t.set(1, 2, 0, 0, 5.0).unwrap();
        let c = cells_above(&t, 1.0);
        assert_eq!(c.len(), 1);
        assert_eq!(c.points[0].position, spec.bin_center_cartesian(2, 0, 0));
    }
}
