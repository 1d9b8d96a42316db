use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RegistrationError;
use crate::cloud::PointCloud;

/// Plane `normal · p + offset = 0` with a unit normal whose z is `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneModel {
    normal: Vector3<f64>,
    offset: f64,
}

impl PlaneModel {
    /// Normalizes `normal` and flips it to the upper hemisphere.
    pub fn new(normal: Vector3<f64>, offset: f64) -> Option<Self> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0 && offset.is_finite()) {
            return None;
        }
        let (mut normal, mut offset) = (normal / n, offset / n);
        if normal.z < 0.0 || (normal.z == 0.0 && (normal.y < 0.0 || (normal.y == 0.0 && normal.x < 0.0))) {
            normal = -normal;
            offset = -offset;
        }
        Some(Self { normal, offset })
    }

    pub fn through_points(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<Self> {
        let normal = (b - a).cross(&(c - a));
        if normal.norm() <= 1e-12 * (b - a).norm().max((c - a).norm()).powi(2) {
            return None;
        }
        Self::new(normal, -normal.dot(a))
    }

    pub fn normal(&self) -> &Vector3<f64> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub inlier_threshold: f64,
    pub max_iterations: usize,
    pub min_inlier_fraction: f64,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            inlier_threshold: 0.15,
            max_iterations: 200,
            min_inlier_fraction: 0.1,
            rng_seed: 0,
        }
    }
}

impl RansacConfig {
    fn validate(&self) -> Result<(), RegistrationError> {
        if !(self.inlier_threshold.is_finite() && self.inlier_threshold > 0.0) {
            return Err(RegistrationError::InvalidConfig("inlier_threshold must be > 0".into()));
        }
        if self.max_iterations < 1 {
            return Err(RegistrationError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(RegistrationError::InvalidConfig(
                "min_inlier_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundFit {
    Plane {
        plane: PlaneModel,
        /// Ascending point indices.
        inliers: Vec<usize>,
    },
    /// Best hypothesis fell below `min_inlier_fraction`; keep every point.
    NoGround { best_inlier_count: usize },
}

impl GroundFit {
    pub fn plane(&self) -> Option<&PlaneModel> {
        match self {
            GroundFit::Plane { plane, .. } => Some(plane),
            GroundFit::NoGround { .. } => None,
        }
    }
}

fn inliers_of(cloud: &PointCloud, plane: &PlaneModel, threshold: f64) -> Vec<usize> {
    cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| plane.signed_distance(&p.position).abs() <= threshold)
        .map(|(i, _)| i)
        .collect()
}

fn all_collinear(cloud: &PointCloud) -> bool {
    let pts = &cloud.points;
    let a = pts[0].position;
    let Some(b) = pts
        .iter()
        .map(|p| p.position)
        .max_by(|p, q| (p - a).norm_squared().total_cmp(&(q - a).norm_squared()))
    else {
        return true;
    };
    let dir = b - a;
    let scale = dir.norm();
    if scale == 0.0 {
        return true;
    }
    let dir = dir / scale;
    pts.iter()
        .all(|p| (p.position - a).cross(&dir).norm() <= 1e-9 * scale.max(1.0))
}

/// Least-squares plane through the given points (smallest principal axis).
fn refine(cloud: &PointCloud, inliers: &[usize]) -> Option<PlaneModel> {
    if inliers.len() < 3 {
        return None;
    }
    let n = inliers.len() as f64;
    let centroid = inliers
        .iter()
        .fold(Vector3::zeros(), |acc, &i| acc + cloud.points[i].position)
        / n;
    let mut cov = Matrix3::zeros();
    for &i in inliers {
        let d = cloud.points[i].position - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let (min_idx, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    let normal = eig.eigenvectors.column(min_idx).into_owned();
    PlaneModel::new(normal, -normal.dot(&centroid) / normal.norm())
}

/// RANSAC ground plane. Hypotheses come from seeded triples; the winner is
/// the one with the most inliers (first wins on ties), then a least-squares
/// refit on its inliers is kept only if it does not lose inliers.
pub fn fit_ground_plane(cloud: &PointCloud, cfg: &RansacConfig) -> Result<GroundFit, RegistrationError> {
    cfg.validate()?;
    let n = cloud.len();
    if n < 3 {
        return Err(RegistrationError::DegenerateInput(format!(
            "plane fit needs at least 3 points, got {n}"
        )));
    }
    if all_collinear(cloud) {
        return Err(RegistrationError::DegenerateInput("all points are collinear".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<(PlaneModel, usize)> = None;
    for _ in 0..cfg.max_iterations {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let k = rng.random_range(0..n);
        if i == j || j == k || i == k {
            continue;
        }
        let Some(plane) = PlaneModel::through_points(
            &cloud.points[i].position,
            &cloud.points[j].position,
            &cloud.points[k].position,
        ) else {
            continue;
        };
        let count = cloud
            .points
            .iter()
            .filter(|p| plane.signed_distance(&p.position).abs() <= cfg.inlier_threshold)
            .count();
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((plane, count));
        }
    }
    let Some((plane, count)) = best else {
        return Ok(GroundFit::NoGround { best_inlier_count: 0 });
    };
    if (count as f64) < cfg.min_inlier_fraction * n as f64 {
        return Ok(GroundFit::NoGround {
            best_inlier_count: count,
        });
    }
    let inliers = inliers_of(cloud, &plane, cfg.inlier_threshold);
    if let Some(refined) = refine(cloud, &inliers) {
        let refined_inliers = inliers_of(cloud, &refined, cfg.inlier_threshold);
        if refined_inliers.len() >= inliers.len() {
            return Ok(GroundFit::Plane {
                plane: refined,
                inliers: refined_inliers,
            });
        }
    }
    Ok(GroundFit::Plane { plane, inliers })
}

/// Keeps points farther than `threshold` from the plane, in input order.
pub fn remove_ground(cloud: &PointCloud, plane: &PlaneModel, threshold: f64) -> PointCloud {
    PointCloud::new(
        cloud
            .points
            .iter()
            .filter(|p| plane.signed_distance(&p.position).abs() > threshold)
            .copied()
            .collect(),
        cloud.frame_id,
    )
}
