use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::RegistrationError;
use crate::cloud::PointCloud;
use crate::geometry::RigidTransform;
use crate::spatial::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop once an update moves less than this (m)...
    pub translation_eps: f64,
    /// ...and rotates less than this (deg).
    pub rotation_eps_deg: f64,
    pub max_correspondence_dist: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            translation_eps: 1e-4,
            rotation_eps_deg: 0.01,
            max_correspondence_dist: 1.0,
        }
    }
}

impl IcpConfig {
    fn validate(&self) -> Result<(), RegistrationError> {
        let ok = self.max_iterations >= 1
            && [
                self.translation_eps,
                self.rotation_eps_deg,
                self.max_correspondence_dist,
            ]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(RegistrationError::InvalidConfig(format!(
                "ICP parameters must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source coordinates into target coordinates.
    pub transform: RigidTransform,
    /// Over the final correspondences within the cutoff.
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Correspondence MSE at the start of each iteration, then the final one.
    pub mse_history: Vec<f64>,
}

struct Matches {
    source: Vec<Vector3<f64>>,
    target: Vec<Vector3<f64>>,
    mse: f64,
}

fn correspond(
    source: &PointCloud,
    target: &PointCloud,
    tree: &KdTree,
    transform: &RigidTransform,
    max_dist: f64,
) -> Matches {
    let max_d2 = max_dist * max_dist;
    let mut m = Matches {
        source: Vec::new(),
        target: Vec::new(),
        mse: 0.0,
    };
    let mut sum = 0.0;
    for p in &source.points {
        let moved = transform.apply(&p.position);
        if let Some((idx, d2)) = tree.nearest(&moved) {
            if d2 <= max_d2 {
                m.source.push(moved);
                m.target.push(target.points[idx].position);
                sum += d2;
            }
        }
    }
    if !m.source.is_empty() {
        m.mse = sum / m.source.len() as f64;
    }
    m
}

/// Closed-form rigid alignment (Kabsch, no scale) taking `from` onto `to`.
pub fn kabsch(from: &[Vector3<f64>], to: &[Vector3<f64>]) -> RigidTransform {
    assert_eq!(from.len(), to.len());
    let n = from.len() as f64;
    if from.is_empty() {
        return RigidTransform::identity();
    }
    let cf = from.iter().sum::<Vector3<f64>>() / n;
    let ct = to.iter().sum::<Vector3<f64>>() / n;
    if from.len() < 3 {
        return RigidTransform::from_translation(ct - cf);
    }
    let mut h = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        h += (a - cf) * (b - ct).transpose();
    }
    let svd = h.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return RigidTransform::from_translation(ct - cf);
    };
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    RigidTransform::from_rotation_unchecked(rotation, ct - rotation * cf)
}

/// Point-to-point ICP against an exact k-d tree on `target`.
pub fn icp_register(
    source: &PointCloud,
    target: &PointCloud,
    cfg: &IcpConfig,
    init: &RigidTransform,
) -> Result<IcpResult, RegistrationError> {
    cfg.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(RegistrationError::EmptyCloud);
    }
    let tree = KdTree::new(target.positions());
    let mut transform = *init;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        let m = correspond(source, target, &tree, &transform, cfg.max_correspondence_dist);
        if m.source.is_empty() {
            return Err(RegistrationError::RegistrationFailed { init: *init });
        }
        history.push(m.mse);
        iterations += 1;
        let step = kabsch(&m.source, &m.target);
        transform = step.compose(&transform);
        if step.translation().norm() < cfg.translation_eps && step.rotation_angle_deg() < cfg.rotation_eps_deg {
            converged = true;
            break;
        }
    }
    let last = correspond(source, target, &tree, &transform, cfg.max_correspondence_dist);
    if last.source.is_empty() {
        return Err(RegistrationError::RegistrationFailed { init: *init });
    }
    history.push(last.mse);
    log::debug!("icp: {iterations} iterations, converged={converged}, mse={}", last.mse);
    Ok(IcpResult {
        transform,
        rmse: last.mse.sqrt(),
        iterations,
        converged,
        mse_history: history,
    })
}
