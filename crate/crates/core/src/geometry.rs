//! Rigid transforms and spherical coordinates.
//!
//! Frame convention: x forward, y left, z up (right-handed). Azimuth is
//! measured from +x toward +y, elevation from the xy-plane toward +z. Angles
//! cross the public API in degrees.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use thiserror::Error;

/// Tolerance used when validating rotation matrices built in memory.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation is not orthonormal (max |RᵀR - I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("rotation is a reflection (det = {det})")]
    Reflection { det: f64 },
    #[error("non-finite value in transform")]
    NonFinite,
}

/// An SE(3) pose: `p' = R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, rejecting rotations that are not proper
    /// orthonormal within `tolerance`.
    pub fn try_new(rotation: Matrix3<f64>, translation: Vector3<f64>, tolerance: f64) -> Result<Self, GeometryError> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let deviation = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if deviation >= tolerance {
            return Err(GeometryError::NotOrthonormal { deviation });
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() >= tolerance {
            return Err(GeometryError::Reflection { det });
        }
        Ok(Self { rotation, translation })
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        Self::try_new(rotation, translation, ROTATION_TOLERANCE)
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation from a unit-axis angle (degrees) followed by a translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle_deg: f64, translation: Vector3<f64>) -> Self {
        let rotation = if axis.norm() == 0.0 || angle_deg == 0.0 {
            Matrix3::identity()
        } else {
            Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle_deg.to_radians()).into_inner()
        };
        Self { rotation, translation }
    }

    /// Rotation about +z by `yaw_deg`, then translation.
    pub fn from_yaw(yaw_deg: f64, translation: Vector3<f64>) -> Self {
        Self::from_axis_angle(Vector3::z(), yaw_deg, translation)
    }

    /// Intrinsic roll/pitch/yaw (degrees), then translation.
    pub fn from_euler_deg(roll: f64, pitch: f64, yaw: f64, translation: Vector3<f64>) -> Self {
        let rotation =
            Rotation3::from_euler_angles(roll.to_radians(), pitch.to_radians(), yaw.to_radians()).into_inner();
        Self { rotation, translation }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle in degrees, in `[0, 180]`.
    pub fn rotation_angle_deg(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos().to_degrees()
    }

    /// Rotation angle (deg) and translation distance between two poses.
    pub fn distance_to(&self, other: &RigidTransform) -> (f64, f64) {
        let delta = self.inverse().compose(other);
        (
            delta.rotation_angle_deg(),
            (self.translation - other.translation).norm(),
        )
    }

    /// Largest per-element difference of the 3×4 matrices.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        (self.rotation - other.rotation)
            .amax()
            .max((self.translation - other.translation).amax())
    }

    /// Row-major `[r00, r01, ..., r22, tx, ty, tz]`.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ]
    }

    pub fn from_row_major(values: &[f64; 12], tolerance: f64) -> Result<Self, GeometryError> {
        let rotation = Matrix3::from_row_slice(&values[..9]);
        let translation = Vector3::new(values[9], values[10], values[11]);
        Self::try_new(rotation, translation, tolerance)
    }

    /// Skips validation; callers guarantee `rotation` came from an SO(3) solve.
    pub(crate) fn from_rotation_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }
}

/// Spherical position: range in meters, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    pub range: f64,
    pub elevation: f64,
    pub azimuth: f64,
}

/// Range = ‖p‖, azimuth = atan2(y, x), elevation = asin(z / range).
/// The origin maps to range 0 with both angles 0.
pub fn cartesian_to_spherical(p: &Vector3<f64>) -> SphericalCoord {
    let range = p.norm();
    if range == 0.0 {
        return SphericalCoord {
            range: 0.0,
            elevation: 0.0,
            azimuth: 0.0,
        };
    }
    let elevation = (p.z / range).clamp(-1.0, 1.0).asin().to_degrees();
    let mut azimuth = p.y.atan2(p.x).to_degrees();
    if azimuth <= -180.0 {
        azimuth += 360.0;
    }
    SphericalCoord {
        range,
        elevation,
        azimuth,
    }
}

pub fn spherical_to_cartesian(s: &SphericalCoord) -> Vector3<f64> {
    let el = s.elevation.to_radians();
    let az = s.azimuth.to_radians();
    let horizontal = s.range * el.cos();
    Vector3::new(horizontal * az.cos(), horizontal * az.sin(), s.range * el.sin())
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}
