use nalgebra::Vector3;

use crate::geometry::RigidTransform;

/// A LiDAR or radar return: Cartesian position in meters plus intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub position: Vector3<f64>,
    pub intensity: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Self {
            position: Vector3::new(x, y, z),
            intensity,
        }
    }

    pub fn at(position: Vector3<f64>) -> Self {
        Self {
            position,
            intensity: 0.0,
        }
    }
}

/// Points of one frame. An empty cloud is valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point>,
    pub frame_id: u64,
}

impl PointCloud {
    pub fn new(points: Vec<Point>, frame_id: u64) -> Self {
        Self { points, frame_id }
    }

    pub fn from_positions<I: IntoIterator<Item = Vector3<f64>>>(positions: I, frame_id: u64) -> Self {
        Self {
            points: positions.into_iter().map(Point::at).collect(),
            frame_id,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = &Vector3<f64>> + '_ {
        self.points.iter().map(|p| &p.position)
    }

    pub fn is_finite(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.position.iter().all(|c| c.is_finite()) && p.intensity.is_finite())
    }

    /// Applies `R·p + t` to every point, keeping order and intensities.
    pub fn transformed(&self, transform: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| Point {
                    position: transform.apply(&p.position),
                    intensity: p.intensity,
                })
                .collect(),
            frame_id: self.frame_id,
        }
    }

    pub fn extend_from(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }
}

pub fn transform_point_cloud(cloud: &PointCloud, transform: &RigidTransform) -> PointCloud {
    cloud.transformed(transform)
}
