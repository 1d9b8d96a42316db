//! Radar point cloud toolkit.
//!
//! - [`cfar`]: CA/OS-CFAR detection on 4D radar tensors.
//! - [`registration`]: RANSAC ground fitting and point-to-point ICP.
//! - [`gt`]: dense 3D occupancy ground truth from stitched multi-frame LiDAR.
//! - [`metrics`]: RPCD / RPCA and the fixed point-budget threshold sweep.
//! - [`loss`]: weighted hybrid dice + focal loss with analytic gradients.
//! - [`synth`]: deterministic synthetic scenes, LiDAR frames and radar tensors.
//! - [`io`]: binary and CSV file formats.

pub mod cfar;
pub mod cli;
pub mod cloud;
pub mod geometry;
pub mod grid;
pub mod gt;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod registration;
pub mod spatial;
pub mod synth;

pub use cloud::{transform_point_cloud, Point, PointCloud};
pub use geometry::{cartesian_to_spherical, spherical_to_cartesian, RigidTransform, SphericalCoord};
pub use grid::{GridSpec, OccupancyGrid3D, RadarTensor4D};
