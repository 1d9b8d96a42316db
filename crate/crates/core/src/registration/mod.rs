//! Ground-plane fitting and frame-to-frame registration.

mod icp;
mod ransac;

use thiserror::Error;

use crate::geometry::RigidTransform;

pub use icp::{icp_register, kabsch, IcpConfig, IcpResult};
pub use ransac::{fit_ground_plane, remove_ground, GroundFit, PlaneModel, RansacConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("registration needs non-empty source and target clouds")]
    EmptyCloud,
    #[error("registration failed: no correspondences within the cutoff")]
    RegistrationFailed { init: RigidTransform },
}
