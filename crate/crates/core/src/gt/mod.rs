//! Dense 3D occupancy ground truth from labeled multi-frame LiDAR.
//!
//! Per frame the raw cloud is split into static points and one cloud per
//! tracked object. Static points lose their ground plane and are stitched
//! with the `t` preceding and following frames through the chained ego
//! motion; object points are stitched through the object poses. The union is
//! moved into the radar frame, voxelized on a spherical grid at twice the
//! radar tensor's range/elevation/azimuth resolution and finally filtered by
//! the radar intensity of each voxel's parent cell.

mod pipeline;
mod stitch;
mod voxel;

use std::collections::BTreeMap;

use nalgebra::Vector3;
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geometry::RigidTransform;
use crate::grid::{GridError, RadarTensor4D};
use crate::registration::RegistrationError;

pub use pipeline::{
    build_ground_truth, estimate_ego_motion, GroundTruthFrame, GtConfig, GtPipeline, IntensityThreshold,
};
pub use stitch::{merge_gt, split_static_dynamic, stitch_dynamic, stitch_static, track_sequences};
pub use voxel::{intensity_filter, percentile, voxelize_gt};

pub type TrackId = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GtError {
    #[error("missing ego-motion link between frames {from} and {to}")]
    MissingPose { from: usize, to: usize },
    #[error("frame {frame} is outside the sequence of {len} frames")]
    FrameOutOfRange { frame: usize, len: usize },
    #[error("no radar tensor for frame {frame}")]
    MissingRadarTensor { frame: usize },
    #[error("occupancy grid {grid:?} is not twice the tensor's spatial dims {tensor:?}")]
    DimensionMismatch { grid: [usize; 3], tensor: [usize; 3] },
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Registration(#[from] RegistrationError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// One object annotation: `object_pose` maps object coordinates into the
/// sensor frame of `frame_id`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLabel {
    pub frame_id: usize,
    pub track_id: TrackId,
    pub object_pose: RigidTransform,
    pub half_extents: Vector3<f64>,
}

impl FrameLabel {
    pub fn validate(&self) -> Result<(), GtError> {
        if self.half_extents.iter().all(|h| h.is_finite() && *h > 0.0) {
            Ok(())
        } else {
            Err(GtError::InvalidLabel(format!(
                "track {} frame {}: half extents must be > 0, got {:?}",
                self.track_id, self.frame_id, self.half_extents
            )))
        }
    }

    /// Closed box test in object coordinates.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let local = self.object_pose.inverse().apply(p);
        (0..3).all(|i| local[i].abs() <= self.half_extents[i])
    }
}

/// Per-frame observations of one object, keyed by frame index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackedObjectSequence {
    pub track_id: TrackId,
    pub entries: BTreeMap<usize, (FrameLabel, PointCloud)>,
}

impl TrackedObjectSequence {
    pub fn new(track_id: TrackId) -> Self {
        Self {
            track_id,
            entries: BTreeMap::new(),
        }
    }

    /// Checks track ids and that every point sits inside its labeled box.
    pub fn validate(&self) -> Result<(), GtError> {
        for (frame, (label, cloud)) in &self.entries {
            label.validate()?;
            if label.track_id != self.track_id || label.frame_id != *frame {
                return Err(GtError::InvalidLabel(format!(
                    "entry at frame {frame} carries label for track {} frame {}",
                    label.track_id, label.frame_id
                )));
            }
            if let Some(p) = cloud.positions().find(|p| !label.contains(p)) {
                return Err(GtError::InvalidLabel(format!(
                    "track {} frame {frame}: point {p:?} outside its box",
                    self.track_id
                )));
            }
        }
        Ok(())
    }
}

/// One recorded frame: raw LiDAR cloud, its object labels and optionally
/// the radar tensor captured with it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub cloud: PointCloud,
    pub labels: Vec<FrameLabel>,
    pub radar: Option<RadarTensor4D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    pub frames: Vec<Frame>,
    /// `ego_motion[k]` maps frame `k+1` sensor coordinates into frame `k`
    /// sensor coordinates (the pose of frame `k+1` seen from frame `k`).
    pub ego_motion: BTreeMap<usize, RigidTransform>,
    /// LiDAR frame to radar frame.
    pub extrinsic: RigidTransform,
    /// Frames stitched on each side of the target frame.
    pub stitch_window: usize,
}

/// Default number of neighbouring frames stitched on each side.
pub const DEFAULT_STITCH_WINDOW: usize = 10;

impl SequenceData {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn check_frame(&self, frame: usize) -> Result<(), GtError> {
        if frame < self.frames.len() {
            Ok(())
        } else {
            Err(GtError::FrameOutOfRange {
                frame,
                len: self.frames.len(),
            })
        }
    }

    /// Frames `[k - t, k + t]` clipped to the sequence.
    pub fn window(&self, k: usize, t: usize) -> std::ops::RangeInclusive<usize> {
        k.saturating_sub(t)..=(k + t).min(self.frames.len().saturating_sub(1))
    }
}
