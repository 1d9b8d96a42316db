use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stitch::{merge_gt, split_static_dynamic, stitch_dynamic, stitch_static, track_sequences};
use super::voxel::{intensity_filter, percentile, voxelize_gt};
use super::{GtError, SequenceData, TrackId, DEFAULT_STITCH_WINDOW};
use crate::cloud::PointCloud;
use crate::geometry::RigidTransform;
use crate::grid::OccupancyGrid3D;
use crate::registration::{
    fit_ground_plane, icp_register, remove_ground, GroundFit, IcpConfig, RansacConfig, RegistrationError,
};

/// How the radar intensity cut-off for the final filter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityThreshold {
    Fixed(f64),
    /// Percentile (0–100) of the frame's max-over-Doppler intensities.
    Percentile(f64),
}

impl Default for IntensityThreshold {
    fn default() -> Self {
        IntensityThreshold::Percentile(65.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GtConfig {
    /// Overrides the sequence's stitch window when set.
    pub stitch_window: Option<usize>,
    pub remove_ground: bool,
    pub ransac: RansacConfig,
    pub intensity_threshold: IntensityThreshold,
}

impl Default for GtConfig {
    fn default() -> Self {
        Self {
            stitch_window: None,
            remove_ground: true,
            ransac: RansacConfig::default(),
            intensity_threshold: IntensityThreshold::default(),
        }
    }
}

/// Output of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFrame {
    pub frame: usize,
    /// Stitched, ground-removed cloud in the LiDAR frame of `frame`.
    pub stitched: PointCloud,
    /// Occupancy before the intensity filter.
    pub voxelized: OccupancyGrid3D,
    pub grid: OccupancyGrid3D,
    pub intensity_threshold: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GtPipeline {
    pub config: GtConfig,
}

impl GtPipeline {
    pub fn new(config: GtConfig) -> Self {
        Self { config }
    }

    fn static_non_ground(&self, cloud: PointCloud) -> Result<PointCloud, GtError> {
        if !self.config.remove_ground {
            return Ok(cloud);
        }
        match fit_ground_plane(&cloud, &self.config.ransac) {
            Ok(GroundFit::Plane { plane, .. }) => {
                Ok(remove_ground(&cloud, &plane, self.config.ransac.inlier_threshold))
            }
            Ok(GroundFit::NoGround { .. }) | Err(RegistrationError::DegenerateInput(_)) => Ok(cloud),
            Err(e) => Err(e.into()),
        }
    }

    /// Split, ground removal and stitching for frame `k`; returns the dense
    /// cloud in the LiDAR frame of `k`.
    pub fn stitch(&self, seq: &SequenceData, k: usize) -> Result<PointCloud, GtError> {
        seq.check_frame(k)?;
        let t = self.config.stitch_window.unwrap_or(seq.stitch_window);
        let window = seq.window(k, t);

        let mut statics = vec![PointCloud::default(); window.end() + 1];
        let mut per_frame: Vec<(usize, BTreeMap<TrackId, PointCloud>)> = Vec::new();
        for j in window.clone() {
            let frame = &seq.frames[j];
            for label in &frame.labels {
                label.validate()?;
            }
            let (static_cloud, dynamic) = split_static_dynamic(&frame.cloud, &frame.labels);
            statics[j] = self.static_non_ground(static_cloud)?;
            per_frame.push((j, dynamic));
        }
        let static_stitched = stitch_static(&statics, &seq.ego_motion, k, t)?;
        let tracks = track_sequences(
            per_frame
                .iter()
                .map(|(j, dynamic)| (*j, seq.frames[*j].labels.as_slice(), dynamic)),
        );
        let dynamic_stitched: BTreeMap<TrackId, PointCloud> = tracks
            .iter()
            .map(|(id, obj)| (*id, stitch_dynamic(obj, k, t)))
            .collect();
        log::debug!(
            "frame {k}: {} static + {} object points stitched over {:?}",
            static_stitched.len(),
            dynamic_stitched.values().map(PointCloud::len).sum::<usize>(),
            window
        );
        Ok(merge_gt(&static_stitched, &dynamic_stitched))
    }

    pub fn run(&self, seq: &SequenceData, k: usize) -> Result<GroundTruthFrame, GtError> {
        seq.check_frame(k)?;
        let tensor = seq.frames[k]
            .radar
            .as_ref()
            .ok_or(GtError::MissingRadarTensor { frame: k })?;
        let stitched = self.stitch(seq, k)?;
        let voxelized = voxelize_gt(&stitched, &seq.extrinsic, tensor.spec())?;
        let threshold = match self.config.intensity_threshold {
            IntensityThreshold::Fixed(v) => v,
            IntensityThreshold::Percentile(q) => percentile(&tensor.max_over_doppler(), q)
                .ok_or_else(|| GtError::InvalidConfig(format!("percentile {q} outside [0, 100]")))?,
        };
        let grid = intensity_filter(&voxelized, tensor, threshold)?;
        Ok(GroundTruthFrame {
            frame: k,
            stitched,
            voxelized,
            grid,
            intensity_threshold: threshold,
        })
    }
}

/// Dense occupancy ground truth for frame `k` of `seq`.
pub fn build_ground_truth(seq: &SequenceData, k: usize, config: &GtConfig) -> Result<OccupancyGrid3D, GtError> {
    Ok(GtPipeline::new(*config).run(seq, k)?.grid)
}

/// Ego motion between consecutive frames by ICP of frame `k+1` onto frame
/// `k`, starting from identity.
pub fn estimate_ego_motion(
    clouds: &[PointCloud],
    config: &IcpConfig,
) -> Result<BTreeMap<usize, RigidTransform>, GtError> {
    let mut out = BTreeMap::new();
    for k in 0..clouds.len().saturating_sub(1) {
        let res = icp_register(&clouds[k + 1], &clouds[k], config, &RigidTransform::identity())?;
        out.insert(k, res.transform);
    }
    Ok(out)
}

impl Default for SequenceData {
    fn default() -> Self {
        Self {
            frames: Vec::new(),
            ego_motion: BTreeMap::new(),
            extrinsic: RigidTransform::identity(),
            stitch_window: DEFAULT_STITCH_WINDOW,
        }
    }
}
