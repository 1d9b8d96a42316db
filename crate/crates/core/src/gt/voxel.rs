use super::GtError;
use crate::cloud::PointCloud;
use crate::geometry::RigidTransform;
use crate::grid::{GridSpec, OccupancyGrid3D, RadarTensor4D};

/// Moves `cloud` into the radar frame and marks every doubled-resolution
/// voxel that holds at least one point. Points outside the range interval
/// or the angular FOV are dropped.
pub fn voxelize_gt(
    cloud: &PointCloud,
    extrinsic: &RigidTransform,
    spec: &GridSpec,
) -> Result<OccupancyGrid3D, GtError> {
    let mut grid = OccupancyGrid3D::empty(*spec)?;
    for p in cloud.positions() {
        if let Some([r, e, a]) = spec.doubled_bin(&extrinsic.apply(p)) {
            grid.set(r, e, a, true);
        }
    }
    Ok(grid)
}

/// Keeps voxel `(r, e, a)` only if the max-over-Doppler intensity of its
/// parent tensor cell `(r/2, e/2, a/2)` is strictly above `threshold`.
pub fn intensity_filter(
    grid: &OccupancyGrid3D,
    tensor: &RadarTensor4D,
    threshold: f64,
) -> Result<OccupancyGrid3D, GtError> {
    let ts = tensor.spec();
    if grid.dims() != ts.doubled_dims() {
        return Err(GtError::DimensionMismatch {
            grid: grid.dims(),
            tensor: ts.spatial_dims(),
        });
    }
    let strongest = tensor.max_over_doppler();
    let (ne, na) = (ts.elevation_bins, ts.azimuth_bins);
    let mut out = OccupancyGrid3D::empty(*grid.spec())?;
    for [r, e, a] in grid.occupied_indices() {
        let parent = ((r / 2) * ne + e / 2) * na + a / 2;
        if strongest[parent] > threshold {
            out.set(r, e, a, true);
        }
    }
    Ok(out)
}

/// Linearly interpolated percentile (`q` in `[0, 100]`) of `values`.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}
