//! Spherical grid description, the 4D radar tensor and the 3D occupancy grid.
//!
//! Bin `i` along an axis covers `[min + i·res, min + (i+1)·res)`. Range
//! starts at `range_min`; elevation and azimuth are centered on
//! `elevation_center` / `azimuth_center`. Memory order is row-major with
//! azimuth fastest.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cartesian_to_spherical, spherical_to_cartesian, wrap_degrees, SphericalCoord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("tensor data length {actual} does not match D·R·E·A = {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("tensor cell {index} holds invalid intensity {value}")]
    InvalidIntensity { index: usize, value: f64 },
    #[error("grid shape {actual:?} does not match expected {expected:?}")]
    ShapeMismatch { expected: [usize; 3], actual: [usize; 3] },
}

/// Radar tensor geometry. Angles in degrees, range in meters, Doppler in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub doppler_bins: usize,
    pub range_bins: usize,
    pub elevation_bins: usize,
    pub azimuth_bins: usize,
    pub doppler_res: f64,
    pub range_res: f64,
    pub elevation_res: f64,
    pub azimuth_res: f64,
    #[serde(default)]
    pub range_min: f64,
    #[serde(default)]
    pub elevation_center: f64,
    #[serde(default)]
    pub azimuth_center: f64,
}

impl GridSpec {
    /// RETINA-4ST layout of the K-Radar recordings: 64×256×107×37 bins at
    /// 0.06 m/s, 0.46 m, 1°, 1°.
    pub fn k_radar() -> Self {
        Self {
            doppler_bins: 64,
            range_bins: 256,
            elevation_bins: 107,
            azimuth_bins: 37,
            doppler_res: 0.06,
            range_res: 0.46,
            elevation_res: 1.0,
            azimuth_res: 1.0,
            range_min: 0.0,
            elevation_center: 0.0,
            azimuth_center: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let counts = [
            self.doppler_bins,
            self.range_bins,
            self.elevation_bins,
            self.azimuth_bins,
        ];
        if counts.contains(&0) {
            return Err(GridError::InvalidSpec(format!(
                "bin counts must be >= 1, got {counts:?}"
            )));
        }
        for (name, res) in [
            ("doppler_res", self.doppler_res),
            ("range_res", self.range_res),
            ("elevation_res", self.elevation_res),
            ("azimuth_res", self.azimuth_res),
        ] {
            if !(res.is_finite() && res > 0.0) {
                return Err(GridError::InvalidSpec(format!("{name} must be > 0, got {res}")));
            }
        }
        if !(self.range_min.is_finite() && self.range_min >= 0.0) {
            return Err(GridError::InvalidSpec(format!(
                "range_min must be finite and >= 0, got {}",
                self.range_min
            )));
        }
        if !self.elevation_center.is_finite() || !self.azimuth_center.is_finite() {
            return Err(GridError::InvalidSpec("non-finite FOV center".into()));
        }
        if self.azimuth_extent() > 360.0 {
            return Err(GridError::InvalidSpec(format!(
                "azimuth extent {}° exceeds 360°",
                self.azimuth_extent()
            )));
        }
        if self.elevation_extent() > 180.0 {
            return Err(GridError::InvalidSpec(format!(
                "elevation extent {}° exceeds 180°",
                self.elevation_extent()
            )));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.doppler_bins * self.range_bins * self.elevation_bins * self.azimuth_bins
    }

    pub fn spatial_dims(&self) -> [usize; 3] {
        [self.range_bins, self.elevation_bins, self.azimuth_bins]
    }

    /// Dimensions of the ground-truth grid: twice R, E and A.
    pub fn doubled_dims(&self) -> [usize; 3] {
        [2 * self.range_bins, 2 * self.elevation_bins, 2 * self.azimuth_bins]
    }

    /// Single-Doppler spec whose native bins are the doubled bins of `self`,
    /// for storing ground-truth resolution fields as tensors. Bin centers
    /// match [`GridSpec::doubled_bin_center`] exactly.
    pub fn doubled(&self) -> GridSpec {
        GridSpec {
            doppler_bins: 1,
            range_bins: 2 * self.range_bins,
            elevation_bins: 2 * self.elevation_bins,
            azimuth_bins: 2 * self.azimuth_bins,
            range_res: self.range_res / 2.0,
            elevation_res: self.elevation_res / 2.0,
            azimuth_res: self.azimuth_res / 2.0,
            ..*self
        }
    }

    pub fn azimuth_extent(&self) -> f64 {
        self.azimuth_bins as f64 * self.azimuth_res
    }

    pub fn elevation_extent(&self) -> f64 {
        self.elevation_bins as f64 * self.elevation_res
    }

    pub fn range_max(&self) -> f64 {
        self.range_min + self.range_bins as f64 * self.range_res
    }

    pub fn elevation_min(&self) -> f64 {
        self.elevation_center - self.elevation_extent() / 2.0
    }

    pub fn azimuth_min(&self) -> f64 {
        self.azimuth_center - self.azimuth_extent() / 2.0
    }

    /// Radial velocity of Doppler bin `d`: `(d − D/2)·doppler_res`.
    pub fn doppler_velocity(&self, d: usize) -> f64 {
        (d as f64 - self.doppler_bins as f64 / 2.0) * self.doppler_res
    }

    /// Nearest Doppler bin for a radial velocity, if inside the grid.
    pub fn doppler_bin(&self, velocity: f64) -> Option<usize> {
        let d = (velocity / self.doppler_res + self.doppler_bins as f64 / 2.0).round();
        (d >= 0.0 && d < self.doppler_bins as f64).then_some(d as usize)
    }

    /// Continuous (range, elevation, azimuth) bin coordinates of a spherical
    /// position. Integer part is the native bin; `floor(2u)` is the bin in
    /// the doubled grid, so parents and children always agree.
    pub fn continuous_bin(&self, s: &SphericalCoord) -> [f64; 3] {
        let rel_az = wrap_degrees(s.azimuth - self.azimuth_center);
        [
            (s.range - self.range_min) / self.range_res,
            (s.elevation - self.elevation_min()) / self.elevation_res,
            (rel_az + self.azimuth_extent() / 2.0) / self.azimuth_res,
        ]
    }

    /// Native (r, e, a) bin containing `p`, or `None` outside range/FOV.
    pub fn spatial_bin(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let u = self.continuous_bin(&cartesian_to_spherical(p));
        bin_indices(u, self.spatial_dims(), 1.0)
    }

    /// Bin of `p` in the doubled (2R, 2E, 2A) grid, or `None` outside.
    pub fn doubled_bin(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let u = self.continuous_bin(&cartesian_to_spherical(p));
        bin_indices(u, self.doubled_dims(), 2.0)
    }

    /// Spherical center of native bin (r, e, a).
    pub fn bin_center(&self, r: usize, e: usize, a: usize) -> SphericalCoord {
        self.center_at_scale([r, e, a], 1.0)
    }

    /// Spherical center of doubled-grid voxel (r', e', a').
    pub fn doubled_bin_center(&self, r: usize, e: usize, a: usize) -> SphericalCoord {
        self.center_at_scale([r, e, a], 2.0)
    }

    fn center_at_scale(&self, idx: [usize; 3], scale: f64) -> SphericalCoord {
        let u = idx.map(|i| (i as f64 + 0.5) / scale);
        SphericalCoord {
            range: self.range_min + u[0] * self.range_res,
            elevation: self.elevation_min() + u[1] * self.elevation_res,
            azimuth: wrap_degrees(self.azimuth_min() + u[2] * self.azimuth_res),
        }
    }

    pub fn bin_center_cartesian(&self, r: usize, e: usize, a: usize) -> Vector3<f64> {
        spherical_to_cartesian(&self.bin_center(r, e, a))
    }

    pub fn doubled_bin_center_cartesian(&self, r: usize, e: usize, a: usize) -> Vector3<f64> {
        spherical_to_cartesian(&self.doubled_bin_center(r, e, a))
    }
}

fn bin_indices(u: [f64; 3], dims: [usize; 3], scale: f64) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for axis in 0..3 {
        let v = (u[axis] * scale).floor();
        if !(v >= 0.0 && v < dims[axis] as f64) {
            return None;
        }
        out[axis] = v as usize;
    }
    Some(out)
}

/// Pre-detection intensity volume, Doppler × range × elevation × azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarTensor4D {
    spec: GridSpec,
    data: Vec<f64>,
}

impl RadarTensor4D {
    pub fn new(spec: GridSpec, data: Vec<f64>) -> Result<Self, GridError> {
        spec.validate()?;
        if data.len() != spec.cell_count() {
            return Err(GridError::LengthMismatch {
                expected: spec.cell_count(),
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(GridError::InvalidIntensity { index, value });
        }
        Ok(Self { spec, data })
    }

    pub fn zeros(spec: GridSpec) -> Result<Self, GridError> {
        spec.validate()?;
        Ok(Self {
            data: vec![0.0; spec.cell_count()],
            spec,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, d: usize, r: usize, e: usize, a: usize) -> usize {
        let s = &self.spec;
        debug_assert!(d < s.doppler_bins && r < s.range_bins && e < s.elevation_bins && a < s.azimuth_bins);
        ((d * s.range_bins + r) * s.elevation_bins + e) * s.azimuth_bins + a
    }

    pub fn index_of(&self, offset: usize) -> [usize; 4] {
        let s = &self.spec;
        let a = offset % s.azimuth_bins;
        let rest = offset / s.azimuth_bins;
        let e = rest % s.elevation_bins;
        let rest = rest / s.elevation_bins;
        let r = rest % s.range_bins;
        let d = rest / s.range_bins;
        [d, r, e, a]
    }

    pub fn get(&self, d: usize, r: usize, e: usize, a: usize) -> f64 {
        self.data[self.offset(d, r, e, a)]
    }

    /// Writes one cell. Negative or non-finite values are rejected.
    pub fn set(&mut self, d: usize, r: usize, e: usize, a: usize, value: f64) -> Result<(), GridError> {
        let offset = self.offset(d, r, e, a);
        if !(value.is_finite() && value >= 0.0) {
            return Err(GridError::InvalidIntensity { index: offset, value });
        }
        self.data[offset] = value;
        Ok(())
    }

    /// Multiplies every cell by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self, GridError> {
        Self::new(self.spec, self.data.iter().map(|v| v * factor).collect())
    }

    /// Maximum over Doppler for each spatial cell, laid out (r, e, a).
    pub fn max_over_doppler(&self) -> Vec<f64> {
        let spatial = self.spec.range_bins * self.spec.elevation_bins * self.spec.azimuth_bins;
        let mut out = vec![f64::NEG_INFINITY; spatial];
        for chunk in self.data.chunks_exact(spatial) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o = o.max(*v);
            }
        }
        out
    }
}

/// Boolean occupancy over the doubled (2R, 2E, 2A) spherical grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid3D {
    spec: GridSpec,
    cells: Vec<bool>,
}

impl OccupancyGrid3D {
    pub fn empty(spec: GridSpec) -> Result<Self, GridError> {
        spec.validate()?;
        let [r, e, a] = spec.doubled_dims();
        Ok(Self {
            spec,
            cells: vec![false; r * e * a],
        })
    }

    pub fn from_cells(spec: GridSpec, cells: Vec<bool>) -> Result<Self, GridError> {
        spec.validate()?;
        let [r, e, a] = spec.doubled_dims();
        if cells.len() != r * e * a {
            return Err(GridError::LengthMismatch {
                expected: r * e * a,
                actual: cells.len(),
            });
        }
        Ok(Self { spec, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dims(&self) -> [usize; 3] {
        self.spec.doubled_dims()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn offset(&self, r: usize, e: usize, a: usize) -> usize {
        let [_, ne, na] = self.dims();
        (r * ne + e) * na + a
    }

    pub fn index_of(&self, offset: usize) -> [usize; 3] {
        let [_, ne, na] = self.dims();
        [offset / (ne * na), (offset / na) % ne, offset % na]
    }

    pub fn get(&self, r: usize, e: usize, a: usize) -> bool {
        self.cells[self.offset(r, e, a)]
    }

    pub fn set(&mut self, r: usize, e: usize, a: usize, value: bool) {
        let o = self.offset(r, e, a);
        self.cells[o] = value;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(o, _)| self.index_of(o))
    }

    /// True when every occupied voxel of `self` is also occupied in `other`.
    pub fn is_subset_of(&self, other: &OccupancyGrid3D) -> bool {
        self.cells.len() == other.cells.len() && self.cells.iter().zip(&other.cells).all(|(a, b)| !*a || *b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn doubled_spec_centers_match() {
        let spec = GridSpec::k_radar();
        let d = spec.doubled();
        assert_eq!(d.spatial_dims(), [512, 214, 74]);
        assert_eq!(
            (d.elevation_min(), d.azimuth_min()),
            (spec.elevation_min(), spec.azimuth_min())
        );
        for (r, e, a) in [(0, 0, 0), (511, 213, 73), (100, 57, 3)] {
            assert_eq!(d.bin_center(r, e, a), spec.doubled_bin_center(r, e, a));
        }
    }

    fn small_spec() -> GridSpec {
        GridSpec {
            doppler_bins: 3,
            range_bins: 5,
            elevation_bins: 4,
            azimuth_bins: 6,
            ..GridSpec::k_radar()
        }
    }

    #[test]
    fn k_radar_doubles() {
        assert_eq!(GridSpec::k_radar().doubled_dims(), [512, 214, 74]);
        assert_eq!(GridSpec::k_radar().cell_count(), 64 * 256 * 107 * 37);
    }

    #[test]
    fn spec_validation() {
        let mut s = small_spec();
        s.range_bins = 0;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.azimuth_res = -1.0;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.azimuth_bins = 361;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.elevation_bins = 181;
        assert!(s.validate().is_err());
        assert!(small_spec().validate().is_ok());
    }

    #[test]
    fn tensor_rejects_bad_data() {
        let s = small_spec();
        assert!(matches!(
            RadarTensor4D::new(s, vec![0.0; 3]),
            Err(GridError::LengthMismatch { .. })
        ));
        let mut data = vec![0.0; s.cell_count()];
        data[7] = -1.0;
        assert!(matches!(
            RadarTensor4D::new(s, data.clone()),
            Err(GridError::InvalidIntensity { index: 7, .. })
        ));
        data[7] = f64::NAN;
        assert!(RadarTensor4D::new(s, data).is_err());
    }

    #[test]
    fn tensor_indexing_is_bijective() {
        let s = small_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = RadarTensor4D::zeros(s).unwrap();
        let mut expected = Vec::new();
        for d in 0..s.doppler_bins {
            for r in 0..s.range_bins {
                for e in 0..s.elevation_bins {
                    for a in 0..s.azimuth_bins {
                        let v: f64 = rng.random();
                        t.set(d, r, e, a, v).unwrap();
                        expected.push(v);
                        let o = t.offset(d, r, e, a);
                        assert_eq!(t.index_of(o), [d, r, e, a]);
                    }
                }
            }
        }
        // azimuth-fastest order means the writes above are sequential
        assert_eq!(t.data(), &expected[..]);
        for (o, v) in expected.iter().enumerate() {
            let [d, r, e, a] = t.index_of(o);
            assert_eq!(t.get(d, r, e, a), *v);
        }
    }

    #[test]
    fn boresight_bin_center() {
        let s = GridSpec::k_radar();
        let c = s.bin_center(0, 53, 18);
        assert!((c.range - 0.23).abs() < 1e-12);
        assert!(c.elevation.abs() < 1e-12 && c.azimuth.abs() < 1e-12);
    }

    #[test]
    fn upper_edge_goes_to_next_bin() {
        let s = GridSpec::k_radar();
        let p = Vector3::new(0.46, 0.0, 0.0);
        assert_eq!(s.spatial_bin(&p).unwrap()[0], 1);
        let p = Vector3::new(0.23, 0.0, 0.0);
        assert_eq!(s.doubled_bin(&p).unwrap()[0], 1);
        // just beyond the far edge
        assert!(s.spatial_bin(&Vector3::new(s.range_max(), 0.0, 0.0)).is_none());
    }

    #[test]
    fn out_of_fov_is_none() {
        let s = GridSpec::k_radar();
        assert!(s.spatial_bin(&Vector3::new(-5.0, 0.0, 0.0)).is_none());
        assert!(s.spatial_bin(&Vector3::new(1.0, 1.0, 0.0)).is_none());
    }

    #[test]
    fn parents_contain_children() {
        let s = small_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let p = Vector3::new(
                rng.random_range(0.0..3.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.2..0.2),
            );
            match (s.spatial_bin(&p), s.doubled_bin(&p)) {
                (Some(parent), Some(child)) => assert_eq!(parent, child.map(|c| c / 2)),
                (None, None) => {}
                other => panic!("inconsistent binning {other:?} for {p:?}"),
            }
        }
    }

    #[test]
    fn doppler_bins() {
        let s = GridSpec::k_radar();
        assert_eq!(s.doppler_velocity(32), 0.0);
        assert_eq!(s.doppler_bin(0.0), Some(32));
        assert_eq!(s.doppler_bin(s.doppler_velocity(40)), Some(40));
        assert_eq!(s.doppler_bin(100.0), None);
    }

    #[test]
    fn max_over_doppler_layout() {
        let s = small_spec();
        let mut t = RadarTensor4D::zeros(s).unwrap();
        t.set(2, 1, 2, 3, 5.0).unwrap();
        t.set(0, 1, 2, 3, 2.0).unwrap();
        let m = t.max_over_doppler();
        assert_eq!(m[(4 + 2) * 6 + 3], 5.0);
        assert_eq!(m.iter().filter(|v| **v > 0.0).count(), 1);
    }
}
