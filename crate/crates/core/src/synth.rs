//! Synthetic scenes with exact poses and labels, plus the LiDAR frames and
//! radar tensors they produce.
//!
//! Surfaces are sampled once per scene in world (or object) coordinates, so
//! every frame observes the same physical points; only the sensor pose and
//! the measurement noise change. The world frame has z up with the ground at
//! `z = 0` in the provided scenes.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{Point, PointCloud};
use crate::geometry::{cartesian_to_spherical, RigidTransform};
use crate::grid::{GridError, GridSpec, RadarTensor4D};
use crate::gt::{Frame, FrameLabel, SequenceData, TrackId, DEFAULT_STITCH_WINDOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Translation plus roll/pitch/yaw in degrees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseSpec {
    pub translation: [f64; 3],
    pub rpy_deg: [f64; 3],
}

impl PoseSpec {
    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self {
            translation: [x, y, z],
            rpy_deg: [0.0; 3],
        }
    }

    pub fn with_yaw(mut self, yaw_deg: f64) -> Self {
        self.rpy_deg[2] = yaw_deg;
        self
    }

    pub fn to_transform(&self) -> RigidTransform {
        let [r, p, y] = self.rpy_deg;
        RigidTransform::from_euler_deg(r, p, y, Vector3::from(self.translation))
    }
}

fn default_density() -> f64 {
    4.0
}

fn default_reflectivity() -> f64 {
    1.0
}

/// Rectangle in the local xy plane of `pose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    #[serde(default)]
    pub pose: PoseSpec,
    pub half_size: [f64; 2],
    /// Points per m².
    #[serde(default = "default_density")]
    pub density: f64,
    /// Radar echo scale; 0 makes the surface invisible to the radar.
    #[serde(default = "default_reflectivity")]
    pub reflectivity: f64,
}

/// Surface of an axis-aligned box in the local frame of `pose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    #[serde(default)]
    pub pose: PoseSpec,
    pub half_extents: [f64; 3],
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_reflectivity")]
    pub reflectivity: f64,
}

/// A moving box. Its world pose at frame `k` is `start ∘ stepᵏ`, so `step`
/// is expressed in the object's own frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub track_id: TrackId,
    pub half_extents: [f64; 3],
    #[serde(default)]
    pub start: PoseSpec,
    #[serde(default)]
    pub step: PoseSpec,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_reflectivity")]
    pub reflectivity: f64,
}

/// Ego (LiDAR) trajectory: pose `start ∘ stepᵏ` in the world at frame `k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoSpec {
    pub start: PoseSpec,
    pub step: PoseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarSimSpec {
    pub grid: GridSpec,
    /// Peak echo of a reflectivity-1 surface cell.
    pub amplitude: f64,
    /// Echo spread in bins along (doppler, range, elevation, azimuth).
    pub spread_bins: [usize; 4],
    /// Echo scale per bin of L1 distance from the target cell.
    pub falloff: f64,
    /// Mean of the exponential noise floor; 0 disables noise.
    pub noise_mean: f64,
    pub rng_seed: u64,
}

impl Default for RadarSimSpec {
    fn default() -> Self {
        Self {
            grid: desk_radar_grid(),
            amplitude: 20.0,
            spread_bins: [0, 1, 0, 0],
            falloff: 0.5,
            noise_mean: 1.0,
            rng_seed: 0,
        }
    }
}

impl RadarSimSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.grid.validate()?;
        if !(self.noise_mean.is_finite() && self.noise_mean >= 0.0) {
            return invalid(format!("radar noise_mean must be >= 0, got {}", self.noise_mean));
        }
        if !(self.amplitude.is_finite() && self.amplitude > self.noise_mean) {
            return invalid(format!(
                "radar amplitude {} must exceed the noise mean {}",
                self.amplitude, self.noise_mean
            ));
        }
        if !(0.0..=1.0).contains(&self.falloff) {
            return invalid(format!("radar falloff must be in [0, 1], got {}", self.falloff));
        }
        Ok(())
    }
}

/// Radar grid for desk-scale runs: 16 Doppler bins of 1 m/s, 2–34 m in
/// 0.5 m bins, ±12° elevation in 1.5° bins and ±32° azimuth in 2° bins.
pub fn desk_radar_grid() -> GridSpec {
    GridSpec {
        doppler_bins: 16,
        range_bins: 64,
        elevation_bins: 16,
        azimuth_bins: 32,
        doppler_res: 1.0,
        range_res: 0.5,
        elevation_res: 1.5,
        azimuth_res: 2.0,
        range_min: 2.0,
        elevation_center: 0.0,
        azimuth_center: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub seed: u64,
    pub frame_count: usize,
    /// Seconds between frames, used for Doppler.
    pub frame_dt: f64,
    /// Gaussian LiDAR noise per sensor axis, meters.
    pub noise_sigma: [f64; 3],
    /// LiDAR points farther than this are not returned.
    pub max_range: f64,
    /// Labeled boxes are this much larger than the sampled object surface on
    /// each side; noisy object points are kept inside.
    pub label_margin: f64,
    pub stitch_window: usize,
    /// LiDAR frame to radar frame.
    pub extrinsic: PoseSpec,
    pub ego: EgoSpec,
    pub planes: Vec<PlaneSpec>,
    pub boxes: Vec<BoxSpec>,
    pub objects: Vec<ObjectSpec>,
    pub radar: Option<RadarSimSpec>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            frame_count: 1,
            frame_dt: 0.1,
            noise_sigma: [0.0; 3],
            max_range: 60.0,
            label_margin: 0.1,
            stitch_window: DEFAULT_STITCH_WINDOW,
            extrinsic: PoseSpec::default(),
            ego: EgoSpec::default(),
            planes: Vec::new(),
            boxes: Vec::new(),
            objects: Vec::new(),
            radar: None,
        }
    }
}

fn invalid<T>(msg: String) -> Result<T, SynthError> {
    Err(SynthError::InvalidScene(msg))
}

fn check_positive(what: &str, values: &[f64]) -> Result<(), SynthError> {
    if values.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        invalid(format!("{what} must be > 0, got {values:?}"))
    }
}

impl SceneSpec {
    /// Street-like scene: ground (radar-invisible), a wall, a building front,
    /// pillars, a parked car and two moving cars, seen from an ego vehicle
    /// driving forward at 6 m/s while turning slightly left.
    pub fn desk() -> Self {
        let car = [2.2, 0.9, 0.75];
        Self {
            seed: 7,
            frame_count: 9,
            frame_dt: 0.1,
            noise_sigma: [0.01; 3],
            max_range: 40.0,
            label_margin: 0.1,
            stitch_window: 4,
            extrinsic: PoseSpec::at(-0.3, 0.0, 0.4),
            ego: EgoSpec {
                start: PoseSpec::at(0.0, 0.0, 1.5),
                step: PoseSpec::at(0.6, 0.0, 0.0).with_yaw(0.5),
            },
            planes: vec![PlaneSpec {
                pose: PoseSpec::at(20.0, 0.0, 0.0),
                half_size: [30.0, 15.0],
                density: 1.5,
                reflectivity: 0.0,
            }],
            boxes: vec![
                BoxSpec {
                    pose: PoseSpec::at(18.0, 9.0, 1.5),
                    half_extents: [12.0, 0.2, 1.5],
                    density: 6.0,
                    reflectivity: 1.0,
                },
                BoxSpec {
                    pose: PoseSpec::at(32.0, -2.0, 2.0),
                    half_extents: [1.0, 6.0, 2.0],
                    density: 6.0,
                    reflectivity: 1.0,
                },
                BoxSpec {
                    pose: PoseSpec::at(12.0, -5.0, 1.0),
                    half_extents: [0.3, 0.3, 1.0],
                    density: 20.0,
                    reflectivity: 1.0,
                },
                BoxSpec {
                    pose: PoseSpec::at(22.0, 4.0, 1.0),
                    half_extents: [0.3, 0.3, 1.0],
                    density: 20.0,
                    reflectivity: 1.0,
                },
                BoxSpec {
                    pose: PoseSpec::at(15.0, 5.0, 0.8),
                    half_extents: car,
                    density: 10.0,
                    reflectivity: 1.0,
                },
            ],
            objects: vec![
                ObjectSpec {
                    track_id: 1,
                    half_extents: car,
                    start: PoseSpec::at(9.0, -2.0, 0.8),
                    step: PoseSpec::at(0.9, 0.0, 0.0),
                    density: 10.0,
                    reflectivity: 1.0,
                },
                ObjectSpec {
                    track_id: 2,
                    half_extents: car,
                    start: PoseSpec::at(28.0, 2.5, 0.8).with_yaw(180.0),
                    step: PoseSpec::at(0.5, 0.0, 0.0),
                    density: 10.0,
                    reflectivity: 1.0,
                },
            ],
            radar: Some(RadarSimSpec::default()),
        }
    }

    /// Strong compact reflectors: a field of poles ahead of the ego plus one
    /// moving and one parked car, over a radar-invisible ground. Extended
    /// surfaces along the range axis are avoided so that range-axis CFAR
    /// sees isolated targets.
    pub fn pole_field() -> Self {
        let mut boxes = Vec::new();
        for row in 0..6 {
            for col in 0..6 {
                let range = 7.0 + 4.0 * row as f64 + 0.7 * col as f64;
                let az = (-25.0 + 10.0 * col as f64 + 3.0 * row as f64).to_radians();
                let cm = |v: f64| (v * 100.0).round() / 100.0;
                boxes.push(BoxSpec {
                    pose: PoseSpec::at(cm(range * az.cos()), cm(range * az.sin()), 0.75),
                    half_extents: [0.15, 0.15, 0.75],
                    density: 60.0,
                    reflectivity: 1.0,
                });
            }
        }
        boxes.push(BoxSpec {
            pose: PoseSpec::at(18.0, -6.0, 0.8),
            half_extents: [2.2, 0.9, 0.75],
            density: 10.0,
            reflectivity: 1.0,
        });
        Self {
            seed: 11,
            frame_count: 7,
            frame_dt: 0.1,
            noise_sigma: [0.01; 3],
            max_range: 40.0,
            label_margin: 0.1,
            stitch_window: 3,
            extrinsic: PoseSpec::at(-0.3, 0.0, 0.4),
            ego: EgoSpec {
                start: PoseSpec::at(-1.5, 0.0, 1.5),
                step: PoseSpec::at(0.5, 0.0, 0.0),
            },
            planes: vec![PlaneSpec {
                pose: PoseSpec::at(18.0, 0.0, 0.0),
                half_size: [25.0, 15.0],
                density: 1.5,
                reflectivity: 0.0,
            }],
            boxes,
            objects: vec![ObjectSpec {
                track_id: 1,
                half_extents: [2.2, 0.9, 0.75],
                start: PoseSpec::at(8.0, 5.5, 0.8),
                step: PoseSpec::at(0.9, 0.0, 0.0),
                density: 10.0,
                reflectivity: 1.0,
            }],
            radar: Some(RadarSimSpec::default()),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.frame_count == 0 {
            return invalid("frame_count must be >= 1".into());
        }
        check_positive("frame_dt", &[self.frame_dt])?;
        check_positive("max_range", &[self.max_range])?;
        if self.noise_sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return invalid(format!("noise_sigma must be >= 0, got {:?}", self.noise_sigma));
        }
        if !(self.label_margin.is_finite() && self.label_margin >= 0.0) {
            return invalid(format!("label_margin must be >= 0, got {}", self.label_margin));
        }
        let reflect = |r: f64| {
            if r.is_finite() && r >= 0.0 {
                Ok(())
            } else {
                invalid(format!("reflectivity must be >= 0, got {r}"))
            }
        };
        for p in &self.planes {
            check_positive("plane half_size", &p.half_size)?;
            check_positive("plane density", &[p.density])?;
            reflect(p.reflectivity)?;
        }
        for b in &self.boxes {
            check_positive("box half_extents", &b.half_extents)?;
            check_positive("box density", &[b.density])?;
            reflect(b.reflectivity)?;
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            check_positive("object half_extents", &o.half_extents)?;
            check_positive("object density", &[o.density])?;
            reflect(o.reflectivity)?;
            if !ids.insert(o.track_id) {
                return invalid(format!("duplicate track id {}", o.track_id));
            }
        }
        if let Some(radar) = &self.radar {
            radar.validate()?;
        }
        Ok(())
    }
}

/// Uniform samples on the rectangle `[-hx, hx] × [-hy, hy]` of the plane
/// spanned by local axes `u` and `v` through `center`.
fn sample_rect(
    rng: &mut ChaCha8Rng,
    center: Vector3<f64>,
    u: Vector3<f64>,
    v: Vector3<f64>,
    half: [f64; 2],
    density: f64,
    out: &mut Vec<Vector3<f64>>,
) {
    let n = (4.0 * half[0] * half[1] * density).round() as usize;
    for _ in 0..n {
        let a = rng.random_range(-half[0]..=half[0]);
        let b = rng.random_range(-half[1]..=half[1]);
        out.push(center + u * a + v * b);
    }
}

/// Samples on the six faces of a box in its local frame.
fn sample_box_surface(rng: &mut ChaCha8Rng, h: [f64; 3], density: f64) -> Vec<Vector3<f64>> {
    let mut out = Vec::new();
    for axis in 0..3 {
        let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            let mut center = Vector3::zeros();
            center[axis] = sign * h[axis];
            sample_rect(
                rng,
                center,
                Vector3::ith(i, 1.0),
                Vector3::ith(j, 1.0),
                [h[i], h[j]],
                density,
                &mut out,
            );
        }
    }
    out
}

/// One radar echo source seen at a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    /// Position in the radar frame.
    pub position: Vector3<f64>,
    /// Range rate, m/s (positive receding).
    pub radial_velocity: f64,
    pub reflectivity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    pub tensor: RadarTensor4D,
    /// Cells holding an injected echo peak, ascending by offset.
    pub targets: Vec<[usize; 4]>,
    /// Radar-frame positions of surface samples that fell outside the grid.
    pub skipped: Vec<Vector3<f64>>,
}

/// A scene with its surfaces sampled.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    spec: SceneSpec,
    /// World points with reflectivity.
    statics: Vec<(Vector3<f64>, f64)>,
    /// Object-frame surface points per object.
    objects: Vec<Vec<Vector3<f64>>>,
}

impl SyntheticScene {
    pub fn new(spec: SceneSpec) -> Result<Self, SynthError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut statics = Vec::new();
        for p in &spec.planes {
            let pose = p.pose.to_transform();
            let mut local = Vec::new();
            sample_rect(
                &mut rng,
                Vector3::zeros(),
                Vector3::x(),
                Vector3::y(),
                p.half_size,
                p.density,
                &mut local,
            );
            statics.extend(local.iter().map(|q| (pose.apply(q), p.reflectivity)));
        }
        for b in &spec.boxes {
            let pose = b.pose.to_transform();
            statics.extend(
                sample_box_surface(&mut rng, b.half_extents, b.density)
                    .iter()
                    .map(|q| (pose.apply(q), b.reflectivity)),
            );
        }
        let objects = spec
            .objects
            .iter()
            .map(|o| sample_box_surface(&mut rng, o.half_extents, o.density))
            .collect();
        Ok(Self { spec, statics, objects })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn extrinsic(&self) -> RigidTransform {
        self.spec.extrinsic.to_transform()
    }

    /// World pose of the LiDAR at frame `k`.
    pub fn ego_pose(&self, k: usize) -> RigidTransform {
        chain(&self.spec.ego.start, &self.spec.ego.step, k)
    }

    /// Exact motion from frame `k+1` into frame `k`; constant by construction.
    pub fn ego_motion(&self) -> RigidTransform {
        self.spec.ego.step.to_transform()
    }

    /// World pose of object `i` at frame `k`.
    pub fn object_pose(&self, i: usize, k: usize) -> RigidTransform {
        let o = &self.spec.objects[i];
        chain(&o.start, &o.step, k)
    }

    pub fn labels(&self, k: usize) -> Vec<FrameLabel> {
        let to_sensor = self.ego_pose(k).inverse();
        self.spec
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| FrameLabel {
                frame_id: k,
                track_id: o.track_id,
                object_pose: to_sensor.compose(&self.object_pose(i, k)),
                half_extents: Vector3::from(o.half_extents).add_scalar(self.spec.label_margin),
            })
            .collect()
    }

    /// Noise-free LiDAR-frame surface points at frame `k` with their
    /// reflectivity, statics first, within the LiDAR range.
    pub fn clean_points(&self, k: usize) -> Vec<(Vector3<f64>, f64)> {
        let to_sensor = self.ego_pose(k).inverse();
        let max = self.spec.max_range;
        let mut out: Vec<(Vector3<f64>, f64)> = self
            .statics
            .iter()
            .map(|(p, r)| (to_sensor.apply(p), *r))
            .filter(|(p, _)| p.norm() <= max)
            .collect();
        for (i, pts) in self.objects.iter().enumerate() {
            let to_sensor_obj = to_sensor.compose(&self.object_pose(i, k));
            let refl = self.spec.objects[i].reflectivity;
            out.extend(
                pts.iter()
                    .map(|p| (to_sensor_obj.apply(p), refl))
                    .filter(|(p, _)| p.norm() <= max),
            );
        }
        out
    }

    /// Noisy LiDAR cloud of frame `k`. Object points stay inside their
    /// labeled boxes.
    pub fn lidar_frame(&self, k: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(k as u64 + 1);
        let noise: Vec<Normal<f64>> = self
            .spec
            .noise_sigma
            .iter()
            .map(|&s| Normal::new(0.0, s).expect("sigma validated"))
            .collect();
        let jitter =
            |rng: &mut ChaCha8Rng| Vector3::new(noise[0].sample(rng), noise[1].sample(rng), noise[2].sample(rng));

        let to_sensor = self.ego_pose(k).inverse();
        let max = self.spec.max_range;
        let mut points = Vec::new();
        for (p, _) in &self.statics {
            let q = to_sensor.apply(p);
            if q.norm() <= max {
                points.push(Point::at(q + jitter(&mut rng)));
            }
        }
        // clamp well inside the labeled box so the containment test holds
        // after the round trip through the pose
        let keep = self.spec.label_margin * 0.5;
        for (i, pts) in self.objects.iter().enumerate() {
            let pose = to_sensor.compose(&self.object_pose(i, k));
            let inv = pose.inverse();
            let h = Vector3::from(self.spec.objects[i].half_extents).add_scalar(keep);
            for s in pts {
                let q = pose.apply(s);
                if q.norm() > max {
                    continue;
                }
                let mut local = inv.apply(&(q + jitter(&mut rng)));
                for a in 0..3 {
                    local[a] = local[a].clamp(-h[a], h[a]);
                }
                points.push(Point::at(pose.apply(&local)));
            }
        }
        PointCloud::new(points, k as u64)
    }

    /// Every surface sample in the radar frame at frame `k`, with its range
    /// rate from the one-frame displacement to `k+1`.
    pub fn radar_surface(&self, k: usize) -> Vec<SurfaceSample> {
        let ext = self.extrinsic();
        let to_radar = |j: usize| ext.compose(&self.ego_pose(j).inverse());
        let (now, next) = (to_radar(k), to_radar(k + 1));
        let dt = self.spec.frame_dt;
        let sample = |a: Vector3<f64>, b: Vector3<f64>, reflectivity: f64| SurfaceSample {
            position: a,
            radial_velocity: (b.norm() - a.norm()) / dt,
            reflectivity,
        };
        let mut out: Vec<SurfaceSample> = self
            .statics
            .iter()
            .map(|(p, r)| sample(now.apply(p), next.apply(p), *r))
            .collect();
        for (i, pts) in self.objects.iter().enumerate() {
            let a = now.compose(&self.object_pose(i, k));
            let b = next.compose(&self.object_pose(i, k + 1));
            let r = self.spec.objects[i].reflectivity;
            out.extend(pts.iter().map(|s| sample(a.apply(s), b.apply(s), r)));
        }
        out
    }

    /// Radar tensor for frame `k`: an echo peak of `amplitude × reflectivity`
    /// at the (Doppler, range, elevation, azimuth) cell of each reflecting
    /// surface sample, spread with a per-bin falloff, plus exponential noise.
    /// Overlapping echoes take the strongest. Values are rounded to `f32`.
    pub fn radar_frame(&self, radar: &RadarSimSpec, k: usize) -> Result<RadarFrame, SynthError> {
        radar.validate()?;
        let spec = radar.grid;
        let mut peaks: BTreeMap<usize, f64> = BTreeMap::new();
        let mut skipped = Vec::new();
        let zeros = RadarTensor4D::zeros(spec)?;
        for s in self.radar_surface(k) {
            if s.reflectivity == 0.0 {
                continue;
            }
            match (spec.doppler_bin(s.radial_velocity), spec.spatial_bin(&s.position)) {
                (Some(d), Some([r, e, a])) => {
                    let o = zeros.offset(d, r, e, a);
                    let amp = radar.amplitude * s.reflectivity;
                    let slot = peaks.entry(o).or_insert(0.0);
                    *slot = slot.max(amp);
                }
                _ => skipped.push(s.position),
            }
        }

        let dims = [
            spec.doppler_bins,
            spec.range_bins,
            spec.elevation_bins,
            spec.azimuth_bins,
        ];
        let mut echo = vec![0.0f64; spec.cell_count()];
        for (&o, &amp) in &peaks {
            let c = zeros.index_of(o);
            let lo: Vec<usize> = (0..4).map(|i| c[i].saturating_sub(radar.spread_bins[i])).collect();
            let hi: Vec<usize> = (0..4).map(|i| (c[i] + radar.spread_bins[i]).min(dims[i] - 1)).collect();
            for d in lo[0]..=hi[0] {
                for r in lo[1]..=hi[1] {
                    for e in lo[2]..=hi[2] {
                        for a in lo[3]..=hi[3] {
                            let dist = c[0].abs_diff(d) + c[1].abs_diff(r) + c[2].abs_diff(e) + c[3].abs_diff(a);
                            let v = amp * radar.falloff.powi(dist as i32);
                            let slot = &mut echo[zeros.offset(d, r, e, a)];
                            *slot = slot.max(v);
                        }
                    }
                }
            }
        }

        if radar.noise_mean > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(radar.rng_seed);
            rng.set_stream(k as u64);
            let exp = Exp::new(1.0 / radar.noise_mean).expect("noise mean validated");
            for v in &mut echo {
                *v += exp.sample(&mut rng);
            }
        }
        for v in &mut echo {
            *v = f64::from(*v as f32);
        }
        Ok(RadarFrame {
            tensor: RadarTensor4D::new(spec, echo)?,
            targets: peaks.keys().map(|&o| zeros.index_of(o)).collect(),
            skipped,
        })
    }

    /// Clean surface evidence per voxel of the doubled grid, in the radar
    /// frame at frame `k`: an ideal detector's score field at ground-truth
    /// resolution. A voxel scores the best of its samples, each worth its
    /// reflectivity times a weight that is 1 at the voxel center and falls
    /// linearly to 1/2 per axis at the faces. Taking the max, as the echo
    /// model does, keeps large surfaces from crowding out small ones; the
    /// weight keeps the field free of ties.
    pub fn oracle_score_field(&self, spec: &GridSpec, k: usize) -> Vec<f64> {
        let [nr, ne, na] = spec.doubled_dims();
        let mut field = vec![0.0_f64; nr * ne * na];
        for s in self.radar_surface(k) {
            if let Some([r, e, a]) = spec.doubled_bin(&s.position) {
                let u = spec.continuous_bin(&cartesian_to_spherical(&s.position));
                let w: f64 = u.iter().map(|x| 1.0 - ((2.0 * x).fract() - 0.5).abs()).product();
                let cell = &mut field[(r * ne + e) * na + a];
                *cell = cell.max(s.reflectivity * w);
            }
        }
        field
    }

    /// Frames, exact labels and exact ego motion; radar tensors when the
    /// scene has a radar section.
    pub fn sequence(&self) -> Result<SequenceData, SynthError> {
        let n = self.spec.frame_count;
        let frames = (0..n)
            .map(|k| {
                Ok(Frame {
                    cloud: self.lidar_frame(k),
                    labels: self.labels(k),
                    radar: match &self.spec.radar {
                        Some(radar) => Some(self.radar_frame(radar, k)?.tensor),
                        None => None,
                    },
                })
            })
            .collect::<Result<Vec<_>, SynthError>>()?;
        Ok(SequenceData {
            frames,
            ego_motion: (0..n - 1).map(|k| (k, self.ego_motion())).collect(),
            extrinsic: self.extrinsic(),
            stitch_window: self.spec.stitch_window,
        })
    }
}

/// `start ∘ stepᵏ`.
fn chain(start: &PoseSpec, step: &PoseSpec, k: usize) -> RigidTransform {
    let step = step.to_transform();
    (0..k).fold(start.to_transform(), |acc, _| acc.compose(&step))
}

pub fn generate_sequence(scene: &SceneSpec) -> Result<SequenceData, SynthError> {
    SyntheticScene::new(scene.clone())?.sequence()
}

pub fn generate_radar_tensor(scene: &SceneSpec, radar: &RadarSimSpec, frame: usize) -> Result<RadarFrame, SynthError> {
    SyntheticScene::new(scene.clone())?.radar_frame(radar, frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfar::{cfar, CfarConfig};
    use crate::gt::voxelize_gt;
    use crate::registration::{icp_register, IcpConfig};

    fn static_scene() -> SceneSpec {
        let mut s = SceneSpec::desk();
        s.objects.clear();
        s.noise_sigma = [0.0; 3];
        s.max_range = 1e3;
        s.radar = None;
        s.frame_count = 3;
        s
    }

    #[test]
    fn desk_scene_is_valid_and_deterministic() {
        let spec = SceneSpec::desk();
        let a = generate_sequence(&spec).unwrap();
        let b = generate_sequence(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
        assert_eq!(a.ego_motion.len(), 8);
        let mut other = spec.clone();
        other.seed += 1;
        assert_ne!(generate_sequence(&other).unwrap().frames[0].cloud, a.frames[0].cloud);
    }

    #[test]
    fn bundled_scene_file_matches_desk() {
        let text = include_str!("../examples/scenes/desk.toml");
        let mut parsed: SceneSpec = toml::from_str(text).unwrap();
        assert_eq!(parsed.radar.as_ref().unwrap().rng_seed, 7);
        parsed.radar.as_mut().unwrap().rng_seed = 0;
        assert_eq!(parsed, SceneSpec::desk());
    }

    #[test]
    fn bundled_scene_file_matches_pole_field() {
        let text = include_str!("../examples/scenes/poles.toml");
        let parsed: SceneSpec = toml::from_str(text).unwrap();
        assert_eq!(parsed, SceneSpec::pole_field());
    }

    #[test]
    fn invalid_scenes() {
        let mut s = SceneSpec::desk();
        s.frame_count = 0;
        assert!(generate_sequence(&s).is_err());
        let mut s = SceneSpec::desk();
        s.boxes[0].density = 0.0;
        assert!(generate_sequence(&s).is_err());
        let mut s = SceneSpec::desk();
        s.objects[1].track_id = 1;
        assert!(generate_sequence(&s).is_err());
        let mut s = SceneSpec::desk();
        s.radar.as_mut().unwrap().amplitude = 0.5;
        assert!(generate_sequence(&s).is_err());
    }

    #[test]
    fn stationary_static_scene_repeats() {
        let mut s = static_scene();
        s.ego.step = PoseSpec::default();
        let seq = generate_sequence(&s).unwrap();
        assert_eq!(seq.frames[0].cloud.points, seq.frames[2].cloud.points);
    }

    #[test]
    fn ego_motion_is_the_specified_step() {
        let scene = SyntheticScene::new(SceneSpec::desk()).unwrap();
        let seq = scene.sequence().unwrap();
        let step = SceneSpec::desk().ego.step.to_transform();
        for m in seq.ego_motion.values() {
            assert_eq!(*m, step);
        }
        // and agrees with the world poses
        let rel = scene.ego_pose(3).inverse().compose(&scene.ego_pose(4));
        assert!(rel.max_abs_diff(&step) < 1e-12);
    }

    #[test]
    fn labels_contain_their_points() {
        let scene = SyntheticScene::new(SceneSpec::desk()).unwrap();
        for k in 0..scene.spec().frame_count {
            let cloud = scene.lidar_frame(k);
            let labels = scene.labels(k);
            let to_sensor = scene.ego_pose(k).inverse();
            let n_static = scene
                .statics
                .iter()
                .filter(|(p, _)| to_sensor.apply(p).norm() <= scene.spec().max_range)
                .count();
            let object_points = &cloud.points[n_static..];
            assert!(!object_points.is_empty());
            for p in object_points {
                assert!(labels.iter().any(|l| l.contains(&p.position)));
            }
        }
    }

    #[test]
    fn icp_recovers_generated_motion() {
        let seq = generate_sequence(&static_scene()).unwrap();
        let truth = seq.ego_motion[&0];
        let res = icp_register(
            &seq.frames[1].cloud,
            &seq.frames[0].cloud,
            &IcpConfig::default(),
            &RigidTransform::identity(),
        )
        .unwrap();
        let (deg, m) = res.transform.distance_to(&truth);
        assert!(deg < 0.1 && m < 1e-3, "{deg}° {m} m");
    }

    fn point_target_scene() -> SceneSpec {
        SceneSpec {
            boxes: vec![BoxSpec {
                pose: PoseSpec::at(10.3, 0.4, 0.1),
                half_extents: [0.01; 3],
                density: 5e4,
                reflectivity: 1.0,
            }],
            radar: Some(RadarSimSpec {
                noise_mean: 0.0,
                spread_bins: [0; 4],
                ..RadarSimSpec::default()
            }),
            ..SceneSpec::default()
        }
    }

    #[test]
    fn single_target_single_cell() {
        let spec = point_target_scene();
        let radar = spec.radar.clone().unwrap();
        let frame = generate_radar_tensor(&spec, &radar, 0).unwrap();
        assert_eq!(frame.targets.len(), 1);
        let g = radar.grid;
        // 10.3 m ahead, static, stationary ego: zero Doppler
        let p = Vector3::new(10.3, 0.4, 0.1);
        let [r, e, a] = g.spatial_bin(&p).unwrap();
        assert_eq!(frame.targets[0], [g.doppler_bin(0.0).unwrap(), r, e, a]);
        let nonzero: Vec<usize> = (0..g.cell_count()).filter(|&o| frame.tensor.data()[o] != 0.0).collect();
        assert_eq!(nonzero, vec![frame.tensor.offset(8, r, e, a)]);
        assert_eq!(frame.tensor.data()[nonzero[0]], 20.0);
    }

    #[test]
    fn out_of_grid_targets_are_reported() {
        let mut spec = point_target_scene();
        spec.boxes[0].pose = PoseSpec::at(-10.0, 0.0, 0.0);
        let radar = spec.radar.clone().unwrap();
        let frame = generate_radar_tensor(&spec, &radar, 0).unwrap();
        assert!(frame.targets.is_empty());
        assert!(!frame.skipped.is_empty());
        assert!(frame.tensor.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn moving_target_doppler() {
        let mut spec = point_target_scene();
        // ego drives toward the target at 3 m/s
        spec.ego.step = PoseSpec::at(0.3, 0.0, 0.0);
        let radar = spec.radar.clone().unwrap();
        let frame = generate_radar_tensor(&spec, &radar, 0).unwrap();
        assert_eq!(frame.targets.len(), 1);
        assert_eq!(frame.targets[0][0], radar.grid.doppler_bin(-3.0).unwrap());
    }

    #[test]
    fn radar_lidar_coregistration() {
        let scene = SyntheticScene::new(SceneSpec::desk()).unwrap();
        let radar = scene.spec().radar.clone().unwrap();
        let ext = scene.extrinsic();
        let k = 2;
        let clean = scene.clean_points(k);
        let mut checked = 0;
        for (p, _) in clean.iter().step_by(10).take(300) {
            let single = PointCloud::from_positions([*p], 0);
            let grid = voxelize_gt(&single, &ext, &radar.grid).unwrap();
            let parent = radar.grid.spatial_bin(&ext.apply(p));
            let child = grid.occupied_indices().next();
            match (child, parent) {
                (Some(child), Some(par)) => {
                    assert_eq!(child.map(|i| i / 2), par);
                    checked += 1;
                }
                (None, None) => {}
                other => panic!("disagreement for {p:?}: {other:?}"),
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn noise_only_has_few_false_alarms() {
        let radar = RadarSimSpec::default();
        let empty = SceneSpec {
            radar: Some(radar.clone()),
            ..SceneSpec::default()
        };
        let cfg = CfarConfig::ca(2, 8, 15.0);
        let mut alarms = 0;
        let mut cells = 0;
        for seed in 0..4 {
            let r = RadarSimSpec {
                rng_seed: seed,
                ..radar.clone()
            };
            let frame = generate_radar_tensor(&empty, &r, 0).unwrap();
            assert!(frame.targets.is_empty());
            alarms += cfar(&frame.tensor, &cfg).unwrap().len();
            cells += frame.tensor.data().len();
        }
        assert!((alarms as f64) < 1e-3 * cells as f64, "{alarms} of {cells}");
    }

    #[test]
    fn strong_targets_detected_by_both_variants() {
        let spec = point_target_scene();
        let radar = RadarSimSpec {
            spread_bins: [0; 4],
            ..RadarSimSpec::default()
        };
        for seed in 0..10 {
            let r = RadarSimSpec {
                rng_seed: seed,
                ..radar.clone()
            };
            let frame = generate_radar_tensor(&spec, &r, 0).unwrap();
            let target = frame.targets[0];
            for cfg in [CfarConfig::default(), CfarConfig::os(2, 4, 6, 8.0)] {
                let dets = cfar(&frame.tensor, &cfg).unwrap();
                assert!(dets.indices().contains(&target), "seed {seed} {cfg:?}");
            }
        }
    }

    #[test]
    fn oracle_field_marks_reflective_voxels() {
        let scene = SyntheticScene::new(SceneSpec::desk()).unwrap();
        let grid = desk_radar_grid();
        let field = scene.oracle_score_field(&grid, 0);
        let [_, ne, na] = grid.doubled_dims();
        assert_eq!(field.len(), grid.doubled_dims().iter().product::<usize>());
        let occupied: std::collections::BTreeSet<usize> = scene
            .radar_surface(0)
            .iter()
            .filter(|s| s.reflectivity > 0.0)
            .filter_map(|s| grid.doubled_bin(&s.position))
            .map(|[r, e, a]| (r * ne + e) * na + a)
            .collect();
        for (i, v) in field.iter().enumerate() {
            if occupied.contains(&i) {
                assert!(*v > 0.125 && *v <= 1.0, "voxel {i}: {v}");
            } else {
                assert_eq!(*v, 0.0);
            }
        }
        let mut sorted = field.iter().filter(|v| **v > 0.0).collect::<Vec<_>>();
        let n = sorted.len();
        sorted.sort_by(|a, b| a.total_cmp(b));
        sorted.dedup();
        assert_eq!(sorted.len(), n, "ties in the oracle field");
    }
}
