//! File formats. All binary formats are little-endian.
//!
//! | magic  | contents                                   |
//! |--------|--------------------------------------------|
//! | `RDT4` | [`RadarTensor4D`](crate::RadarTensor4D), f32 payload |
//! | `PCB1` | [`PointCloud`](crate::PointCloud), f32 x, y, z, intensity |
//! | `OCG1` | [`OccupancyGrid3D`](crate::OccupancyGrid3D), one byte per voxel |
//!
//! Tensor header: magic, `u32` version, `u32` D, R, E, A, then the grid
//! resolutions and offsets as `f64` (doppler, range, elevation, azimuth
//! resolution, range min, elevation center, azimuth center) and the payload
//! in azimuth-fastest order. The occupancy grid header is identical; its
//! payload covers the doubled (2R, 2E, 2A) grid.
//!
//! In memory everything is `f64`, so the binary round trip is exact for
//! values representable as `f32`.
//!
//! Text formats are CSV with a header row. Floats are written with 17
//! significant digits.
//!
//! ```text
//! x,y,z,intensity
//! frame_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz
//! frame_id,track_id,r00,...,tz,hx,hy,hz
//! ```

mod binary;
mod sequence;
mod text;

use std::path::Path;

use thiserror::Error;

pub use binary::{read_cloud, read_grid, read_tensor, write_cloud, write_grid, write_tensor, FORMAT_VERSION};
pub use sequence::{read_sequence, write_sequence, SequenceMeta};
pub use text::{
    read_cloud_csv, read_labels, read_poses, write_cloud_csv, write_labels, write_poses, ORTHONORMAL_TOLERANCE,
};

use crate::cloud::PointCloud;
use crate::grid::{OccupancyGrid3D, RadarTensor4D};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic at byte 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {found} at byte 4 (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("truncated {what}: expected {expected} bytes, got {actual}")]
    Truncated {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{what}: {extra} unexpected trailing bytes after byte {at}")]
    TrailingBytes {
        what: &'static str,
        at: usize,
        extra: usize,
    },
    #[error("invalid data at byte {at}: {message}")]
    InvalidBinary { at: usize, message: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Kind of a binary file, from its first four bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Tensor,
    Cloud,
    Grid,
    /// Anything else; text formats land here.
    Other,
}

pub fn sniff(bytes: &[u8]) -> FileKind {
    match bytes.get(..4) {
        Some(b"RDT4") => FileKind::Tensor,
        Some(b"PCB1") => FileKind::Cloud,
        Some(b"OCG1") => FileKind::Grid,
        _ => FileKind::Other,
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|e| IoError::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

pub fn load_tensor(path: &Path) -> Result<RadarTensor4D, IoError> {
    read_tensor(&read_file(path)?)
}

pub fn save_tensor(path: &Path, tensor: &RadarTensor4D) -> Result<(), IoError> {
    write_file(path, &write_tensor(tensor))
}

pub fn load_grid(path: &Path) -> Result<OccupancyGrid3D, IoError> {
    read_grid(&read_file(path)?)
}

pub fn save_grid(path: &Path, grid: &OccupancyGrid3D) -> Result<(), IoError> {
    write_file(path, &write_grid(grid))
}

/// Binary or CSV cloud, chosen by content.
pub fn load_cloud(path: &Path) -> Result<PointCloud, IoError> {
    let bytes = read_file(path)?;
    match sniff(&bytes) {
        FileKind::Cloud => read_cloud(&bytes),
        _ => read_cloud_csv(bytes.as_slice()),
    }
}

/// CSV when the extension is `.csv`, binary otherwise.
pub fn save_cloud(path: &Path, cloud: &PointCloud) -> Result<(), IoError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let mut buf = Vec::new();
        write_cloud_csv(&mut buf, cloud).map_err(|e| IoError::io(path, e))?;
        write_file(path, &buf)
    } else {
        write_file(path, &write_cloud(cloud))
    }
}
