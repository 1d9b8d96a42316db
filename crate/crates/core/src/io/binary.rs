use super::IoError;
use crate::cloud::{Point, PointCloud};
use crate::grid::{GridSpec, OccupancyGrid3D, RadarTensor4D};

pub const FORMAT_VERSION: u32 = 1;

const TENSOR_MAGIC: &[u8; 4] = b"RDT4";
const CLOUD_MAGIC: &[u8; 4] = b"PCB1";
const GRID_MAGIC: &[u8; 4] = b"OCG1";
/// magic + version + 4 dims + 7 spec scalars
const SPEC_HEADER_LEN: usize = 4 + 4 + 4 * 4 + 7 * 8;
const CLOUD_HEADER_LEN: usize = 4 + 8;
const CLOUD_RECORD_LEN: usize = 16;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
    expected: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], what: &'static str, header_len: usize) -> Self {
        Self {
            bytes,
            pos: 0,
            what,
            expected: header_len,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.bytes.len() {
            return Err(IoError::Truncated {
                what: self.what,
                expected: self.expected.max(self.pos + n),
                actual: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<(), IoError> {
        let found = self.take(4)?;
        if found != expected {
            return Err(IoError::BadMagic {
                expected: String::from_utf8_lossy(expected).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn version(&mut self) -> Result<(), IoError> {
        let found = self.u32()?;
        if found != FORMAT_VERSION {
            return Err(IoError::UnsupportedVersion {
                found,
                expected: FORMAT_VERSION,
            });
        }
        Ok(())
    }

    /// Checks the remaining length against a payload of `len` bytes.
    fn payload(&mut self, len: usize) -> Result<&'a [u8], IoError> {
        let expected = self.pos + len;
        self.expected = expected;
        if self.bytes.len() > expected {
            return Err(IoError::TrailingBytes {
                what: self.what,
                at: expected,
                extra: self.bytes.len() - expected,
            });
        }
        self.take(len)
    }
}

fn put_spec(out: &mut Vec<u8>, magic: &[u8; 4], spec: &GridSpec) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for d in [
        spec.doppler_bins,
        spec.range_bins,
        spec.elevation_bins,
        spec.azimuth_bins,
    ] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in [
        spec.doppler_res,
        spec.range_res,
        spec.elevation_res,
        spec.azimuth_res,
        spec.range_min,
        spec.elevation_center,
        spec.azimuth_center,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn get_spec(r: &mut Reader, magic: &[u8; 4]) -> Result<GridSpec, IoError> {
    r.magic(magic)?;
    r.version()?;
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let mut v = [0.0; 7];
    for x in &mut v {
        *x = r.f64()?;
    }
    let spec = GridSpec {
        doppler_bins: dims[0],
        range_bins: dims[1],
        elevation_bins: dims[2],
        azimuth_bins: dims[3],
        doppler_res: v[0],
        range_res: v[1],
        elevation_res: v[2],
        azimuth_res: v[3],
        range_min: v[4],
        elevation_center: v[5],
        azimuth_center: v[6],
    };
    spec.validate().map_err(|e| IoError::InvalidBinary {
        at: 8,
        message: e.to_string(),
    })?;
    Ok(spec)
}

/// Values are stored as `f32`.
pub fn write_tensor(tensor: &RadarTensor4D) -> Vec<u8> {
    let mut out = Vec::with_capacity(SPEC_HEADER_LEN + 4 * tensor.data().len());
    put_spec(&mut out, TENSOR_MAGIC, tensor.spec());
    for v in tensor.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn read_tensor(bytes: &[u8]) -> Result<RadarTensor4D, IoError> {
    let mut r = Reader::new(bytes, "tensor file", SPEC_HEADER_LEN);
    let spec = get_spec(&mut r, TENSOR_MAGIC)?;
    let start = r.pos;
    let payload = r.payload(4 * spec.cell_count())?;
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    if let Some(i) = data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(IoError::InvalidBinary {
            at: start + 4 * i,
            message: format!("intensity {} is not finite and non-negative", data[i]),
        });
    }
    RadarTensor4D::new(spec, data).map_err(|e| IoError::InvalidBinary {
        at: start,
        message: e.to_string(),
    })
}

/// Positions and intensities are stored as `f32`; the frame id is not kept.
pub fn write_cloud(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(CLOUD_HEADER_LEN + CLOUD_RECORD_LEN * cloud.len());
    out.extend_from_slice(CLOUD_MAGIC);
    out.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    for p in &cloud.points {
        for v in [p.position.x, p.position.y, p.position.z, p.intensity] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_cloud(bytes: &[u8]) -> Result<PointCloud, IoError> {
    let mut r = Reader::new(bytes, "cloud file", CLOUD_HEADER_LEN);
    r.magic(CLOUD_MAGIC)?;
    let count = r.u64()?;
    let len = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(CLOUD_RECORD_LEN))
        .ok_or_else(|| IoError::InvalidBinary {
            at: 4,
            message: format!("point count {count} is too large"),
        })?;
    let payload = r.payload(len)?;
    let points = payload
        .chunks_exact(CLOUD_RECORD_LEN)
        .map(|rec| {
            let f = |i: usize| f64::from(f32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().expect("4 bytes")));
            Point::new(f(0), f(1), f(2), f(3))
        })
        .collect();
    Ok(PointCloud::new(points, 0))
}

/// Header carries the parent tensor spec; payload is the doubled grid.
pub fn write_grid(grid: &OccupancyGrid3D) -> Vec<u8> {
    let mut out = Vec::with_capacity(SPEC_HEADER_LEN + grid.cells().len());
    put_spec(&mut out, GRID_MAGIC, grid.spec());
    out.extend(grid.cells().iter().map(|&c| u8::from(c)));
    out
}

pub fn read_grid(bytes: &[u8]) -> Result<OccupancyGrid3D, IoError> {
    let mut r = Reader::new(bytes, "grid file", SPEC_HEADER_LEN);
    let spec = get_spec(&mut r, GRID_MAGIC)?;
    let start = r.pos;
    let n: usize = spec.doubled_dims().iter().product();
    let payload = r.payload(n)?;
    if let Some(i) = payload.iter().position(|b| *b > 1) {
        return Err(IoError::InvalidBinary {
            at: start + i,
            message: format!("voxel byte {} is neither 0 nor 1", payload[i]),
        });
    }
    OccupancyGrid3D::from_cells(spec, payload.iter().map(|b| *b == 1).collect()).map_err(|e| IoError::InvalidBinary {
        at: start,
        message: e.to_string(),
    })
}
