use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::Vector3;

use super::IoError;
use crate::cloud::{Point, PointCloud};
use crate::geometry::RigidTransform;
use crate::gt::FrameLabel;

/// Rotations read from text must be orthonormal to this tolerance.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

const CLOUD_HEADER: [&str; 4] = ["x", "y", "z", "intensity"];
const POSE_COLUMNS: [&str; 12] = [
    "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22", "tx", "ty", "tz",
];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_row<W: Write>(w: &mut W, fields: impl IntoIterator<Item = String>) -> std::io::Result<()> {
    let row: Vec<String> = fields.into_iter().collect();
    writeln!(w, "{}", row.join(","))
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

/// Parsed rows with their 1-based line numbers, after checking the header.
fn rows<R: Read>(r: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, IoError> {
    let mut reader = csv_reader(r);
    let found = reader.headers().map_err(|e| csv_error(1, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(IoError::Parse {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(i as u64 + 2, e))?;
        let line = rec.position().map_or(i as u64 + 2, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn csv_error(line: u64, e: csv::Error) -> IoError {
    let line = e.position().map_or(line, |p| p.line());
    IoError::Parse {
        line,
        message: e.to_string(),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, line: u64, col: usize, name: &str) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(col).unwrap_or("");
    raw.parse().map_err(|e| IoError::Parse {
        line,
        message: format!("column {name}: cannot parse {raw:?}: {e}"),
    })
}

fn floats<const N: usize>(
    rec: &csv::StringRecord,
    line: u64,
    start: usize,
    names: &[&str],
) -> Result<[f64; N], IoError> {
    let mut out = [0.0; N];
    for (i, v) in out.iter_mut().enumerate() {
        *v = field(rec, line, start + i, names[i])?;
    }
    Ok(out)
}

fn pose(values: &[f64; 12], line: u64) -> Result<RigidTransform, IoError> {
    RigidTransform::from_row_major(values, ORTHONORMAL_TOLERANCE).map_err(|e| IoError::Parse {
        line,
        message: e.to_string(),
    })
}

pub fn write_cloud_csv<W: Write>(mut w: W, cloud: &PointCloud) -> std::io::Result<()> {
    writeln!(w, "{}", CLOUD_HEADER.join(","))?;
    for p in &cloud.points {
        write_row(&mut w, [p.position.x, p.position.y, p.position.z, p.intensity].map(fmt))?;
    }
    Ok(())
}

pub fn read_cloud_csv<R: Read>(r: R) -> Result<PointCloud, IoError> {
    let points = rows(r, &CLOUD_HEADER)?
        .iter()
        .map(|(line, rec)| {
            let [x, y, z, i] = floats::<4>(rec, *line, 0, &CLOUD_HEADER)?;
            Ok(Point::new(x, y, z, i))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(PointCloud::new(points, 0))
}

fn pose_header() -> Vec<&'static str> {
    std::iter::once("frame_id").chain(POSE_COLUMNS).collect()
}

fn label_header() -> Vec<&'static str> {
    ["frame_id", "track_id"]
        .into_iter()
        .chain(POSE_COLUMNS)
        .chain(["hx", "hy", "hz"])
        .collect()
}

pub fn write_poses<W: Write>(mut w: W, poses: &BTreeMap<usize, RigidTransform>) -> std::io::Result<()> {
    writeln!(w, "{}", pose_header().join(","))?;
    for (frame, t) in poses {
        write_row(
            &mut w,
            std::iter::once(frame.to_string()).chain(t.to_row_major().map(fmt)),
        )?;
    }
    Ok(())
}

/// Rejects duplicate frame ids and rotations that are not orthonormal.
pub fn read_poses<R: Read>(r: R) -> Result<BTreeMap<usize, RigidTransform>, IoError> {
    let mut out = BTreeMap::new();
    for (line, rec) in rows(r, &pose_header())? {
        let frame: usize = field(&rec, line, 0, "frame_id")?;
        let t = pose(&floats::<12>(&rec, line, 1, &POSE_COLUMNS)?, line)?;
        if out.insert(frame, t).is_some() {
            return Err(IoError::Parse {
                line,
                message: format!("duplicate pose for frame {frame}"),
            });
        }
    }
    Ok(out)
}

pub fn write_labels<W: Write>(mut w: W, labels: &[FrameLabel]) -> std::io::Result<()> {
    writeln!(w, "{}", label_header().join(","))?;
    for l in labels {
        write_row(
            &mut w,
            [l.frame_id.to_string(), l.track_id.to_string()]
                .into_iter()
                .chain(l.object_pose.to_row_major().map(fmt))
                .chain(l.half_extents.iter().map(|h| fmt(*h))),
        )?;
    }
    Ok(())
}

pub fn read_labels<R: Read>(r: R) -> Result<Vec<FrameLabel>, IoError> {
    rows(r, &label_header())?
        .iter()
        .map(|(line, rec)| {
            let label = FrameLabel {
                frame_id: field(rec, *line, 0, "frame_id")?,
                track_id: field(rec, *line, 1, "track_id")?,
                object_pose: pose(&floats::<12>(rec, *line, 2, &POSE_COLUMNS)?, *line)?,
                half_extents: Vector3::from(floats::<3>(rec, *line, 14, &["hx", "hy", "hz"])?),
            };
            label.validate().map_err(|e| IoError::Parse {
                line: *line,
                message: e.to_string(),
            })?;
            Ok(label)
        })
        .collect()
}
