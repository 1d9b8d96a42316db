//! A recorded sequence as a directory:
//!
//! ```text
//! sequence.toml      frame_count, stitch_window
//! extrinsic.csv      one pose row (frame_id 0), LiDAR to radar
//! poses.csv          ego motion; row k maps frame k+1 into frame k
//! labels.csv         object labels of every frame
//! lidar/000000.pcb   one cloud per frame
//! radar/000000.rdt   radar tensor, for frames that have one
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    load_cloud, load_tensor, read_file, read_labels, read_poses, save_tensor, write_cloud, write_file, write_labels,
    write_poses, IoError,
};
use crate::geometry::RigidTransform;
use crate::gt::{Frame, SequenceData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub frame_count: usize,
    pub stitch_window: usize,
}

fn frame_file(dir: &Path, sub: &str, k: usize, ext: &str) -> PathBuf {
    dir.join(sub).join(format!("{k:06}.{ext}"))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>, path: &Path) -> Result<Vec<u8>, IoError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| IoError::io(path, e))?;
    Ok(buf)
}

/// Writes `seq` under `dir`, creating it if needed.
pub fn write_sequence(dir: &Path, seq: &SequenceData) -> Result<(), IoError> {
    for sub in ["lidar", "radar"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| IoError::io(&p, e))?;
    }
    let meta = SequenceMeta {
        frame_count: seq.len(),
        stitch_window: seq.stitch_window,
    };
    let meta_text = toml::to_string(&meta).map_err(|e| IoError::InvalidSequence(e.to_string()))?;
    write_file(&dir.join("sequence.toml"), meta_text.as_bytes())?;

    let ext_path = dir.join("extrinsic.csv");
    let ext = BTreeMap::from([(0, seq.extrinsic)]);
    write_file(&ext_path, &csv_bytes(|b| write_poses(b, &ext), &ext_path)?)?;
    let pose_path = dir.join("poses.csv");
    write_file(&pose_path, &csv_bytes(|b| write_poses(b, &seq.ego_motion), &pose_path)?)?;
    let labels: Vec<_> = seq.frames.iter().flat_map(|f| f.labels.iter().copied()).collect();
    let label_path = dir.join("labels.csv");
    write_file(&label_path, &csv_bytes(|b| write_labels(b, &labels), &label_path)?)?;

    for (k, frame) in seq.frames.iter().enumerate() {
        write_file(&frame_file(dir, "lidar", k, "pcb"), &write_cloud(&frame.cloud))?;
        if let Some(t) = &frame.radar {
            save_tensor(&frame_file(dir, "radar", k, "rdt"), t)?;
        }
    }
    Ok(())
}

pub fn read_sequence(dir: &Path) -> Result<SequenceData, IoError> {
    let meta_path = dir.join("sequence.toml");
    let meta_text = String::from_utf8_lossy(&read_file(&meta_path)?).into_owned();
    let meta: SequenceMeta =
        toml::from_str(&meta_text).map_err(|e| IoError::InvalidSequence(format!("{}: {e}", meta_path.display())))?;

    let ext = read_poses(read_file(&dir.join("extrinsic.csv"))?.as_slice())?;
    let extrinsic: RigidTransform = match ext.into_iter().collect::<Vec<_>>().as_slice() {
        [(_, t)] => *t,
        rows => {
            return Err(IoError::InvalidSequence(format!(
                "extrinsic.csv must hold exactly one pose, found {}",
                rows.len()
            )))
        }
    };
    let ego_motion = read_poses(read_file(&dir.join("poses.csv"))?.as_slice())?;

    let mut frames = Vec::with_capacity(meta.frame_count);
    for k in 0..meta.frame_count {
        let mut cloud = load_cloud(&frame_file(dir, "lidar", k, "pcb"))?;
        cloud.frame_id = k as u64;
        let radar_path = frame_file(dir, "radar", k, "rdt");
        let radar = if radar_path.exists() {
            Some(load_tensor(&radar_path)?)
        } else {
            None
        };
        frames.push(Frame {
            cloud,
            labels: Vec::new(),
            radar,
        });
    }
    for label in read_labels(read_file(&dir.join("labels.csv"))?.as_slice())? {
        let frame = frames.get_mut(label.frame_id).ok_or_else(|| {
            IoError::InvalidSequence(format!(
                "label for track {} refers to frame {} of {}",
                label.track_id, label.frame_id, meta.frame_count
            ))
        })?;
        frame.labels.push(label);
    }
    Ok(SequenceData {
        frames,
        ego_motion,
        extrinsic,
        stitch_window: meta.stitch_window,
    })
}
