use std::collections::BTreeMap;

use super::{FrameLabel, GtError, TrackId, TrackedObjectSequence};
use crate::cloud::PointCloud;
use crate::geometry::RigidTransform;

/// Partitions a frame into static points and per-object clouds. Boxes are
/// tested in ascending track id; the first box containing a point claims
/// it. Every labeled track gets an entry, possibly empty.
pub fn split_static_dynamic(cloud: &PointCloud, labels: &[FrameLabel]) -> (PointCloud, BTreeMap<TrackId, PointCloud>) {
    let mut sorted: Vec<&FrameLabel> = labels.iter().collect();
    sorted.sort_by_key(|l| l.track_id);
    let boxes: Vec<(TrackId, RigidTransform, [f64; 3])> = sorted
        .iter()
        .map(|l| {
            (
                l.track_id,
                l.object_pose.inverse(),
                [l.half_extents.x, l.half_extents.y, l.half_extents.z],
            )
        })
        .collect();

    let mut static_cloud = PointCloud::new(Vec::new(), cloud.frame_id);
    let mut dynamic: BTreeMap<TrackId, PointCloud> = boxes
        .iter()
        .map(|(id, _, _)| (*id, PointCloud::new(Vec::new(), cloud.frame_id)))
        .collect();
    for p in &cloud.points {
        let owner = boxes.iter().find(|(_, to_object, half)| {
            let local = to_object.apply(&p.position);
            (0..3).all(|i| local[i].abs() <= half[i])
        });
        match owner {
            Some((id, _, _)) => dynamic.get_mut(id).expect("track present").points.push(*p),
            None => static_cloud.points.push(*p),
        }
    }
    (static_cloud, dynamic)
}

/// Groups per-frame labels and object clouds into one sequence per track.
pub fn track_sequences<'a, I>(frames: I) -> BTreeMap<TrackId, TrackedObjectSequence>
where
    I: IntoIterator<Item = (usize, &'a [FrameLabel], &'a BTreeMap<TrackId, PointCloud>)>,
{
    let mut tracks: BTreeMap<TrackId, TrackedObjectSequence> = BTreeMap::new();
    for (frame, labels, clouds) in frames {
        for label in labels {
            let cloud = clouds.get(&label.track_id).cloned().unwrap_or_default();
            tracks
                .entry(label.track_id)
                .or_insert_with(|| TrackedObjectSequence::new(label.track_id))
                .entries
                .insert(frame, (*label, cloud));
        }
    }
    tracks
}

/// Static stitching around frame `k`: each neighbour `k ± i` (`i ≤ t`) is
/// carried into frame `k` through the chain of consecutive ego motions and
/// unioned with frame `k`. `clouds[j]` is the ground-removed static cloud of
/// frame `j`; the window stops at the ends of `clouds`.
pub fn stitch_static(
    clouds: &[PointCloud],
    ego_motion: &BTreeMap<usize, RigidTransform>,
    k: usize,
    t: usize,
) -> Result<PointCloud, GtError> {
    if k >= clouds.len() {
        return Err(GtError::FrameOutOfRange {
            frame: k,
            len: clouds.len(),
        });
    }
    let link = |j: usize| ego_motion.get(&j).ok_or(GtError::MissingPose { from: j, to: j + 1 });
    let mut out = PointCloud::new(clouds[k].points.clone(), k as u64);

    // frame k-i -> k: inverse(ego[k-1]) ∘ ... ∘ inverse(ego[k-i])
    let mut chain = RigidTransform::identity();
    for i in 1..=t.min(k) {
        chain = chain.compose(&link(k - i)?.inverse());
        out.extend_from(&clouds[k - i].transformed(&chain));
    }
    // frame k+i -> k: ego[k] ∘ ... ∘ ego[k+i-1]
    let mut chain = RigidTransform::identity();
    for i in 1..=t.min(clouds.len() - 1 - k) {
        chain = chain.compose(link(k + i - 1)?);
        out.extend_from(&clouds[k + i].transformed(&chain));
    }
    Ok(out)
}

/// Object stitching around frame `k`: neighbour observations are mapped into
/// the frame-`k` sensor frame by `pose_k ∘ inverse(pose_{k±i})`. Frames in
/// which the object was not observed are skipped; if it is absent at `k` the
/// result is empty.
pub fn stitch_dynamic(obj: &TrackedObjectSequence, k: usize, t: usize) -> PointCloud {
    let Some((label_k, cloud_k)) = obj.entries.get(&k) else {
        return PointCloud::new(Vec::new(), k as u64);
    };
    let mut out = PointCloud::new(cloud_k.points.clone(), k as u64);
    let lo = k.saturating_sub(t);
    for (&frame, (label, cloud)) in obj.entries.range(lo..=k.saturating_add(t)) {
        if frame == k {
            continue;
        }
        let to_k = label_k.object_pose.compose(&label.object_pose.inverse());
        out.extend_from(&cloud.transformed(&to_k));
    }
    out
}

/// Union of the stitched static cloud and every stitched object cloud.
pub fn merge_gt(static_stitched: &PointCloud, dynamic_stitched: &BTreeMap<TrackId, PointCloud>) -> PointCloud {
    let mut out = static_stitched.clone();
    for cloud in dynamic_stitched.values() {
        out.extend_from(cloud);
    }
    out
}
