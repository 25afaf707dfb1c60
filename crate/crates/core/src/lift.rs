//! Global scene assembly: split each lifted frame into background and
//! (visible-surface) foreground, and fuse the static background over time.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::raster::{check_dims, mask_pointmap, BinaryMask, PointMap};

pub const DEFAULT_CONF_MIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFrame {
    pub index: usize,
    pub pointmap: PointMap,
    pub mask: BinaryMask,
}

impl GlobalFrame {
    pub fn new(index: usize, pointmap: PointMap, mask: BinaryMask) -> Result<Self> {
        check_dims("global mask", pointmap.dims(), mask.dims())?;
        Ok(Self { index, pointmap, mask })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneLift {
    pub background: PointCloud,
    pub foreground_per_frame: Vec<PointCloud>,
}

impl SceneLift {
    pub fn frame_count(&self) -> usize {
        self.foreground_per_frame.len()
    }

    /// Frames whose foreground came out empty.
    pub fn empty_foreground_frames(&self) -> Vec<usize> {
        self.foreground_per_frame.iter().enumerate().filter(|(_, c)| c.is_empty()).map(|(t, _)| t).collect()
    }
}

/// `(background, foreground)` of one frame, both confidence-filtered.
pub fn split_frame(frame: &GlobalFrame, conf_min: f64) -> Result<(PointCloud, PointCloud)> {
    let bg = mask_pointmap(&frame.pointmap, &frame.mask, false, conf_min)?;
    let fg = mask_pointmap(&frame.pointmap, &frame.mask, true, conf_min)?;
    Ok((bg, fg))
}

fn voxel_key(p: &crate::camera::Vec3, voxel: f64) -> (i64, i64, i64) {
    ((p.x / voxel).floor() as i64, (p.y / voxel).floor() as i64, (p.z / voxel).floor() as i64)
}

/// Union of background points over frames in order. With `voxel > 0` only
/// the first point seen in each voxel cell is kept.
pub fn fuse_background(frames: &[GlobalFrame], conf_min: f64, voxel: f64) -> Result<PointCloud> {
    if frames.is_empty() {
        return Err(Error::Empty("fuse_background needs at least one frame"));
    }
    let parts =
        frames.par_iter().map(|f| mask_pointmap(&f.pointmap, &f.mask, false, conf_min)).collect::<Result<Vec<_>>>()?;
    fuse_clouds(&parts, voxel)
}

pub(crate) fn fuse_clouds(parts: &[PointCloud], voxel: f64) -> Result<PointCloud> {
    if !(voxel >= 0.0) || !voxel.is_finite() {
        return Err(Error::InvalidArgument(format!("voxel size must be >= 0, got {voxel}")));
    }
    let mut out = PointCloud::new();
    if voxel == 0.0 {
        for p in parts {
            out.extend(p);
        }
        return Ok(out);
    }
    let mut seen = HashSet::new();
    for part in parts {
        if out.is_empty() {
            out = PointCloud::with_attributes(part.colors().is_some(), part.confidences().is_some(), 0);
        }
        for (i, p) in part.positions().iter().enumerate() {
            if seen.insert(voxel_key(p, voxel)) {
                out.push_from(part, i);
            }
        }
    }
    Ok(out)
}

pub fn build_scene_lift(frames: &[GlobalFrame], conf_min: f64, voxel: f64) -> Result<SceneLift> {
    if frames.is_empty() {
        return Err(Error::Empty("scene lift needs at least one frame"));
    }
    let splits = frames.par_iter().map(|f| split_frame(f, conf_min)).collect::<Result<Vec<_>>>()?;
    let (bgs, fgs): (Vec<_>, Vec<_>) = splits.into_iter().unzip();
    let background = fuse_clouds(&bgs, voxel)?;
    let empty: Vec<usize> = fgs.iter().enumerate().filter(|(_, c)| c.is_empty()).map(|(t, _)| t).collect();
    if !empty.is_empty() {
        log::info!("frames with empty foreground: {empty:?}");
    }
    Ok(SceneLift { background, foreground_per_frame: fgs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Vec3;
    use crate::raster::INVALID_POINT;
    use std::collections::BTreeSet;

    fn frame(w: usize, h: usize, seed: usize, conf: f64) -> GlobalFrame {
        let pts = (0..w * h)
            .map(|i| {
                if (i * 7 + seed).is_multiple_of(11) {
                    INVALID_POINT
                } else {
                    Vec3::new((i % w) as f64 * 0.1, (i / w) as f64 * 0.1, 2.0 + ((i + seed) % 5) as f64 * 0.05)
                }
            })
            .collect();
        let pm = PointMap::new(w, h, pts, Some(vec![conf; w * h])).unwrap();
        let mask = BinaryMask::new(w, h, (0..w * h).map(|i| (i + seed).is_multiple_of(3)).collect()).unwrap();
        GlobalFrame::new(seed, pm, mask).unwrap()
    }

    #[test]
    fn all_foreground_leaves_no_background() {
        let mut f = frame(6, 4, 0, 1.0);
        f.mask = BinaryMask::filled(6, 4, true).unwrap();
        let (bg, fg) = split_frame(&f, 0.0).unwrap();
        assert!(bg.is_empty());
        assert_eq!(fg.len(), f.pointmap.valid_count());
    }

    #[test]
    fn split_counts_partition_finite_pixels() {
        let f = frame(13, 7, 2, 1.0);
        let (bg, fg) = split_frame(&f, 0.0).unwrap();
        let finite = f.pointmap.points().iter().filter(|p| p.x.is_finite()).count();
        assert_eq!(bg.len() + fg.len(), finite);
    }

    #[test]
    fn confidence_filter_can_empty_both() {
        let f = frame(6, 4, 1, 0.5);
        let (bg, fg) = split_frame(&f, 1.0).unwrap();
        assert!(bg.is_empty() && fg.is_empty());
    }

    #[test]
    fn single_frame_no_voxel_equals_split() {
        let f = frame(8, 5, 3, 1.0);
        let (bg, _) = split_frame(&f, 0.1).unwrap();
        assert_eq!(fuse_background(std::slice::from_ref(&f), 0.1, 0.0).unwrap(), bg);
    }

    #[test]
    fn identical_frames_dedup_to_one() {
        let f = frame(8, 5, 3, 1.0);
        let one = fuse_background(std::slice::from_ref(&f), 0.0, 0.01).unwrap();
        let two = fuse_background(&[f.clone(), f], 0.0, 0.01).unwrap();
        assert_eq!(one.len(), two.len());
    }

    #[test]
    fn empty_inputs() {
        assert!(fuse_background(&[], 0.0, 0.0).is_err());
        assert!(build_scene_lift(&[], 0.0, 0.0).is_err());
        let f = frame(3, 3, 0, 1.0);
        assert!(fuse_background(&[f], 0.0, -1.0).is_err());
    }

    #[test]
    fn voxel_occupancy_matches_histogram() {
        // static room: several jittered copies of the same grid
        let frames: Vec<GlobalFrame> = (0..10).map(|s| frame(17, 9, s, 1.0)).collect();
        let h = 0.13;
        let fused = fuse_background(&frames, 0.0, h).unwrap();
        // brute-force histogram over every input background point
        let mut truth = BTreeSet::new();
        for f in &frames {
            for (i, p) in f.pointmap.points().iter().enumerate() {
                if p.x.is_finite() && !f.mask.values()[i] {
                    truth.insert(((p.x / h).floor() as i64, (p.y / h).floor() as i64, (p.z / h).floor() as i64));
                }
            }
        }
        let got: BTreeSet<_> = fused
            .positions()
            .iter()
            .map(|p| ((p.x / h).floor() as i64, (p.y / h).floor() as i64, (p.z / h).floor() as i64))
            .collect();
        assert_eq!(got, truth);
        assert_eq!(fused.len(), truth.len());
        // occupancy does not depend on frame order
        let rev: Vec<GlobalFrame> = frames.iter().rev().cloned().collect();
        let fused_rev = fuse_background(&rev, 0.0, h).unwrap();
        let got_rev: BTreeSet<_> = fused_rev
            .positions()
            .iter()
            .map(|p| ((p.x / h).floor() as i64, (p.y / h).floor() as i64, (p.z / h).floor() as i64))
            .collect();
        assert_eq!(got_rev, truth);
    }

    #[test]
    fn lift_is_deterministic_and_records_empty_frames() {
        let mut frames: Vec<GlobalFrame> = (0..4).map(|s| frame(9, 6, s, 1.0)).collect();
        frames[2].mask = BinaryMask::filled(9, 6, false).unwrap();
        let a = build_scene_lift(&frames, 0.1, 0.0).unwrap();
        let b = build_scene_lift(&frames, 0.1, 0.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frame_count(), 4);
        assert_eq!(a.empty_foreground_frames(), vec![2]);
    }
}
