use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_file};
use crate::camera::{Camera, CameraIntrinsics, Mat3, RigidPose, Vec3};
use crate::error::FormatError;
use crate::trajectory::{CameraKeyframe, Trajectory};

/// Orthonormality tolerance applied to rotations read from disk.
pub const LOAD_ROTATION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    /// World-to-camera rotation, row-major.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl PoseRecord {
    pub fn from_pose(p: &RigidPose) -> Self {
        Self {
            rotation: p.rotation_row_major(),
            translation: [p.translation().x, p.translation().y, p.translation().z],
        }
    }

    /// Rotations must be orthonormal within [`LOAD_ROTATION_TOL`].
    pub fn to_pose(&self) -> Result<RigidPose, FormatError> {
        let r = Mat3::from_row_slice(&self.rotation);
        let tr = Vec3::from_column_slice(&self.translation);
        RigidPose::with_tolerance(r, tr, LOAD_ROTATION_TOL).map_err(|e| traj_err(e.to_string()))
    }
}

/// One camera in the trajectory schema: intrinsics plus a pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub intrinsics: CameraIntrinsics,
    pub pose: PoseRecord,
}

impl CameraRecord {
    pub fn from_camera(c: &Camera) -> Self {
        Self { intrinsics: c.intrinsics, pose: PoseRecord::from_pose(&c.pose) }
    }

    pub fn to_camera(&self) -> Result<Camera, FormatError> {
        self.intrinsics.validate().map_err(|e| traj_err(e.to_string()))?;
        Ok(Camera::new(self.intrinsics, self.pose.to_pose()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeRecord {
    pub frame: usize,
    pub camera: CameraRecord,
}

/// Input of keyframe interpolation: output length plus the keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeFile {
    pub frame_count: usize,
    pub keyframes: Vec<KeyframeRecord>,
}

impl KeyframeFile {
    pub fn keyframes(&self) -> Result<Vec<CameraKeyframe>, FormatError> {
        self.keyframes.iter().map(|k| Ok(CameraKeyframe { frame: k.frame, camera: k.camera.to_camera()? })).collect()
    }
}

/// Serialized form of a [`Trajectory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub frame_count: usize,
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<PoseRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_warp: Option<Vec<usize>>,
}

fn traj_err(msg: impl Into<String>) -> FormatError {
    FormatError::Trajectory(msg.into())
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            frame_count: traj.len(),
            intrinsics: *traj.intrinsics(),
            frames: traj.poses().iter().map(PoseRecord::from_pose).collect(),
            time_warp: traj.time_warp().map(|w| w.to_vec()),
        }
    }

    /// Validates and converts. Rotations must be orthonormal within `1e-4`.
    pub fn into_trajectory(self) -> Result<Trajectory, FormatError> {
        if self.frames.len() != self.frame_count {
            return Err(traj_err(format!(
                "frame_count is {} but {} frames are listed",
                self.frame_count,
                self.frames.len()
            )));
        }
        if self.frame_count == 0 {
            return Err(traj_err("trajectory has no frames"));
        }
        self.intrinsics.validate().map_err(|e| traj_err(e.to_string()))?;
        let mut poses = Vec::with_capacity(self.frames.len());
        for (t, f) in self.frames.iter().enumerate() {
            let pose = f.to_pose().map_err(|e| traj_err(format!("frame {t}: {e}")))?;
            poses.push(pose);
        }
        Trajectory::new(self.intrinsics, poses, self.time_warp).map_err(|e| traj_err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trajectory serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, FormatError> {
    let bytes = read_file(path.as_ref())?;
    let text = std::str::from_utf8(&bytes).map_err(|_| traj_err("file is not UTF-8"))?;
    TrajectoryFile::from_json(text)?.into_trajectory()
}

pub fn write_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_file(path.as_ref(), TrajectoryFile::from_trajectory(traj).to_json().as_bytes())
}
