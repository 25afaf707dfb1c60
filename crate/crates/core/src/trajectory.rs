//! Target camera trajectories: orbits, keyframe paths and bullet-time warps.
//!
//! Angles are degrees at the API surface and radians inside. Orbits use a
//! `+y`-down world (the camera convention of [`crate::camera`]): yaw turns
//! about the `y` axis, yaw 0 places the camera on the `-z` side of the centre
//! looking along `+z`, and positive pitch raises the camera (towards `-y`).

use std::ops::Range;

use nalgebra::{Rotation3, UnitQuaternion};

use crate::camera::{Camera, CameraIntrinsics, Mat3, RigidPose, Vec3};
use crate::error::{Error, Result};

/// Camera poses for `T` output frames sharing one set of intrinsics, plus an
/// optional map from output frame to source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    intrinsics: CameraIntrinsics,
    poses: Vec<RigidPose>,
    time_warp: Option<Vec<usize>>,
}

impl Trajectory {
    pub fn new(intrinsics: CameraIntrinsics, poses: Vec<RigidPose>, time_warp: Option<Vec<usize>>) -> Result<Self> {
        intrinsics.validate()?;
        if poses.is_empty() {
            return Err(Error::Empty("trajectory poses"));
        }
        if let Some(w) = &time_warp {
            if w.len() != poses.len() {
                return Err(Error::InvalidArgument(format!(
                    "time warp has {} entries for {} frames",
                    w.len(),
                    poses.len()
                )));
            }
        }
        Ok(Self { intrinsics, poses, time_warp })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn poses(&self) -> &[RigidPose] {
        &self.poses
    }

    pub fn time_warp(&self) -> Option<&[usize]> {
        self.time_warp.as_deref()
    }

    pub fn camera(&self, t: usize) -> Camera {
        Camera::new(self.intrinsics, self.poses[t])
    }

    /// Source frame shown at output frame `t`.
    pub fn source_frame(&self, t: usize) -> usize {
        self.time_warp.as_ref().map_or(t, |w| w[t])
    }

    /// Checks the trajectory can be rendered against `source_frames` frames.
    pub fn check_source(&self, source_frames: usize) -> Result<()> {
        match &self.time_warp {
            None if self.len() != source_frames => {
                Err(Error::FrameCountMismatch { proxy: source_frames, trajectory: self.len() })
            }
            None => Ok(()),
            Some(w) => match w.iter().find(|i| **i >= source_frames) {
                Some(&bad) => Err(Error::FrameOutOfRange { index: bad, count: source_frames }),
                None => Ok(()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraKeyframe {
    pub frame: usize,
    pub camera: Camera,
}

/// Pose of a camera at `eye` looking at `target`.
///
/// `up` is the world direction that becomes the camera `+y` axis after
/// orthogonalisation (image rows grow along it). With the `+y`-down world
/// used throughout, pass `+y` for an upright view; looking down `+z` from the
/// origin with `up = +y` gives the identity rotation.
pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> Result<RigidPose> {
    let fwd = target - eye;
    let dist = fwd.norm();
    if !(dist > 0.0) || !dist.is_finite() {
        return Err(Error::DegenerateLookAt("eye coincides with target"));
    }
    let z = fwd / dist;
    let x = up.cross(&z);
    let xn = x.norm();
    if !(xn > 1e-9 * up.norm()) {
        return Err(Error::DegenerateLookAt("up is parallel to the view direction"));
    }
    let x = x / xn;
    let y = z.cross(&x);
    let r = Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    RigidPose::from_center(r, *eye)
}

/// Unit vector from the orbit centre to the camera.
fn orbit_direction(yaw: f64, pitch: f64) -> Vec3 {
    Vec3::new(yaw.sin() * pitch.cos(), -pitch.sin(), -yaw.cos() * pitch.cos())
}

/// Yaw and pitch (degrees) of a camera centre about `center`, inverse of the
/// orbit parameterisation.
pub fn yaw_pitch_deg(center: &Vec3, eye: &Vec3) -> (f64, f64) {
    let d = (eye - center).normalize();
    let yaw = d.x.atan2(-d.z);
    let pitch = (-d.y).clamp(-1.0, 1.0).asin();
    (yaw.to_degrees(), pitch.to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitParams {
    pub center: Vec3,
    pub radius: f64,
    pub start_yaw_deg: f64,
    pub sweep_yaw_deg: f64,
    pub pitch_deg: f64,
    pub frames: usize,
    pub intrinsics: CameraIntrinsics,
}

/// Cameras on a circle of `radius` around `center`, all looking at it.
/// Frame `t` sits at yaw `start + sweep·t/(T-1)` (just `start` when `T = 1`).
pub fn orbit(p: &OrbitParams) -> Result<Trajectory> {
    if !(p.radius > 0.0) || !p.radius.is_finite() {
        return Err(Error::InvalidArgument(format!("orbit radius must be > 0, got {}", p.radius)));
    }
    if p.frames == 0 {
        return Err(Error::InvalidArgument("orbit needs at least one frame".into()));
    }
    let pitch = p.pitch_deg.to_radians();
    let up = Vec3::new(0.0, 1.0, 0.0);
    let poses = (0..p.frames)
        .map(|t| {
            let frac = if p.frames == 1 { 0.0 } else { t as f64 / (p.frames - 1) as f64 };
            let yaw = (p.start_yaw_deg + p.sweep_yaw_deg * frac).to_radians();
            let eye = p.center + p.radius * orbit_direction(yaw, pitch);
            look_at(&eye, &p.center, &up)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(p.intrinsics, poses, None)
}

/// Interpolates keyframes into `frames` poses: rotations at constant angular
/// velocity between consecutive keys, camera centres and intrinsics linearly.
/// Frames before the first key (after the last) hold the first (last) key.
pub fn interpolate_keyframes(keys: &[CameraKeyframe], frames: usize) -> Result<Trajectory> {
    let first = keys.first().ok_or(Error::Empty("keyframes"))?;
    if frames == 0 {
        return Err(Error::InvalidArgument("trajectory needs at least one frame".into()));
    }
    for w in keys.windows(2) {
        if w[1].frame <= w[0].frame {
            return Err(Error::InvalidArgument("keyframe indices must strictly increase".into()));
        }
    }
    let size = (first.camera.intrinsics.width, first.camera.intrinsics.height);
    if keys.iter().any(|k| (k.camera.intrinsics.width, k.camera.intrinsics.height) != size) {
        return Err(Error::InvalidArgument("keyframes disagree on image size".into()));
    }
    let quats: Vec<UnitQuaternion<f64>> = keys.iter().map(|k| k.camera.pose.quaternion()).collect();
    let centers: Vec<Vec3> = keys.iter().map(|k| k.camera.pose.center()).collect();
    let last = keys.len() - 1;

    let mut poses = Vec::with_capacity(frames);
    let mut intr_at = Vec::with_capacity(frames);
    for t in 0..frames {
        let seg = keys.iter().rposition(|k| k.frame <= t);
        let (pose, intr) = match seg {
            None => (first.camera.pose, first.camera.intrinsics),
            Some(i) if i == last || keys[i].frame == t => (keys[i].camera.pose, keys[i].camera.intrinsics),
            Some(i) => {
                let (a, b) = (&keys[i], &keys[i + 1]);
                let alpha = (t - a.frame) as f64 / (b.frame - a.frame) as f64;
                let q = quats[i].slerp(&quats[i + 1], alpha);
                let r = *Rotation3::from(q).matrix();
                let c = centers[i].lerp(&centers[i + 1], alpha);
                let (ka, kb) = (&a.camera.intrinsics, &b.camera.intrinsics);
                let lerp = |x: f64, y: f64| x + alpha * (y - x);
                let k = CameraIntrinsics::new(
                    lerp(ka.fx, kb.fx),
                    lerp(ka.fy, kb.fy),
                    lerp(ka.cx, kb.cx),
                    lerp(ka.cy, kb.cy),
                    size.0,
                    size.1,
                )?;
                (RigidPose::from_center(r, c)?, k)
            }
        };
        poses.push(pose);
        intr_at.push(intr);
    }
    if intr_at.iter().any(|k| k != &intr_at[0]) {
        return Err(Error::InvalidArgument("keyframes with differing intrinsics cannot share one trajectory".into()));
    }
    Trajectory::new(intr_at[0], poses, None)
}

/// Freezes time at source frame `freeze_at` over the output frames in
/// `span`; every other output frame shows its own index.
pub fn bullet_time(traj: &Trajectory, freeze_at: usize, span: Range<usize>) -> Result<Trajectory> {
    if span.end > traj.len() {
        return Err(Error::InvalidArgument(format!("bullet-time span {span:?} exceeds {} frames", traj.len())));
    }
    let warp = (0..traj.len()).map(|t| if span.contains(&t) { freeze_at } else { t }).collect();
    Trajectory::new(traj.intrinsics, traj.poses.clone(), Some(warp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{project, rotation_error};

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(600.0, 600.0, 415.5, 239.5, 832, 480).unwrap()
    }

    fn orbit_params(sweep: f64, frames: usize) -> OrbitParams {
        OrbitParams {
            center: Vec3::new(0.5, -0.2, 4.0),
            radius: 3.0,
            start_yaw_deg: 10.0,
            sweep_yaw_deg: sweep,
            pitch_deg: 15.0,
            frames,
            intrinsics: intr(),
        }
    }

    #[test]
    fn look_at_identity() {
        let pose = look_at(&Vec3::new(0.0, 0.0, -1.0), &Vec3::zeros(), &Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((pose.rotation() - Mat3::identity()).abs().max() < 1e-9);
        assert!((pose.translation() - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn look_at_target_projects_to_principal_point() {
        let target = Vec3::new(1.0, 2.0, 3.0);
        let pose = look_at(&Vec3::new(-2.0, 0.5, -1.0), &target, &Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let (px, d) = project(&target, &Camera::new(intr(), pose)).unwrap();
        assert!((px[0] - 415.5).abs() < 1e-9 && (px[1] - 239.5).abs() < 1e-9);
        assert!(d > 0.0);
    }

    #[test]
    fn look_at_degenerate() {
        let up = Vec3::new(0.0, 1.0, 0.0);
        assert!(look_at(&Vec3::zeros(), &Vec3::new(0.0, 5.0, 0.0), &up).is_err());
        assert!(look_at(&Vec3::zeros(), &Vec3::zeros(), &up).is_err());
    }

    #[test]
    fn orbit_midframe_yaw() {
        let p = orbit_params(180.0, 45);
        let traj = orbit(&p).unwrap();
        let (yaw, pitch) = yaw_pitch_deg(&p.center, &traj.poses()[22].center());
        assert!((yaw - 100.0).abs() < 1e-9, "{yaw}");
        assert!((pitch - 15.0).abs() < 1e-9);
    }

    #[test]
    fn orbit_zero_sweep_is_constant() {
        let traj = orbit(&orbit_params(0.0, 7)).unwrap();
        assert!(traj.poses().iter().all(|p| p == &traj.poses()[0]));
    }

    #[test]
    fn orbit_radius_and_orthonormality() {
        let p = orbit_params(120.0, 45);
        for pose in orbit(&p).unwrap().poses() {
            assert!(((pose.center() - p.center).norm() - p.radius).abs() < 1e-9);
            assert!(rotation_error(pose.rotation()) < 1e-9);
        }
    }

    #[test]
    fn full_circle_closes() {
        let traj = orbit(&orbit_params(360.0, 46)).unwrap();
        let (a, b) = (traj.poses()[0], traj.poses()[45]);
        assert!((a.rotation() - b.rotation()).abs().max() < 1e-6);
        assert!((a.translation() - b.translation()).norm() < 1e-6);
    }

    #[test]
    fn single_frame_orbit_uses_start() {
        let p = orbit_params(90.0, 1);
        let traj = orbit(&p).unwrap();
        let (yaw, _) = yaw_pitch_deg(&p.center, &traj.poses()[0].center());
        assert!((yaw - 10.0).abs() < 1e-9);
    }

    #[test]
    fn identical_keys_give_constant_trajectory() {
        let cam = Camera::new(intr(), orbit(&orbit_params(0.0, 1)).unwrap().poses()[0]);
        let keys = [CameraKeyframe { frame: 0, camera: cam }, CameraKeyframe { frame: 10, camera: cam }];
        let traj = interpolate_keyframes(&keys, 12).unwrap();
        for p in traj.poses() {
            assert!((p.rotation() - cam.pose.rotation()).abs().max() < 1e-12);
            assert!((p.center() - cam.pose.center()).norm() < 1e-12);
        }
    }

    #[test]
    fn keyframe_midpoint_yaw() {
        let center = Vec3::new(0.0, 0.0, 5.0);
        let mk = |yaw: f64| {
            let p = OrbitParams {
                center,
                radius: 2.0,
                start_yaw_deg: yaw,
                sweep_yaw_deg: 0.0,
                pitch_deg: 0.0,
                frames: 1,
                intrinsics: intr(),
            };
            Camera::new(intr(), orbit(&p).unwrap().poses()[0])
        };
        let keys = [CameraKeyframe { frame: 0, camera: mk(0.0) }, CameraKeyframe { frame: 10, camera: mk(90.0) }];
        let traj = interpolate_keyframes(&keys, 11).unwrap();
        // camera forward axis is the third rotation row
        let fwd = traj.poses()[5].rotation().row(2).transpose();
        let yaw_of_view = (-fwd.x).atan2(fwd.z).to_degrees();
        assert!((yaw_of_view - 45.0).abs() < 1e-6, "{yaw_of_view}");
        assert_eq!(traj.poses()[0], keys[0].camera.pose);
        assert_eq!(traj.poses()[10], keys[1].camera.pose);
        for p in traj.poses() {
            assert!(rotation_error(p.rotation()) < 1e-9);
        }
    }

    #[test]
    fn keyframes_must_increase() {
        let cam = Camera::new(intr(), RigidPose::identity());
        let keys = [CameraKeyframe { frame: 3, camera: cam }, CameraKeyframe { frame: 3, camera: cam }];
        assert!(interpolate_keyframes(&keys, 5).is_err());
    }

    #[test]
    fn bullet_time_warps() {
        let traj = orbit(&orbit_params(90.0, 8)).unwrap();
        let id = bullet_time(&traj, 4, 3..3).unwrap();
        assert_eq!(id.time_warp().unwrap(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        let frozen = bullet_time(&traj, 4, 0..8).unwrap();
        assert!(frozen.time_warp().unwrap().iter().all(|i| *i == 4));
        let mid = bullet_time(&traj, 2, 3..6).unwrap();
        assert_eq!(mid.time_warp().unwrap(), &[0, 1, 2, 2, 2, 2, 6, 7]);
        assert!(bullet_time(&traj, 0, 5..9).is_err());
    }

    #[test]
    fn source_checks() {
        let traj = orbit(&orbit_params(90.0, 4)).unwrap();
        assert!(traj.check_source(4).is_ok());
        assert!(matches!(traj.check_source(5), Err(Error::FrameCountMismatch { .. })));
        let warped = bullet_time(&traj, 9, 0..2).unwrap();
        assert!(warped.check_source(9).is_err());
        assert!(warped.check_source(10).is_ok());
    }
}
