//! Pinhole cameras.
//!
//! Conventions used everywhere in the crate:
//!
//! * extrinsics are world-to-camera: `x_cam = R * x_world + t`;
//! * the camera looks along `+z`, image `u` grows with camera `+x` and image
//!   `v` grows with camera `+y` (origin at the top-left corner);
//! * pixel centres sit at integer coordinates, so pixel `(i, j)` covers
//!   `[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)`.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

const ORTHONORMAL_TOL: f64 = 1e-6;

/// World-to-camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Mat3,
    translation: Vec3,
}

impl RigidPose {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    /// Builds a pose, rejecting rotations that are not orthonormal with
    /// determinant +1 within `1e-6`.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        Self::with_tolerance(rotation, translation, ORTHONORMAL_TOL)
    }

    pub fn with_tolerance(rotation: Mat3, translation: Vec3, tol: f64) -> Result<Self> {
        let err = rotation_error(&rotation);
        if !err.is_finite() || err > tol {
            return Err(Error::InvalidArgument(format!("rotation is not orthonormal (error {err:.3e} > {tol:.1e})")));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("translation is not finite".into()));
        }
        Ok(Self { rotation, translation })
    }

    /// Pose of a camera centred at `center` with the given world-to-camera
    /// rotation.
    pub fn from_center(rotation: Mat3, center: Vec3) -> Result<Self> {
        Self::new(rotation, -(rotation * center))
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidPose) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation))
    }

    /// Row-major rotation entries.
    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]]
    }
}

/// Largest deviation of `R^T R` from identity, plus the determinant error.
pub fn rotation_error(r: &Mat3) -> f64 {
    let gram = r.transpose() * r - Mat3::identity();
    let ortho = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ortho.max((r.determinant() - 1.0).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    /// Square pixels, principal point at the image centre and the given
    /// horizontal field of view in degrees.
    pub fn from_fov(width: u32, height: u32, hfov_deg: f64) -> Result<Self> {
        let f = 0.5 * width as f64 / (0.5 * hfov_deg.to_radians()).tan();
        Self::new(f, f, (width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx.is_finite()
            && self.fy.is_finite()
            && self.fx > 0.0
            && self.fy > 0.0
            && self.width > 0
            && self.height > 0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid intrinsics {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: RigidPose,
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, pose: RigidPose) -> Self {
        Self { intrinsics, pose }
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width as usize
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height as usize
    }

    /// Projects a camera-frame point. `None` when it is not in front of the
    /// camera.
    #[inline]
    pub fn project_camera_frame(&self, pc: &Vec3) -> Option<([f64; 2], f64)> {
        if !(pc.z > 0.0) {
            return None;
        }
        let k = &self.intrinsics;
        let u = k.fx * pc.x / pc.z + k.cx;
        let v = k.fy * pc.y / pc.z + k.cy;
        Some(([u, v], pc.z))
    }

    /// World direction (unit) of the ray through a pixel.
    pub fn ray_direction(&self, pixel: [f64; 2]) -> Vec3 {
        let k = &self.intrinsics;
        let d = Vec3::new((pixel[0] - k.cx) / k.fx, (pixel[1] - k.cy) / k.fy, 1.0);
        (self.pose.rotation().transpose() * d).normalize()
    }
}

/// Projects a world point to `(pixel, depth)`, where depth is camera-frame
/// `z`. Pixels outside the image are returned as-is.
pub fn project(point: &Vec3, camera: &Camera) -> Option<([f64; 2], f64)> {
    camera.project_camera_frame(&camera.pose.to_camera(point))
}

/// World point whose projection is `(pixel, depth)`.
pub fn unproject(pixel: [f64; 2], depth: f64, camera: &Camera) -> Result<Vec3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::NonPositiveDepth(depth));
    }
    let k = &camera.intrinsics;
    let pc = Vec3::new((pixel[0] - k.cx) * depth / k.fx, (pixel[1] - k.cy) * depth / k.fy, depth);
    Ok(camera.pose.to_world(&pc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 480.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn on_axis_point_lands_on_principal_point() {
        let cam = Camera::new(intr(), RigidPose::identity());
        let (px, d) = project(&Vec3::new(0.0, 0.0, 3.5), &cam).unwrap();
        assert_eq!(px, [320.0, 240.0]);
        assert_eq!(d, 3.5);
    }

    #[test]
    fn behind_camera_has_no_projection() {
        let cam = Camera::new(intr(), RigidPose::identity());
        assert!(project(&Vec3::new(0.0, 0.0, -1.0), &cam).is_none());
        assert!(project(&Vec3::new(0.1, 0.0, 0.0), &cam).is_none());
    }

    #[test]
    fn unproject_principal_point() {
        let cam = Camera::new(intr(), RigidPose::identity());
        let p = unproject([320.0, 240.0], 1.0, &cam).unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn unproject_rejects_nonpositive_depth() {
        let cam = Camera::new(intr(), RigidPose::identity());
        assert!(matches!(unproject([1.0, 1.0], 0.0, &cam), Err(Error::NonPositiveDepth(_))));
        assert!(unproject([1.0, 1.0], -2.0, &cam).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 0.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 3.9, 0.0, 4, 4).is_ok());
    }

    #[test]
    fn pose_rejects_reflection() {
        let mut r = Mat3::identity();
        r[(2, 2)] = -1.0;
        assert!(RigidPose::new(r, Vec3::zeros()).is_err());
    }

    fn arb_pose() -> impl Strategy<Value = RigidPose> {
        (prop::array::uniform3(-3.0f64..3.0), prop::array::uniform3(-5.0f64..5.0)).prop_map(|(aa, t)| {
            let rot = Rotation3::new(Vec3::new(aa[0], aa[1], aa[2]));
            RigidPose::new(*rot.matrix(), Vec3::new(t[0], t[1], t[2])).unwrap()
        })
    }

    proptest! {
        #[test]
        fn project_unproject_round_trip(
            pose in arb_pose(),
            px in prop::array::uniform2(-100.0f64..800.0),
            depth in 0.01f64..100.0,
        ) {
            let cam = Camera::new(intr(), pose);
            let p = unproject(px, depth, &cam).unwrap();
            let (q, d) = project(&p, &cam).unwrap();
            prop_assert!((d - depth).abs() <= 1e-9 * depth);
            let scale = px[0].abs().max(px[1].abs()).max(1.0);
            prop_assert!((q[0] - px[0]).abs() <= 1e-9 * scale);
            prop_assert!((q[1] - px[1]).abs() <= 1e-9 * scale);
        }

        #[test]
        fn pose_inverse_composes_to_identity(pose in arb_pose()) {
            let id = pose.compose(&pose.inverse());
            prop_assert!((id.rotation() - Mat3::identity()).abs().max() < 1e-6);
            prop_assert!(id.translation().norm() < 1e-6);
            prop_assert!(rotation_error(pose.rotation()) < 1e-6);
        }

        #[test]
        fn world_point_round_trip(pose in arb_pose(), p in prop::array::uniform3(-10.0f64..10.0)) {
            let cam = Camera::new(intr(), pose);
            let w = Vec3::new(p[0], p[1], p[2]);
            if let Some((px, d)) = project(&w, &cam) {
                let back = unproject(px, d, &cam).unwrap();
                prop_assert!((back - w).norm() <= 1e-9 * w.norm().max(1.0) * (1.0 + pose.translation().norm()));
            }
        }
    }
}
