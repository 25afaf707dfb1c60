//! Synthetic scenes with known ground truth.
//!
//! A scene is a static background (sampled planes and boxes) plus one rigid
//! object sampled in its own frame and moved per frame by a uniform scale and
//! a translation. The capture emulation renders what a source camera sees,
//! the corruption step imitates monocular depth errors, and the canonical
//! emulation produces the object-space reconstructions the pipeline aligns.
//!
//! World `+y` points down (image rows), matching [`crate::trajectory::look_at`].

mod canonical;
mod capture;
mod fixture;
mod shapes;

pub use canonical::{simulate_canonical, CanonicalOptions, CanonicalSimulator};
pub use capture::{corrupt_monocular, simulate_capture, Corruption};
pub use fixture::{write_fixture, FixtureTruth, FrameTruth};
pub use shapes::{sample_background, sample_object, BackgroundPrimitive, ObjectShape};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, CameraIntrinsics, Vec3};
use crate::cloud::{apply_similarity, PointCloud, Rgb, SimilarityST};
use crate::error::{Error, Result};
use crate::trajectory::{look_at, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub width: u32,
    pub height: u32,
    pub hfov_deg: f64,
    /// Camera centre at the first and last frame; linear in between.
    pub eye_start: [f64; 3],
    pub eye_end: [f64; 3],
    pub target: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub translation_start: [f64; 3],
    pub translation_end: [f64; 3],
    pub scale_start: f64,
    pub scale_end: f64,
    /// Lateral (x) sinusoid added to the linear path.
    #[serde(default)]
    pub wobble_amplitude: f64,
    #[serde(default = "default_wobble_period")]
    pub wobble_period: f64,
}

fn default_wobble_period() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub shape: ObjectShape,
    /// Target distance between neighbouring surface samples.
    pub spacing: f64,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub frames: usize,
    pub seed: u64,
    pub camera: CameraSpec,
    pub background: Vec<BackgroundPrimitive>,
    pub object: ObjectSpec,
    pub track: TrackSpec,
    /// Splat radius used when emulating the capture.
    #[serde(default = "default_capture_radius")]
    pub capture_splat_radius: u32,
}

fn default_capture_radius() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of the log of the per-frame depth scale factor.
    #[serde(default)]
    pub scale_jitter: f64,
    /// Ray-direction noise, as a fraction of depth.
    #[serde(default)]
    pub depth_noise: f64,
    /// Fraction of valid pixels replaced by uniform outliers.
    #[serde(default)]
    pub outlier_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.scale_jitter) || !ok(self.depth_noise) || !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidArgument(format!("invalid noise spec {self:?}")));
        }
        Ok(())
    }
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(crate::error::FormatError::from)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::from_fov(self.camera.width, self.camera.height, self.camera.hfov_deg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::InvalidArgument("scene needs at least one frame".into()));
        }
        self.intrinsics()?;
        let t = &self.track;
        if !(t.scale_start > 0.0 && t.scale_end > 0.0) {
            return Err(Error::InvalidArgument("object scales must be > 0".into()));
        }
        if !(t.wobble_period > 0.0) {
            return Err(Error::InvalidArgument("wobble period must be > 0".into()));
        }
        if !(self.object.spacing > 0.0) {
            return Err(Error::InvalidArgument("object sample spacing must be > 0".into()));
        }
        if self.object.color.iter().all(|c| *c >= crate::complete::DEFAULT_WHITE_THRESH) {
            return Err(Error::InvalidArgument("object color is indistinguishable from white".into()));
        }
        self.object.shape.validate()?;
        for b in &self.background {
            b.validate()?;
        }
        Ok(())
    }

    fn frac(&self, t: usize) -> f64 {
        if self.frames == 1 {
            0.0
        } else {
            t as f64 / (self.frames - 1) as f64
        }
    }

    /// Object-to-global placement at frame `t`.
    pub fn object_pose(&self, t: usize) -> SimilarityST {
        let tr = &self.track;
        let a = self.frac(t);
        let lerp = |x: [f64; 3], y: [f64; 3]| Vec3::from(x) * (1.0 - a) + Vec3::from(y) * a;
        let wobble = tr.wobble_amplitude * (std::f64::consts::TAU * t as f64 / tr.wobble_period).sin();
        let trans = lerp(tr.translation_start, tr.translation_end) + Vec3::new(wobble, 0.0, 0.0);
        let scale = tr.scale_start * (1.0 - a) + tr.scale_end * a;
        SimilarityST::new(scale, trans).expect("validated track")
    }

    pub fn source_camera(&self, t: usize) -> Result<Camera> {
        let c = &self.camera;
        let a = self.frac(t);
        let eye = Vec3::from(c.eye_start) * (1.0 - a) + Vec3::from(c.eye_end) * a;
        let pose = look_at(&eye, &Vec3::from(c.target), &Vec3::y())?;
        Ok(Camera::new(self.intrinsics()?, pose))
    }

    /// Indoor room with a sphere moving diagonally across the floor.
    pub fn default_room(frames: usize, width: u32, height: u32) -> Self {
        let gray = |v: u8| [v, v, v];
        Self {
            frames,
            seed: 7,
            camera: CameraSpec {
                width,
                height,
                hfov_deg: 60.0,
                eye_start: [-0.3, -0.2, 0.0],
                eye_end: [0.3, -0.2, 0.2],
                target: [0.0, 0.4, 4.5],
            },
            background: vec![
                // floor, back wall, side walls
                BackgroundPrimitive::Plane {
                    origin: [-4.0, 1.2, 0.5],
                    u_axis: [1.0, 0.0, 0.0],
                    v_axis: [0.0, 0.0, 1.0],
                    u_len: 8.0,
                    v_len: 8.5,
                    spacing: 0.03,
                    color: [150, 120, 90],
                },
                BackgroundPrimitive::Plane {
                    origin: [-4.0, -3.0, 9.0],
                    u_axis: [1.0, 0.0, 0.0],
                    v_axis: [0.0, 1.0, 0.0],
                    u_len: 8.0,
                    v_len: 4.2,
                    spacing: 0.03,
                    color: gray(200),
                },
                BackgroundPrimitive::Plane {
                    origin: [-4.0, -3.0, 0.5],
                    u_axis: [0.0, 0.0, 1.0],
                    v_axis: [0.0, 1.0, 0.0],
                    u_len: 8.5,
                    v_len: 4.2,
                    spacing: 0.03,
                    color: [120, 160, 190],
                },
                BackgroundPrimitive::Plane {
                    origin: [4.0, -3.0, 0.5],
                    u_axis: [0.0, 0.0, 1.0],
                    v_axis: [0.0, 1.0, 0.0],
                    u_len: 8.5,
                    v_len: 4.2,
                    spacing: 0.03,
                    color: [190, 160, 120],
                },
                BackgroundPrimitive::Box {
                    min: [1.6, 0.4, 6.0],
                    max: [2.6, 1.2, 7.0],
                    spacing: 0.03,
                    color: [90, 110, 70],
                },
            ],
            object: ObjectSpec { shape: ObjectShape::Sphere { radius: 0.5 }, spacing: 0.012, color: [200, 70, 50] },
            track: TrackSpec {
                translation_start: [-1.2, 0.7, 4.0],
                translation_end: [1.0, 0.55, 5.0],
                scale_start: 1.0,
                scale_end: 1.3,
                wobble_amplitude: 0.0,
                wobble_period: 20.0,
            },
            capture_splat_radius: 1,
        }
    }
}

/// Ground truth generated from a [`SceneSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    pub spec: SceneSpec,
    pub background: PointCloud,
    /// Object samples in the object frame.
    pub object: PointCloud,
    /// Object-to-global placement per frame.
    pub poses: Vec<SimilarityST>,
    pub cameras: Vec<Camera>,
}

impl SceneTruth {
    pub fn frame_count(&self) -> usize {
        self.poses.len()
    }

    pub fn object_global(&self, t: usize) -> PointCloud {
        apply_similarity(&self.poses[t], &self.object)
    }

    /// Background bounding-box diagonal.
    pub fn scene_scale(&self) -> f64 {
        self.background.diagonal()
    }

    /// Bounds of the background and of the object over all frames.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        let mut grow = |b: Option<(Vec3, Vec3)>| {
            if let Some((a, b)) = b {
                lo = lo.inf(&a);
                hi = hi.sup(&b);
            }
        };
        grow(self.background.bounding_box());
        if let Some((a, b)) = self.object.bounding_box() {
            for st in &self.poses {
                grow(Some((st.apply(&a), st.apply(&b))));
            }
        }
        (lo, hi)
    }

    pub fn source_trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(self.cameras[0].intrinsics, self.cameras.iter().map(|c| c.pose).collect(), None)
    }
}

pub fn generate_truth(spec: &SceneSpec) -> Result<SceneTruth> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let background = sample_background(&spec.background, &mut rng);
    let object = sample_object(&spec.object.shape, spec.object.spacing, spec.object.color);
    let poses = (0..spec.frames).map(|t| spec.object_pose(t)).collect();
    let cameras = (0..spec.frames).map(|t| spec.source_camera(t)).collect::<Result<Vec<_>>>()?;
    Ok(SceneTruth { spec: spec.clone(), background, object, poses, cameras })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_track_has_constant_translation() {
        let mut spec = SceneSpec::default_room(6, 64, 48);
        spec.track.translation_end = spec.track.translation_start;
        spec.track.scale_end = spec.track.scale_start;
        let truth = generate_truth(&spec).unwrap();
        assert!(truth.poses.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn sphere_samples_lie_on_the_sphere() {
        let spec = SceneSpec::default_room(2, 64, 48);
        let truth = generate_truth(&spec).unwrap();
        for p in truth.object.positions() {
            assert!((p.norm() - 0.5).abs() < 1e-12);
        }
        assert!(truth.object.len() > 1000);
    }

    #[test]
    fn seeded_determinism() {
        let spec = SceneSpec::default_room(3, 64, 48);
        assert_eq!(generate_truth(&spec).unwrap(), generate_truth(&spec).unwrap());
        let mut other = spec.clone();
        other.seed += 1;
        assert_ne!(generate_truth(&spec).unwrap().background, generate_truth(&other).unwrap().background);
    }

    #[test]
    fn spec_json_round_trip_and_validation() {
        let spec = SceneSpec::default_room(45, 832, 480);
        let text = serde_json::to_string_pretty(&spec).unwrap();
        assert_eq!(SceneSpec::from_json(&text).unwrap(), spec);
        let mut bad = spec.clone();
        bad.frames = 0;
        assert!(bad.validate().is_err());
        let mut white = spec;
        white.object.color = [250, 250, 250];
        assert!(white.validate().is_err());
        assert!(SceneSpec::from_json("{\"frames\": 3}").is_err());
    }

    #[test]
    fn endpoints_follow_the_track() {
        let spec = SceneSpec::default_room(5, 64, 48);
        let truth = generate_truth(&spec).unwrap();
        assert_eq!(truth.poses[0].translation(), &Vec3::from(spec.track.translation_start));
        assert!((truth.poses[4].scale() - 1.3).abs() < 1e-15);
        assert!((truth.cameras[0].pose.center() - Vec3::from(spec.camera.eye_start)).norm() < 1e-12);
    }
}
