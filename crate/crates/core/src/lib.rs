//! Geometry-complete 4D point-cloud proxies of dynamic scenes: lifting,
//! canonical completion, alignment, trajectory authoring and depth-scaffold
//! rendering.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod camera;
pub mod cloud;
pub mod complete;
pub mod error;
pub mod io;
pub mod lift;
pub mod pipeline;
pub mod proxy;
pub mod raster;
pub mod render;
pub mod synth;
pub mod trajectory;

pub use align::{align_sequence, AlignParams, AlignedFrame, FrameAlignment, SmootherConfig};
pub use camera::{project, unproject, Camera, CameraIntrinsics, Mat3, RigidPose, Vec3};
pub use cloud::{apply_similarity, PointCloud, Rgb, SimilarityST};
pub use complete::{merge_views, CanonicalCompletion, CanonicalFrame, NovelView, ViewGuide};
pub use error::{Error, FormatError, Result};
pub use lift::{build_scene_lift, GlobalFrame, SceneLift};
pub use proxy::{composite, Pivot, Proxy4D};
pub use raster::{BinaryMask, PointMap, RgbImage};
pub use render::{render_sequence, DepthFrame, RenderConfig};
pub use trajectory::{bullet_time, interpolate_keyframes, look_at, orbit, CameraKeyframe, OrbitParams, Trajectory};
