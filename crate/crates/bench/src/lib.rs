//! Seeded workloads shared by the benchmarks.

use proxy4d::align::CorrespondenceSet;
use proxy4d::{CameraIntrinsics, PointCloud, Proxy4D, RigidPose, Trajectory, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WIDTH: u32 = 832;
pub const HEIGHT: u32 = 480;

pub fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::from_fov(WIDTH, HEIGHT, 60.0).expect("valid intrinsics")
}

/// Colored points filling the view frustum of the identity camera between
/// depths 2 and 10.
pub fn frustum_cloud(n: usize, seed: u64) -> PointCloud {
    let k = intrinsics();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    for _ in 0..n {
        let z = rng.random_range(2.0..10.0);
        let u = rng.random_range(0.0..k.width as f64);
        let v = rng.random_range(0.0..k.height as f64);
        let p = Vec3::new((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z);
        pts.push(p);
        colors.push([rng.random(), rng.random(), rng.random()]);
    }
    PointCloud::from_parts(pts, Some(colors), None).expect("finite points")
}

/// Proxy whose every frame view holds `view_points` points, 90% background.
pub fn proxy_with_view(view_points: usize, frames: usize) -> Proxy4D {
    let bg = frustum_cloud(view_points * 9 / 10, 1);
    let fg = (0..frames).map(|t| frustum_cloud(view_points - bg.len(), 100 + t as u64)).collect();
    Proxy4D::assemble(bg, fg).expect("valid proxy")
}

/// `frames` identity cameras, one per source frame.
pub fn static_trajectory(frames: usize) -> Trajectory {
    Trajectory::new(intrinsics(), vec![RigidPose::identity(); frames], None).expect("valid trajectory")
}

/// Noisy pairs related by `q = 1.7 p + (0.3, -0.2, 4)`.
pub fn correspondences(n: usize, seed: u64) -> CorrespondenceSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Vec3::new(0.3, -0.2, 4.0);
    let mut canonical = Vec::with_capacity(n);
    let mut global = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        let p = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let noise =
            Vec3::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01));
        canonical.push(p);
        global.push(1.7 * p + t + noise);
        weights.push(rng.random_range(0.1..1.0));
    }
    CorrespondenceSet::from_pairs(canonical, global, weights)
}

/// A noisy straight-line centroid track with a few missing frames.
pub fn centroid_track(frames: usize, seed: u64) -> Vec<Option<Vec3>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .map(|t| {
            if t % 17 == 5 {
                return None;
            }
            let base = Vec3::new(0.05 * t as f64, 0.01 * t as f64, 4.0 + 0.02 * t as f64);
            Some(
                base + Vec3::new(
                    rng.random_range(-0.02..0.02),
                    rng.random_range(-0.02..0.02),
                    rng.random_range(-0.2..0.2),
                ),
            )
        })
        .collect()
}
