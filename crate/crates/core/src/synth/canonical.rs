use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::camera::{Camera, Vec3};
use crate::cloud::{PointCloud, SimilarityST};
use crate::complete::{CanonicalFrame, NovelView, ViewGuide, NOVEL_VIEW_COUNT};
use crate::error::{Error, Result};
use crate::lift::GlobalFrame;
use crate::raster::{is_valid_point, PointMap, RgbImage, INVALID_POINT};
use crate::synth::capture::capture_parts;
use crate::synth::SceneTruth;
use crate::trajectory::look_at;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalOptions {
    /// Uniform scale of the canonical object space relative to the object frame.
    pub canonical_scale: f64,
    /// Depth noise (fraction of depth) along each view's rays; 0 disables.
    pub depth_noise: f64,
    pub seed: u64,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        Self { canonical_scale: 1.0, depth_noise: 0.0, seed: 0 }
    }
}

fn rotate_y(d: &Vec3, deg: f64) -> Vec3 {
    let (s, c) = deg.to_radians().sin_cos();
    Vec3::new(c * d.x + s * d.z, d.y, -s * d.x + c * d.z)
}

fn jitter(pm: &mut PointMap, centre: &Vec3, forward: &Vec3, sigma: f64, rng: &mut ChaCha8Rng) {
    let gauss = Normal::new(0.0, 1.0).unwrap();
    for p in pm.points_mut() {
        if is_valid_point(p) {
            let depth = (*p - centre).dot(forward);
            let ray = (*p - centre).normalize();
            *p += gauss.sample(rng) * sigma * depth * ray;
        }
    }
}

/// Canonical-space reconstructions of the object, one frame at a time.
///
/// Canonical space is the object frame scaled by `canonical_scale`, with the
/// global orientation, so the true canonical-to-global map of frame `t` is
/// `x ↦ (gt_s_t / κ)·x + gt_t_t`. The reference map holds the captured
/// object pixels mapped into canonical space (invalid elsewhere). The four
/// novel views render the complete canonical object on white from azimuths
/// `k·90°` around the source direction, `k = 0..4`.
pub struct CanonicalSimulator<'a> {
    truth: &'a SceneTruth,
    opts: CanonicalOptions,
    object: PointCloud,
    centre: Vec3,
    bound: f64,
    obj_centroid: Vec3,
}

impl<'a> CanonicalSimulator<'a> {
    pub fn new(truth: &'a SceneTruth, opts: &CanonicalOptions) -> Result<Self> {
        let kappa = opts.canonical_scale;
        if !(kappa > 0.0) || !kappa.is_finite() || !(opts.depth_noise >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid canonical options {opts:?}")));
        }
        let object = truth.object.map_positions(|p| kappa * p);
        let centre = object.centroid().ok_or(Error::Empty("object has no samples"))?;
        let bound = object.positions().iter().fold(0.0f64, |m, p| m.max((p - centre).norm()));
        let obj_centroid = truth.object.centroid().expect("non-empty object");
        Ok(Self { truth, opts: *opts, object, centre, bound, obj_centroid })
    }

    /// The canonical frame for one clean captured frame.
    pub fn frame(&self, f: &GlobalFrame) -> Result<CanonicalFrame> {
        let (truth, opts, centre) = (self.truth, &self.opts, self.centre);
        let kappa = opts.canonical_scale;
        let t = f.index;
        let gt = &truth.poses[t];
        let cam = &truth.cameras[t];
        // global -> canonical
        let to_canon = SimilarityST::new(kappa / gt.scale(), -(kappa / gt.scale()) * gt.translation())?;
        let (w, h) = f.pointmap.dims();
        let pts = f
            .pointmap
            .points()
            .iter()
            .zip(f.mask.values())
            .map(|(p, &m)| if m && is_valid_point(p) { to_canon.apply(p) } else { INVALID_POINT })
            .collect();
        let mut ref_pm = PointMap::new(w, h, pts, None)?;
        if let Some(c) = f.pointmap.colors() {
            ref_pm = ref_pm.with_colors(c.to_vec())?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(t as u64);
        let forward = cam.pose.rotation().row(2).transpose();
        if opts.depth_noise > 0.0 {
            let c = to_canon.apply(&cam.pose.center());
            jitter(&mut ref_pm, &c, &forward, opts.depth_noise, &mut rng);
        }
        let source_dir = (cam.pose.center() - gt.apply(&self.obj_centroid)).normalize();
        let k = &cam.intrinsics;
        let half_fov = ((0.5 * k.width as f64 / k.fx).atan()).min((0.5 * k.height as f64 / k.fy).atan());
        let dist = 1.15 * self.bound / half_fov.sin();
        let mut views = Vec::with_capacity(NOVEL_VIEW_COUNT);
        for v in 0..NOVEL_VIEW_COUNT {
            let d = rotate_y(&source_dir, 90.0 * v as f64);
            let eye = centre + dist * d;
            let vcam = Camera::new(*k, look_at(&eye, &centre, &Vec3::y())?);
            let (mut pm, _) = capture_parts(&[&self.object], &vcam, truth.spec.capture_splat_radius);
            let pixels = pm
                .points()
                .iter()
                .zip(pm.colors().expect("capture carries colors"))
                .map(|(p, c)| if is_valid_point(p) { *c } else { [255, 255, 255] })
                .collect();
            if opts.depth_noise > 0.0 {
                let fwd = vcam.pose.rotation().row(2).transpose();
                jitter(&mut pm, &eye, &fwd, opts.depth_noise, &mut rng);
            }
            views.push(NovelView {
                pointmap: pm,
                guide: ViewGuide::Image(RgbImage::new(k.width as usize, k.height as usize, pixels)?),
            });
        }
        Ok(CanonicalFrame { index: t, ref_pointmap: ref_pm, ref_mask: f.mask.clone(), novel_views: views })
    }
}

/// [`CanonicalSimulator::frame`] for every captured frame.
pub fn simulate_canonical(
    truth: &SceneTruth,
    captured: &[GlobalFrame],
    opts: &CanonicalOptions,
) -> Result<Vec<CanonicalFrame>> {
    let sim = CanonicalSimulator::new(truth, opts)?;
    captured.par_iter().map(|f| sim.frame(f)).collect()
}
