use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;

use crate::camera::{unproject, Camera, Vec3};
use crate::cloud::PointCloud;
use crate::error::Result;
use crate::lift::GlobalFrame;
use crate::raster::{is_valid_point, BinaryMask, PointMap, INVALID_POINT};
use crate::render::{render_zbuffer, RenderConfig, ZBuffer, NO_POINT};
use crate::synth::{NoiseSpec, SceneTruth};

/// Visible-surface point map of `parts` seen by `camera`: each covered pixel
/// holds its winning splat's depth unprojected through the pixel centre.
/// Returns the map and the winning index per pixel.
pub(crate) fn capture_parts(parts: &[&PointCloud], camera: &Camera, radius: u32) -> (PointMap, ZBuffer) {
    let zb = render_zbuffer(parts, camera, &RenderConfig { splat_radius: radius, dilation_passes: 0 });
    let (w, h) = (camera.width(), camera.height());
    let mut offsets = Vec::with_capacity(parts.len());
    let mut acc = 0;
    for p in parts {
        offsets.push(acc);
        acc += p.len();
    }
    let mut points = Vec::with_capacity(w * h);
    let mut colors = Vec::with_capacity(w * h);
    for (pix, (&d, &idx)) in zb.depth.iter().zip(&zb.index).enumerate() {
        if idx == NO_POINT {
            points.push(INVALID_POINT);
            colors.push([0, 0, 0]);
            continue;
        }
        let px = [(pix % w) as f64, (pix / w) as f64];
        points.push(unproject(px, d, camera).expect("splat depth is positive"));
        let idx = idx as usize;
        let part = offsets.partition_point(|&o| o <= idx) - 1;
        colors.push(parts[part].color(idx - offsets[part]).unwrap_or([128, 128, 128]));
    }
    let pm = PointMap::new(w, h, points, None).and_then(|pm| pm.with_colors(colors)).expect("grid sizes match");
    (pm, zb)
}

/// One global frame per source camera: visible surface of background plus
/// object, masked where the object wins the z-test. Confidence is 1.
pub fn simulate_capture(truth: &SceneTruth) -> Vec<GlobalFrame> {
    let nb = truth.background.len() as u32;
    (0..truth.frame_count())
        .into_par_iter()
        .map(|t| {
            let obj = truth.object_global(t);
            let cam = &truth.cameras[t];
            let (pm, zb) = capture_parts(&[&truth.background, &obj], cam, truth.spec.capture_splat_radius);
            let mask = zb.index.iter().map(|&i| i != NO_POINT && i >= nb).collect();
            let mask = BinaryMask::new(cam.width(), cam.height(), mask).expect("grid sizes match");
            GlobalFrame::new(t, pm, mask).expect("grid sizes match")
        })
        .collect()
}

/// Per-frame outcome of [`corrupt_monocular`].
#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    /// Depth scale factor applied about the camera centre.
    pub scale: f64,
    pub outliers: usize,
}

fn frame_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Monocular-style degradation, applied in this order per frame:
/// every point is scaled about the camera centre by a lognormal factor,
/// displaced along its viewing ray by Gaussian noise proportional to its
/// depth, and with probability `outlier_fraction` replaced by a uniform
/// point inside the scene bounding box grown 2× about its centre.
pub fn corrupt_monocular(
    truth: &SceneTruth,
    frames: &[GlobalFrame],
    noise: &NoiseSpec,
) -> Result<(Vec<GlobalFrame>, Vec<Corruption>)> {
    noise.validate()?;
    let (lo, hi) = truth.bounding_box();
    let (mid, half) = ((lo + hi) / 2.0, hi - lo);
    let out: Vec<(GlobalFrame, Corruption)> = frames
        .par_iter()
        .map(|f| {
            let cam = &truth.cameras[f.index];
            let center = cam.pose.center();
            let mut rng = frame_rng(noise.seed, f.index as u64);
            let scale = if noise.scale_jitter > 0.0 {
                LogNormal::new(0.0, noise.scale_jitter).unwrap().sample(&mut rng)
            } else {
                1.0
            };
            let gauss = Normal::new(0.0, 1.0).unwrap();
            let mut outliers = 0;
            let points = f
                .pointmap
                .points()
                .iter()
                .map(|p| {
                    if !is_valid_point(p) {
                        return *p;
                    }
                    let mut q = if scale != 1.0 { center + scale * (p - center) } else { *p };
                    if noise.depth_noise > 0.0 {
                        let depth = cam.pose.to_camera(&q).z;
                        let ray = (q - center).normalize();
                        q += gauss.sample(&mut rng) * noise.depth_noise * depth * ray;
                    }
                    if noise.outlier_fraction > 0.0 && rng.random::<f64>() < noise.outlier_fraction {
                        outliers += 1;
                        q = mid
                            + Vec3::new(
                                rng.random_range(-1.0..1.0) * half.x,
                                rng.random_range(-1.0..1.0) * half.y,
                                rng.random_range(-1.0..1.0) * half.z,
                            );
                    }
                    q
                })
                .collect();
            let mut pm = PointMap::new(
                f.pointmap.width(),
                f.pointmap.height(),
                points,
                f.pointmap.confidence().map(<[f64]>::to_vec),
            )?;
            if let Some(c) = f.pointmap.colors() {
                pm = pm.with_colors(c.to_vec())?;
            }
            Ok((GlobalFrame::new(f.index, pm, f.mask.clone())?, Corruption { scale, outliers }))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}
