use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::align::FrameAlignment;
use crate::camera::Vec3;
use crate::error::{Error, Result};

/// Constant-velocity smoother noise levels, `dt = 1` frame. The global z
/// axis is the depth axis and uses `depth_ratio · measurement_noise_lateral`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub process_noise: f64,
    pub measurement_noise_lateral: f64,
    pub depth_ratio: f64,
}

impl SmootherConfig {
    pub fn for_scene_scale(scene_scale: f64) -> Self {
        let s2 = scene_scale * scene_scale;
        Self { process_noise: 1e-3 * s2, measurement_noise_lateral: 1e-2 * s2, depth_ratio: 10.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.process_noise) || !ok(self.measurement_noise_lateral) || !(self.depth_ratio >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "smoother needs q > 0, r > 0 and depth ratio >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    fn measurement_noise(&self, axis: usize) -> f64 {
        if axis == 2 {
            self.depth_ratio * self.measurement_noise_lateral
        } else {
            self.measurement_noise_lateral
        }
    }
}

/// Forward Kalman filter then Rauch–Tung–Striebel backward pass on one axis.
/// `None` measurements are skipped (prediction only).
pub fn rts_smooth_1d(z: &[Option<f64>], q: f64, r: f64) -> Vec<f64> {
    let n = z.len();
    let Some(first) = z.iter().flatten().next().copied() else {
        return vec![0.0; n];
    };
    let f = Matrix2::new(1.0, 1.0, 0.0, 1.0);
    let qm = q * Matrix2::new(1.0 / 3.0, 0.5, 0.5, 1.0);
    // near-diffuse prior: velocity is unknown at the start
    let p0 = 1e9 * (q + r);
    let mut x = Vector2::new(first, 0.0);
    let mut p = Matrix2::new(p0, 0.0, 0.0, p0);
    let mut xp = Vec::with_capacity(n);
    let mut pp = Vec::with_capacity(n);
    let mut xf = Vec::with_capacity(n);
    let mut pf = Vec::with_capacity(n);
    for (k, zk) in z.iter().enumerate() {
        if k > 0 {
            x = f * x;
            p = f * p * f.transpose() + qm;
        }
        xp.push(x);
        pp.push(p);
        if let Some(zk) = zk {
            let innov = zk - x[0];
            let sv = p[(0, 0)] + r;
            let gain = Vector2::new(p[(0, 0)], p[(1, 0)]) / sv;
            x += gain * innov;
            // Joseph-free form is fine here; symmetrize to keep rounding in check
            let ph = Vector2::new(p[(0, 0)], p[(0, 1)]);
            p -= gain * ph.transpose();
            p = 0.5 * (p + p.transpose());
        }
        xf.push(x);
        pf.push(p);
    }
    let mut xs = xf.clone();
    for k in (0..n.saturating_sub(1)).rev() {
        let inv = pp[k + 1].try_inverse().unwrap_or_else(Matrix2::zeros);
        let c = pf[k] * f.transpose() * inv;
        xs[k] = xf[k] + c * (xs[k + 1] - xp[k + 1]);
    }
    xs.iter().map(|s| s[0]).collect()
}

/// Smoothed centroid per frame; frames with `None` are interpolated by the model.
pub fn smooth_track(centroids: &[Option<Vec3>], cfg: &SmootherConfig) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); centroids.len()];
    for axis in 0..3 {
        let z: Vec<Option<f64>> = centroids.iter().map(|c| c.map(|c| c[axis])).collect();
        let s = rts_smooth_1d(&z, cfg.process_noise, cfg.measurement_noise(axis));
        for (o, v) in out.iter_mut().zip(s) {
            o[axis] = v;
        }
    }
    out
}

/// Moves each translation by the centroid correction; scales are untouched.
/// A single frame is returned unchanged.
pub fn smooth_placements(alignments: &[FrameAlignment], cfg: &SmootherConfig) -> Result<Vec<FrameAlignment>> {
    if alignments.is_empty() {
        return Err(Error::Empty("smoothing needs at least one frame"));
    }
    cfg.validate()?;
    if alignments.len() == 1 {
        return Ok(alignments.to_vec());
    }
    let raw: Vec<Option<Vec3>> = alignments.iter().map(|a| Some(a.centroid_global)).collect();
    let smoothed = smooth_track(&raw, cfg);
    Ok(alignments
        .iter()
        .zip(smoothed)
        .map(|(a, c)| {
            let mut out = a.clone();
            out.st = a.st.with_translation(a.st.translation() + (c - a.centroid_global));
            out.centroid_global = c;
            out
        })
        .collect())
}
