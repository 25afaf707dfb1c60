use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::Vec3;
use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundPrimitive {
    /// Parallelogram `origin + a·u_axis + b·v_axis`, `a ∈ [0, u_len]`, `b ∈ [0, v_len]`.
    Plane { origin: [f64; 3], u_axis: [f64; 3], v_axis: [f64; 3], u_len: f64, v_len: f64, spacing: f64, color: Rgb },
    /// Surface of an axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3], spacing: f64, color: Rgb },
}

impl BackgroundPrimitive {
    pub(crate) fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Plane { u_axis, v_axis, u_len, v_len, spacing, .. } => {
                let (u, v) = (Vec3::from(*u_axis), Vec3::from(*v_axis));
                *spacing > 0.0 && *u_len > 0.0 && *v_len > 0.0 && u.cross(&v).norm() > 1e-9
            }
            Self::Box { min, max, spacing, .. } => *spacing > 0.0 && (0..3).all(|i| max[i] > min[i]),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid background primitive {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectShape {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    Union { parts: Vec<UnionPart> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnionPart {
    pub offset: [f64; 3],
    pub shape: ObjectShape,
}

impl ObjectShape {
    pub(crate) fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Sphere { radius } => *radius > 0.0 && radius.is_finite(),
            Self::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0 && h.is_finite()),
            Self::Union { parts } => {
                for p in parts {
                    p.shape.validate()?;
                }
                !parts.is_empty()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid object shape {self:?}")))
        }
    }
}

/// Cell-centred grid on a parallelogram, each sample jittered inside its cell.
#[allow(clippy::too_many_arguments)]
fn sample_plane(
    out: &mut PointCloud,
    origin: Vec3,
    u: Vec3,
    v: Vec3,
    (ul, vl): (f64, f64),
    spacing: f64,
    color: Rgb,
    rng: &mut ChaCha8Rng,
) {
    let (u, v) = (u.normalize(), v.normalize());
    let nu = (ul / spacing).ceil().max(1.0) as usize;
    let nv = (vl / spacing).ceil().max(1.0) as usize;
    let (du, dv) = (ul / nu as f64, vl / nv as f64);
    for j in 0..nv {
        for i in 0..nu {
            let a = (i as f64 + 0.5 + rng.random_range(-0.3..0.3)) * du;
            let b = (j as f64 + 0.5 + rng.random_range(-0.3..0.3)) * dv;
            // half-metre checker so previews show texture
            let tile = ((a / 0.5).floor() as i64 + (b / 0.5).floor() as i64).rem_euclid(2);
            let k = if tile == 0 { 1.0 } else { 0.8 };
            let c = color.map(|x| (x as f64 * k).round() as u8);
            out.push(origin + a * u + b * v, Some(c), None);
        }
    }
}

pub fn sample_background(prims: &[BackgroundPrimitive], rng: &mut ChaCha8Rng) -> PointCloud {
    let mut out = PointCloud::with_attributes(true, false, 0);
    for p in prims {
        match p {
            BackgroundPrimitive::Plane { origin, u_axis, v_axis, u_len, v_len, spacing, color } => {
                let o = Vec3::from(*origin);
                sample_plane(&mut out, o, (*u_axis).into(), (*v_axis).into(), (*u_len, *v_len), *spacing, *color, rng);
            }
            BackgroundPrimitive::Box { min, max, spacing, color } => {
                let (lo, hi) = (Vec3::from(*min), Vec3::from(*max));
                let ext = hi - lo;
                for axis in 0..3 {
                    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                    let (ua, ub) = (Vec3::ith(a, 1.0), Vec3::ith(b, 1.0));
                    for side in [lo, lo + Vec3::ith(axis, ext[axis])] {
                        sample_plane(&mut out, side, ua, ub, (ext[a], ext[b]), *spacing, *color, rng);
                    }
                }
            }
        }
    }
    out
}

fn shape_points(shape: &ObjectShape, spacing: f64, offset: Vec3, out: &mut Vec<Vec3>) {
    match shape {
        ObjectShape::Sphere { radius } => {
            // Fibonacci lattice: near-uniform and deterministic
            let n = ((4.0 * std::f64::consts::PI * radius * radius) / (spacing * spacing)).ceil().max(8.0) as usize;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for i in 0..n {
                let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - y * y).max(0.0).sqrt();
                let phi = golden * i as f64;
                let d = Vec3::new(r * phi.cos(), y, r * phi.sin()).normalize();
                out.push(offset + *radius * d);
            }
        }
        ObjectShape::Box { half_extents } => {
            let h = Vec3::from(*half_extents);
            for axis in 0..3 {
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                let na = ((2.0 * h[a]) / spacing).ceil().max(1.0) as usize;
                let nb = ((2.0 * h[b]) / spacing).ceil().max(1.0) as usize;
                for sign in [-1.0, 1.0] {
                    for j in 0..nb {
                        for i in 0..na {
                            let mut p = Vec3::zeros();
                            p[axis] = sign * h[axis];
                            p[a] = -h[a] + (i as f64 + 0.5) * 2.0 * h[a] / na as f64;
                            p[b] = -h[b] + (j as f64 + 0.5) * 2.0 * h[b] / nb as f64;
                            out.push(offset + p);
                        }
                    }
                }
            }
        }
        ObjectShape::Union { parts } => {
            for part in parts {
                shape_points(&part.shape, spacing, offset + Vec3::from(part.offset), out);
            }
        }
    }
}

/// Surface samples in the object frame, shaded in horizontal bands.
pub fn sample_object(shape: &ObjectShape, spacing: f64, color: Rgb) -> PointCloud {
    let mut pts = Vec::new();
    shape_points(shape, spacing, Vec3::zeros(), &mut pts);
    let extent = pts.iter().fold(0.0f64, |m, p| m.max(p.y.abs())).max(1e-9);
    let colors = pts
        .iter()
        .map(|p| {
            let band = ((p.y / extent) * 4.0).floor() as i64;
            let k = if band.rem_euclid(2) == 0 { 1.0 } else { 0.7 };
            color.map(|x| (x as f64 * k).round() as u8)
        })
        .collect();
    PointCloud::from_parts(pts, Some(colors), None).expect("finite samples")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn plane_samples_stay_in_their_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prim = BackgroundPrimitive::Plane {
            origin: [0.0, 0.0, 1.0],
            u_axis: [2.0, 0.0, 0.0],
            v_axis: [0.0, 1.0, 0.0],
            u_len: 1.0,
            v_len: 0.5,
            spacing: 0.1,
            color: [100, 100, 100],
        };
        let c = sample_background(&[prim], &mut rng);
        assert_eq!(c.len(), 50);
        for p in c.positions() {
            assert!(p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 0.5 && p.z == 1.0);
        }
    }

    #[test]
    fn box_covers_six_faces() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prim = BackgroundPrimitive::Box { min: [0.0; 3], max: [1.0; 3], spacing: 0.25, color: [1, 2, 3] };
        let c = sample_background(&[prim], &mut rng);
        assert_eq!(c.len(), 6 * 16);
        let obj = sample_object(&ObjectShape::Box { half_extents: [0.5; 3] }, 0.25, [1, 2, 3]);
        assert_eq!(obj.len(), 6 * 16);
        assert!(obj.positions().iter().all(|p| (p.amax() - 0.5).abs() < 1e-12));
    }

    #[test]
    fn union_offsets_parts() {
        let shape = ObjectShape::Union {
            parts: vec![
                UnionPart { offset: [0.0; 3], shape: ObjectShape::Sphere { radius: 0.2 } },
                UnionPart { offset: [1.0, 0.0, 0.0], shape: ObjectShape::Sphere { radius: 0.2 } },
            ],
        };
        let c = sample_object(&shape, 0.05, [10, 10, 10]);
        let far = c.positions().iter().filter(|p| p.x > 0.5).count();
        assert_eq!(far * 2, c.len());
    }
}
