//! The 4D proxy: one static background cloud plus a foreground cloud per
//! frame, and the edits applied to it.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::Vec3;
use crate::cloud::{apply_similarity, PointCloud, SimilarityST};
use crate::error::{Error, FormatError, Result};
use crate::io::{read_ply, write_ply};

const DECIMATE_SEED: u64 = 0x0070_726f_7879_3464;

#[derive(Debug, Clone, PartialEq)]
pub struct Proxy4D {
    background: PointCloud,
    foreground: Vec<PointCloud>,
    scene_scale: f64,
    provenance: BTreeMap<String, serde_json::Value>,
}

/// Bounding-box diagonal of the background, falling back to every point
/// when the background is empty.
fn scene_scale_of(background: &PointCloud, foreground: &[PointCloud]) -> f64 {
    if !background.is_empty() {
        return background.diagonal();
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for c in foreground {
        if let Some((a, b)) = c.bounding_box() {
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
    }
    if lo.x.is_finite() {
        (hi - lo).norm()
    } else {
        0.0
    }
}

impl Proxy4D {
    pub fn assemble(background: PointCloud, foreground: Vec<PointCloud>) -> Result<Self> {
        if foreground.is_empty() {
            return Err(Error::Empty("proxy needs at least one frame"));
        }
        let scene_scale = scene_scale_of(&background, &foreground);
        Ok(Self { background, foreground, scene_scale, provenance: BTreeMap::new() })
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: serde_json::Value) -> Self {
        self.provenance.insert(key.into(), value);
        self
    }

    pub fn frame_count(&self) -> usize {
        self.foreground.len()
    }

    pub fn background(&self) -> &PointCloud {
        &self.background
    }

    pub fn foreground(&self) -> &[PointCloud] {
        &self.foreground
    }

    pub fn scene_scale(&self) -> f64 {
        self.scene_scale
    }

    pub fn provenance(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.provenance
    }

    /// Background followed by the foreground of frame `t`.
    pub fn frame_view(&self, t: usize) -> Result<PointCloud> {
        let fg = self.foreground.get(t).ok_or(Error::FrameOutOfRange { index: t, count: self.frame_count() })?;
        Ok(self.background.union(fg))
    }

    pub fn frame_view_len(&self, t: usize) -> usize {
        self.background.len() + self.foreground.get(t).map_or(0, |c| c.len())
    }

    pub fn scale_foreground(&self, factor: f64, pivot: Pivot) -> Result<Proxy4D> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor must be > 0, got {factor}")));
        }
        let foreground = self
            .foreground
            .iter()
            .map(|fg| {
                let c = match pivot {
                    Pivot::Point(p) => p,
                    Pivot::FrameCentroid => match fg.centroid() {
                        Some(c) => c,
                        None => return fg.clone(),
                    },
                };
                fg.map_positions(|p| c + factor * (p - c))
            })
            .collect();
        Ok(Proxy4D {
            background: self.background.clone(),
            foreground,
            scene_scale: self.scene_scale,
            provenance: self.provenance.clone(),
        })
    }

    /// Orbit centre and radius for interactive viewing: the centroid of all
    /// foreground points and twice the largest per-frame foreground extent.
    /// Falls back to the background when there is no foreground.
    pub fn suggested_orbit(&self) -> (Vec3, f64) {
        let (mut sum, mut n, mut extent) = (Vec3::zeros(), 0usize, 0.0f64);
        for c in &self.foreground {
            sum += c.positions().iter().fold(Vec3::zeros(), |a, p| a + p);
            n += c.len();
            extent = extent.max(c.diagonal());
        }
        if n == 0 {
            let centre = self.background.centroid().unwrap_or_default();
            return (centre, (0.25 * self.scene_scale).max(1e-3));
        }
        (sum / n as f64, (2.0 * extent).max(1e-3))
    }

    /// Decimates so every frame view holds at most `budget` points.
    pub fn decimate(&self, budget: usize) -> Proxy4D {
        let nb = self.background.len();
        let mf = self.foreground.iter().map(|c| c.len()).max().unwrap_or(0);
        if nb + mf <= budget {
            return self.clone();
        }
        let bg_budget = ((budget as u128 * nb as u128) / (nb + mf) as u128) as usize;
        let fg_budget = budget - bg_budget;
        Proxy4D {
            background: decimate_cloud(&self.background, bg_budget),
            foreground: self.foreground.iter().map(|c| decimate_cloud(c, fg_budget)).collect(),
            scene_scale: self.scene_scale,
            provenance: self.provenance.clone(),
        }
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| FormatError::file(dir, e))?;
        write_ply(&self.background, dir.join(BACKGROUND_FILE))?;
        for (t, fg) in self.foreground.iter().enumerate() {
            write_ply(fg, dir.join(foreground_file(t)))?;
        }
        let manifest = ProxyManifest {
            frame_count: self.frame_count(),
            scene_scale: self.scene_scale,
            background_points: self.background.len(),
            foreground_points: self.foreground.iter().map(|c| c.len()).collect(),
            provenance: self.provenance.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(FormatError::from)?;
        text.push('\n');
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| FormatError::file(path, e))?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Proxy4D> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Err(Error::MissingInput(path));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| FormatError::file(&path, e))?;
        let m: ProxyManifest = serde_json::from_str(&text).map_err(FormatError::from)?;
        let background = read_ply(dir.join(BACKGROUND_FILE))?;
        let foreground =
            (0..m.frame_count).map(|t| read_ply(dir.join(foreground_file(t)))).collect::<Result<Vec<_>, _>>()?;
        let counts_ok = background.len() == m.background_points
            && foreground.iter().map(|c| c.len()).eq(m.foreground_points.iter().copied());
        if !counts_ok {
            return Err(FormatError::Manifest("point counts disagree with the PLY files".into()).into());
        }
        if m.frame_count == 0 {
            return Err(FormatError::Manifest("frame_count is 0".into()).into());
        }
        Ok(Proxy4D { background, foreground, scene_scale: m.scene_scale, provenance: m.provenance })
    }
}

pub const BACKGROUND_FILE: &str = "background.ply";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn foreground_file(t: usize) -> String {
    format!("fg_{t:04}.ply")
}

#[derive(Debug, Serialize, Deserialize)]
struct ProxyManifest {
    frame_count: usize,
    scene_scale: f64,
    background_points: usize,
    foreground_points: Vec<usize>,
    #[serde(default)]
    provenance: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pivot {
    Point(Vec3),
    /// Each frame scales about its own foreground centroid.
    FrameCentroid,
}

/// Unions `a` with `b` mapped through `placement`. `b`'s frame `k` lands on
/// `a`'s frame `k + frame_offset`; the output covers the overlapping frames,
/// renumbered from 0.
pub fn composite(a: &Proxy4D, b: &Proxy4D, placement: &SimilarityST, frame_offset: i64) -> Result<Proxy4D> {
    let ta = a.frame_count() as i64;
    let tb = b.frame_count() as i64;
    let start = frame_offset.max(0);
    let end = ta.min(tb + frame_offset);
    if end <= start {
        return Err(Error::EmptyOverlap);
    }
    let background = a.background.union(&apply_similarity(placement, &b.background));
    let foreground: Vec<PointCloud> = (start..end)
        .map(|t| {
            let fb = &b.foreground[(t - frame_offset) as usize];
            a.foreground[t as usize].union(&apply_similarity(placement, fb))
        })
        .collect();
    let mut out = Proxy4D::assemble(background, foreground)?;
    out.provenance = a.provenance.clone();
    out.provenance.insert(
        "composite".into(),
        serde_json::json!({
            "placement_scale": placement.scale(),
            "placement_translation": [placement.translation().x, placement.translation().y, placement.translation().z],
            "frame_offset": frame_offset,
        }),
    );
    Ok(out)
}

/// Stratified subsample to at most `budget` points: the index range is cut
/// into `budget` equal strata and one seeded pick is taken from each, so the
/// original order is preserved and repeated calls agree.
pub fn decimate_cloud(cloud: &PointCloud, budget: usize) -> PointCloud {
    let n = cloud.len();
    if budget >= n {
        return cloud.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DECIMATE_SEED ^ n as u64);
    let (n128, k128) = (n as u128, budget as u128);
    let picks: Vec<usize> = (0..k128)
        .map(|i| {
            let lo = (i * n128 / k128) as usize;
            let hi = ((i + 1) * n128 / k128) as usize;
            lo + rng.random_range(0..hi - lo)
        })
        .collect();
    cloud.select(&picks)
}
