//! Colored point clouds and the scale+translation similarity acting on them.

use crate::camera::Vec3;
use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// Unordered 3D points with optional per-point colors and confidences.
///
/// Positions are always finite; the optional attribute lists, when present,
/// have exactly one entry per position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    positions: Vec<Vec3>,
    colors: Option<Vec<Rgb>>,
    confidences: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_positions(positions: Vec<Vec3>) -> Result<Self> {
        Self::from_parts(positions, None, None)
    }

    pub fn from_parts(positions: Vec<Vec3>, colors: Option<Vec<Rgb>>, confidences: Option<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = positions.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite position at index {bad}")));
        }
        if colors.as_ref().is_some_and(|c| c.len() != positions.len()) {
            return Err(Error::InvalidArgument("color list length differs from positions".into()));
        }
        if let Some(conf) = &confidences {
            if conf.len() != positions.len() {
                return Err(Error::InvalidArgument("confidence list length differs from positions".into()));
            }
            if conf.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::InvalidArgument("confidence outside [0, 1]".into()));
            }
        }
        Ok(Self { positions, colors, confidences })
    }

    /// Empty cloud that will carry colors (and confidences when asked).
    pub fn with_attributes(colors: bool, confidences: bool, capacity: usize) -> Self {
        Self {
            positions: Vec::with_capacity(capacity),
            colors: colors.then(|| Vec::with_capacity(capacity)),
            confidences: confidences.then(|| Vec::with_capacity(capacity)),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn confidences(&self) -> Option<&[f64]> {
        self.confidences.as_deref()
    }

    pub fn color(&self, i: usize) -> Option<Rgb> {
        self.colors.as_ref().map(|c| c[i])
    }

    /// Appends a point. Attributes the cloud does not carry are dropped;
    /// attributes the cloud carries but the caller omits get defaults
    /// (mid gray, confidence 1).
    pub(crate) fn push(&mut self, p: Vec3, color: Option<Rgb>, conf: Option<f64>) {
        debug_assert!(p.iter().all(|v| v.is_finite()));
        self.positions.push(p);
        if let Some(c) = &mut self.colors {
            c.push(color.unwrap_or([128, 128, 128]));
        }
        if let Some(c) = &mut self.confidences {
            c.push(conf.unwrap_or(1.0));
        }
    }

    pub(crate) fn push_from(&mut self, other: &PointCloud, i: usize) {
        self.push(other.positions[i], other.color(i), other.confidences.as_ref().map(|c| c[i]));
    }

    /// Appends every point of `other`, keeping attribute lists consistent.
    /// Attributes carried by either side are kept; points that lacked them
    /// get the defaults used by `push`.
    pub fn extend(&mut self, other: &PointCloud) {
        if self.colors.is_none() && other.colors.is_some() {
            self.colors = Some(vec![[128, 128, 128]; self.len()]);
        }
        if self.confidences.is_none() && other.confidences.is_some() {
            self.confidences = Some(vec![1.0; self.len()]);
        }
        self.positions.reserve(other.len());
        for i in 0..other.len() {
            self.push_from(other, i);
        }
    }

    /// Concatenation, `self` first.
    pub fn union(&self, other: &PointCloud) -> PointCloud {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    /// Subset by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            colors: self.colors.as_ref().map(|c| indices.iter().map(|&i| c[i]).collect()),
            confidences: self.confidences.as_ref().map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> PointCloud {
        PointCloud {
            positions: self.positions.iter().map(f).collect(),
            colors: self.colors.clone(),
            confidences: self.confidences.clone(),
        }
    }

    pub fn centroid(&self) -> Option<Vec3> {
        centroid(&self.positions)
    }

    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        bounding_box(&self.positions)
    }

    /// Length of the bounding-box diagonal, 0 for an empty cloud.
    pub fn diagonal(&self) -> f64 {
        self.bounding_box().map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }
}

pub fn centroid(points: &[Vec3]) -> Option<Vec3> {
    if points.is_empty() {
        return None;
    }
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p);
    Some(sum / points.len() as f64)
}

pub fn bounding_box(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = points.first()?;
    Some(points.iter().fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
}

/// `x ↦ scale · x + translation`, with `scale > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityST {
    scale: f64,
    translation: Vec3,
}

impl SimilarityST {
    pub fn new(scale: f64, translation: Vec3) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("similarity scale must be > 0, got {scale}")));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("similarity translation is not finite".into()));
        }
        Ok(Self { scale, translation })
    }

    pub fn identity() -> Self {
        Self { scale: 1.0, translation: Vec3::zeros() }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub(crate) fn with_translation(&self, translation: Vec3) -> Self {
        Self { scale: self.scale, translation }
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.scale * p + self.translation
    }

    /// `self` after `first`: `x ↦ s₂(s₁x + t₁) + t₂`.
    pub fn after(&self, first: &SimilarityST) -> SimilarityST {
        SimilarityST { scale: self.scale * first.scale, translation: self.scale * first.translation + self.translation }
    }
}

/// Maps every position through `st`; attributes are carried over unchanged.
pub fn apply_similarity(st: &SimilarityST, cloud: &PointCloud) -> PointCloud {
    cloud.map_positions(|p| st.apply(p))
}
