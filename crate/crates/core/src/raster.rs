//! Per-pixel grids: point maps, binary masks and RGB images.

use crate::camera::Vec3;
use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};

/// Marker stored at pixels with no valid 3D point.
pub const INVALID_POINT: Vec3 = Vec3::new(f64::NAN, f64::NAN, f64::NAN);

#[inline]
pub fn is_valid_point(p: &Vec3) -> bool {
    p.x.is_finite() && p.y.is_finite() && p.z.is_finite()
}

/// Row-major grid of 3D points, one per pixel, with optional confidences.
///
/// Invalid pixels hold [`INVALID_POINT`] and, when confidences are present,
/// confidence 0. An optional color grid rides along for export; it is not
/// part of the PMAP container.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    width: usize,
    height: usize,
    points: Vec<Vec3>,
    confidence: Option<Vec<f64>>,
    colors: Option<Vec<Rgb>>,
}

impl PointMap {
    pub fn new(width: usize, height: usize, mut points: Vec<Vec3>, mut confidence: Option<Vec<f64>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("point map dimensions must be positive".into()));
        }
        let n = width * height;
        if points.len() != n {
            return Err(Error::InvalidArgument(format!("point grid has {} entries, expected {n}", points.len())));
        }
        if let Some(conf) = &mut confidence {
            if conf.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "confidence grid has {} entries, expected {n}",
                    conf.len()
                )));
            }
            for (c, p) in conf.iter_mut().zip(points.iter_mut()) {
                if !(0.0..=1.0).contains(c) {
                    return Err(Error::InvalidArgument(format!("confidence {c} outside [0, 1]")));
                }
                if !is_valid_point(p) {
                    *c = 0.0;
                }
            }
        }
        for p in points.iter_mut() {
            if !is_valid_point(p) {
                *p = INVALID_POINT;
            }
        }
        Ok(Self { width, height, points, confidence, colors: None })
    }

    /// All pixels invalid.
    pub fn empty(width: usize, height: usize, with_confidence: bool) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![INVALID_POINT; n], with_confidence.then(|| vec![0.0; n]))
    }

    pub fn with_colors(mut self, colors: Vec<Rgb>) -> Result<Self> {
        if colors.len() != self.points.len() {
            return Err(Error::InvalidArgument("color grid size mismatch".into()));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn confidence(&self) -> Option<&[f64]> {
        self.confidence.as_deref()
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn point(&self, x: usize, y: usize) -> &Vec3 {
        &self.points[self.index(x, y)]
    }

    /// Confidence of pixel `i`; 1 when the map has no confidence grid and
    /// the point is valid.
    #[inline]
    pub fn confidence_at(&self, i: usize) -> f64 {
        match &self.confidence {
            Some(c) => c[i],
            None if is_valid_point(&self.points[i]) => 1.0,
            None => 0.0,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.points.iter().filter(|p| is_valid_point(p)).count()
    }

    pub(crate) fn points_mut(&mut self) -> &mut [Vec3] {
        &mut self.points
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidArgument(format!("mask of {} values cannot be {width}x{height}", values.len())));
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!("image of {} pixels cannot be {width}x{height}", pixels.len())));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: Rgb) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    /// One plane per channel.
    pub fn channels(&self) -> [Vec<u8>; 3] {
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for (c, plane) in out.iter_mut().enumerate() {
            *plane = self.pixels.iter().map(|p| p[c]).collect();
        }
        out
    }

    pub fn from_channels(width: usize, height: usize, r: &[u8], g: &[u8], b: &[u8]) -> Result<Self> {
        let n = width * height;
        if r.len() != n || g.len() != n || b.len() != n {
            return Err(Error::InvalidArgument("channel planes differ in size".into()));
        }
        Self::new(width, height, (0..n).map(|i| [r[i], g[i], b[i]]).collect())
    }
}

pub(crate) fn check_dims(what: &'static str, expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { what, expected, found });
    }
    Ok(())
}

/// Points at pixels where `mask == keep`, confidence `>= conf_min` and the
/// position is finite, in row-major order. Confidences and colors carried by
/// the map are carried into the cloud.
pub fn mask_pointmap(pm: &PointMap, mask: &BinaryMask, keep: bool, conf_min: f64) -> Result<PointCloud> {
    check_dims("mask", pm.dims(), mask.dims())?;
    let mut cloud = PointCloud::with_attributes(pm.colors.is_some(), pm.confidence.is_some(), 0);
    for (i, (p, &m)) in pm.points.iter().zip(&mask.values).enumerate() {
        if m != keep || !is_valid_point(p) {
            continue;
        }
        let c = pm.confidence_at(i);
        if c < conf_min {
            continue;
        }
        cloud.push(*p, pm.colors.as_ref().map(|col| col[i]), Some(c));
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: usize, h: usize) -> PointMap {
        let pts = (0..w * h)
            .map(|i| if i % 7 == 3 { INVALID_POINT } else { Vec3::new(i as f64, (i / w) as f64, 1.0 + i as f64 * 0.1) })
            .collect();
        PointMap::new(w, h, pts, None).unwrap()
    }

    #[test]
    fn all_true_keeps_every_finite_point() {
        let pm = grid(9, 5);
        let mask = BinaryMask::filled(9, 5, true).unwrap();
        let c = mask_pointmap(&pm, &mask, true, 0.0).unwrap();
        assert_eq!(c.len(), pm.valid_count());
    }

    #[test]
    fn all_false_keeps_nothing() {
        let pm = grid(9, 5);
        let mask = BinaryMask::filled(9, 5, false).unwrap();
        assert!(mask_pointmap(&pm, &mask, true, 0.0).unwrap().is_empty());
    }

    #[test]
    fn checkerboard_counts_match_pixel_count() {
        let (w, h) = (16, 11);
        let pts = (0..w * h).map(|i| Vec3::new(i as f64, 0.0, 1.0)).collect();
        let pm = PointMap::new(w, h, pts, None).unwrap();
        let vals: Vec<bool> = (0..w * h).map(|i| (i % w + i / w) % 2 == 0).collect();
        // counting oracle: even-parity cells of a 16x11 board
        let mut expected = 0;
        for y in 0..h {
            for x in 0..w {
                if (x + y) % 2 == 0 {
                    expected += 1;
                }
            }
        }
        let mask = BinaryMask::new(w, h, vals).unwrap();
        assert_eq!(mask_pointmap(&pm, &mask, true, 0.0).unwrap().len(), expected);
        assert_eq!(mask_pointmap(&pm, &mask, false, 0.0).unwrap().len(), w * h - expected);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let pm = grid(4, 4);
        let mask = BinaryMask::filled(4, 5, true).unwrap();
        assert!(matches!(mask_pointmap(&pm, &mask, true, 0.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_pixels_get_zero_confidence() {
        let pm = PointMap::new(2, 1, vec![INVALID_POINT, Vec3::zeros()], Some(vec![0.9, 0.8])).unwrap();
        assert_eq!(pm.confidence().unwrap(), &[0.0, 0.8]);
    }

    proptest! {
        #[test]
        fn keep_and_drop_partition_finite_pixels(
            w in 1usize..12, h in 1usize..12, seed in any::<u64>()
        ) {
            let n = w * h;
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); s >> 33 };
            let pts = (0..n).map(|i| if next() % 5 == 0 { INVALID_POINT } else { Vec3::new(i as f64, 1.0, 2.0) }).collect();
            let conf = (0..n).map(|_| (next() % 1000) as f64 / 1000.0).collect();
            let pm = PointMap::new(w, h, pts, Some(conf)).unwrap();
            let mask = BinaryMask::new(w, h, (0..n).map(|_| next() % 2 == 0).collect()).unwrap();
            let a = mask_pointmap(&pm, &mask, true, 0.0).unwrap();
            let b = mask_pointmap(&pm, &mask, false, 0.0).unwrap();
            prop_assert_eq!(a.len() + b.len(), pm.valid_count());
            let mut xs: Vec<f64> = a.positions().iter().chain(b.positions()).map(|p| p.x).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            prop_assert_eq!(xs.len(), pm.valid_count());
        }
    }
}
