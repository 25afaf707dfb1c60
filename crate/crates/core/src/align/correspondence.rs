use crate::camera::Vec3;
use crate::error::Result;
use crate::raster::{check_dims, is_valid_point, BinaryMask, PointMap};

/// Pixel-synchronised 3D–3D pairs between the canonical reconstruction and
/// the global one of the same source frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrespondenceSet {
    pub canonical: Vec<Vec3>,
    pub global: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub pixels: Vec<(u32, u32)>,
}

impl CorrespondenceSet {
    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    pub fn from_pairs(canonical: Vec<Vec3>, global: Vec<Vec3>, weights: Vec<f64>) -> Self {
        assert!(canonical.len() == global.len() && global.len() == weights.len());
        let pixels = (0..canonical.len() as u32).map(|i| (i, 0)).collect();
        Self { canonical, global, weights, pixels }
    }
}

/// One pair per foreground pixel where both points are finite and both
/// confidences reach `conf_min`. The weight is the product of the two
/// confidences (a map without confidences counts as 1).
pub fn build_correspondences(
    ref_canonical: &PointMap,
    global: &PointMap,
    mask: &BinaryMask,
    conf_min: f64,
) -> Result<CorrespondenceSet> {
    check_dims("global point map", ref_canonical.dims(), global.dims())?;
    check_dims("mask", ref_canonical.dims(), mask.dims())?;
    let w = ref_canonical.width();
    let mut out = CorrespondenceSet::default();
    for (i, &m) in mask.values().iter().enumerate() {
        if !m {
            continue;
        }
        let (p, q) = (&ref_canonical.points()[i], &global.points()[i]);
        if !is_valid_point(p) || !is_valid_point(q) {
            continue;
        }
        let (cp, cq) = (ref_canonical.confidence_at(i), global.confidence_at(i));
        if cp < conf_min || cq < conf_min {
            continue;
        }
        out.canonical.push(*p);
        out.global.push(*q);
        out.weights.push(cp * cq);
        out.pixels.push(((i % w) as u32, (i / w) as u32));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::INVALID_POINT;

    fn maps() -> (PointMap, PointMap, BinaryMask) {
        let (w, h) = (7, 5);
        let a: Vec<Vec3> =
            (0..w * h).map(|i| if i % 6 == 1 { INVALID_POINT } else { Vec3::new(i as f64, 0.0, 1.0) }).collect();
        let b: Vec<Vec3> =
            (0..w * h).map(|i| if i % 4 == 2 { INVALID_POINT } else { Vec3::new(2.0 * i as f64, 1.0, 3.0) }).collect();
        let ca = (0..w * h).map(|i| 0.5 + 0.5 * ((i % 3) as f64 / 2.0)).collect();
        let mask = BinaryMask::new(w, h, (0..w * h).map(|i| i % 5 != 0).collect()).unwrap();
        (PointMap::new(w, h, a, Some(ca)).unwrap(), PointMap::new(w, h, b, None).unwrap(), mask)
    }

    #[test]
    fn empty_mask_gives_no_pairs() {
        let (a, b, _) = maps();
        let m = BinaryMask::filled(7, 5, false).unwrap();
        assert!(build_correspondences(&a, &b, &m, 0.0).unwrap().is_empty());
    }

    #[test]
    fn pair_count_matches_counting_oracle() {
        let (a, b, m) = maps();
        let c = build_correspondences(&a, &b, &m, 0.0).unwrap();
        let expect = (0..35).filter(|i| i % 5 != 0 && i % 6 != 1 && i % 4 != 2).count();
        assert_eq!(c.len(), expect);
        for (k, &(u, v)) in c.pixels.iter().enumerate() {
            let i = (v * 7 + u) as usize;
            assert_eq!(c.canonical[k].x, i as f64);
            assert_eq!(c.global[k].x, 2.0 * i as f64);
            assert_eq!(c.weights[k], a.confidence_at(i));
        }
    }

    #[test]
    fn confidence_above_everything_empties_the_set() {
        let (a, b, m) = maps();
        assert!(build_correspondences(&a, &b, &m, 1.01).unwrap().is_empty());
        let c = build_correspondences(&a, &b, &m, 0.9).unwrap();
        assert!(c.weights.iter().all(|w| *w >= 0.9));
    }

    #[test]
    fn dimension_mismatch() {
        let (a, _, m) = maps();
        let small = PointMap::empty(3, 3, false).unwrap();
        assert!(build_correspondences(&a, &small, &m, 0.0).is_err());
    }
}
