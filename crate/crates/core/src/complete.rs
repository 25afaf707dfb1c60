//! Canonical object completion: merge the source view with four synthesized
//! novel views (white backgrounds removed by color thresholding) into one
//! geometry-complete canonical foreground cloud.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::raster::{check_dims, mask_pointmap, BinaryMask, PointMap, RgbImage};

pub const NOVEL_VIEW_COUNT: usize = 4;
pub const DEFAULT_WHITE_THRESH: u8 = 240;

/// How to find the object in a novel view.
#[derive(Debug, Clone, PartialEq)]
pub enum ViewGuide {
    /// Rendered image on a white background; thresholded at merge time.
    Image(RgbImage),
    Mask(BinaryMask),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NovelView {
    pub pointmap: PointMap,
    pub guide: ViewGuide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFrame {
    pub index: usize,
    /// Canonical-space point map registered pixel-for-pixel to the source image.
    pub ref_pointmap: PointMap,
    pub ref_mask: BinaryMask,
    pub novel_views: Vec<NovelView>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalCompletion {
    pub index: usize,
    pub cloud: PointCloud,
    pub ref_pointmap: PointMap,
    /// Points contributed by each of the five views, source view first.
    pub view_counts: [usize; NOVEL_VIEW_COUNT + 1],
}

/// Background (false) where `min(R, G, B) >= white_thresh`.
pub fn color_threshold_mask(image: &RgbImage, white_thresh: u8) -> BinaryMask {
    let values = image.pixels().iter().map(|p| p.iter().copied().min().unwrap() < white_thresh).collect();
    BinaryMask::new(image.width(), image.height(), values).expect("image dimensions are valid")
}

/// Source view first, then novel views 1..=4, each row-major. No
/// deduplication across views.
pub fn merge_views(frame: &CanonicalFrame, conf_min: f64, white_thresh: u8) -> Result<CanonicalCompletion> {
    if frame.novel_views.len() != NOVEL_VIEW_COUNT {
        return Err(Error::InvalidArgument(format!(
            "expected {NOVEL_VIEW_COUNT} novel views, got {}",
            frame.novel_views.len()
        )));
    }
    let mut cloud = mask_pointmap(&frame.ref_pointmap, &frame.ref_mask, true, conf_min)?;
    let mut view_counts = [0; NOVEL_VIEW_COUNT + 1];
    view_counts[0] = cloud.len();
    for (k, view) in frame.novel_views.iter().enumerate() {
        let part = match &view.guide {
            ViewGuide::Mask(m) => mask_pointmap(&view.pointmap, m, true, conf_min)?,
            ViewGuide::Image(img) => {
                check_dims("novel view image", view.pointmap.dims(), img.dims())?;
                let mask = color_threshold_mask(img, white_thresh);
                let pm = if view.pointmap.colors().is_none() {
                    view.pointmap.clone().with_colors(img.pixels().to_vec())?
                } else {
                    view.pointmap.clone()
                };
                mask_pointmap(&pm, &mask, true, conf_min)?
            }
        };
        view_counts[k + 1] = part.len();
        cloud.extend(&part);
    }
    Ok(CanonicalCompletion { index: frame.index, cloud, ref_pointmap: frame.ref_pointmap.clone(), view_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Vec3;
    use crate::raster::INVALID_POINT;

    fn pm(w: usize, h: usize, tag: f64) -> PointMap {
        let pts = (0..w * h).map(|i| if i % 9 == 4 { INVALID_POINT } else { Vec3::new(tag, i as f64, 1.0) }).collect();
        PointMap::new(w, h, pts, None).unwrap()
    }

    fn half_image(w: usize, h: usize, gray: u8) -> RgbImage {
        RgbImage::new(w, h, (0..w * h).map(|i| if i % w < w / 2 { [255, 255, 255] } else { [gray; 3] }).collect())
            .unwrap()
    }

    #[test]
    fn thresholding() {
        let white = RgbImage::filled(4, 3, [255, 255, 255]).unwrap();
        assert_eq!(color_threshold_mask(&white, 240).count(), 0);
        let black = RgbImage::filled(4, 3, [0, 0, 0]).unwrap();
        assert_eq!(color_threshold_mask(&black, 240).count(), 12);
        let m = color_threshold_mask(&half_image(10, 6, 200), 240);
        assert_eq!(m.count(), 30);
        assert!(m.get(5, 0) && !m.get(4, 0));
        // a single channel below threshold keeps the pixel
        let tinted = RgbImage::filled(1, 1, [255, 239, 255]).unwrap();
        assert_eq!(color_threshold_mask(&tinted, 240).count(), 1);
    }

    fn frame(views: Vec<NovelView>) -> CanonicalFrame {
        CanonicalFrame {
            index: 0,
            ref_pointmap: pm(8, 6, -1.0),
            ref_mask: BinaryMask::new(8, 6, (0..48).map(|i| i % 2 == 0).collect()).unwrap(),
            novel_views: views,
        }
    }

    #[test]
    fn white_novel_views_contribute_nothing() {
        let views = (0..4)
            .map(|k| NovelView {
                pointmap: pm(5, 5, k as f64),
                guide: ViewGuide::Image(RgbImage::filled(5, 5, [250, 250, 250]).unwrap()),
            })
            .collect();
        let f = frame(views);
        let c = merge_views(&f, 0.0, 240).unwrap();
        let ref_only = mask_pointmap(&f.ref_pointmap, &f.ref_mask, true, 0.0).unwrap();
        assert_eq!(c.cloud.positions(), ref_only.positions());
        assert_eq!(c.view_counts[1..], [0, 0, 0, 0]);
    }

    #[test]
    fn counts_and_order() {
        let views: Vec<NovelView> = (0..4)
            .map(|k| NovelView { pointmap: pm(10, 6, k as f64), guide: ViewGuide::Image(half_image(10, 6, 90)) })
            .collect();
        let f = frame(views.clone());
        let c = merge_views(&f, 0.0, 240).unwrap();
        // counting oracle over the five masks
        let mut expect = [0usize; 5];
        for i in 0..48 {
            if i % 2 == 0 && i % 9 != 4 {
                expect[0] += 1;
            }
        }
        for e in expect.iter_mut().skip(1) {
            for i in 0..60 {
                if i % 10 >= 5 && i % 9 != 4 {
                    *e += 1;
                }
            }
        }
        assert_eq!(c.view_counts, expect);
        assert_eq!(c.cloud.len(), expect.iter().sum::<usize>());
        let tags: Vec<f64> = c.cloud.positions().iter().map(|p| p.x).collect();
        assert!(tags.windows(2).all(|w| w[0] <= w[1]), "views must stay in order");
        assert_eq!(c.cloud.colors().unwrap()[0], [128, 128, 128]);
        assert_eq!(c.cloud.colors().unwrap()[expect[0]], [90, 90, 90]);
    }

    #[test]
    fn background_pixels_are_never_read() {
        let views: Vec<NovelView> = (0..4)
            .map(|k| NovelView { pointmap: pm(10, 6, k as f64), guide: ViewGuide::Image(half_image(10, 6, 90)) })
            .collect();
        let f = frame(views);
        let base = merge_views(&f, 0.0, 240).unwrap();
        let mut g = f.clone();
        // move every background point of view 2 and of the source view
        let moved: Vec<Vec3> = g.novel_views[2]
            .pointmap
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| if i % 10 < 5 { Vec3::new(99.0, 99.0, 99.0) } else { *p })
            .collect();
        g.novel_views[2].pointmap = PointMap::new(10, 6, moved, None).unwrap();
        let moved_ref: Vec<Vec3> = g
            .ref_pointmap
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| if i % 2 == 1 { Vec3::new(-5.0, 0.0, 0.0) } else { *p })
            .collect();
        g.ref_pointmap = PointMap::new(8, 6, moved_ref, None).unwrap();
        assert_eq!(merge_views(&g, 0.0, 240).unwrap().cloud, base.cloud);
    }

    #[test]
    fn wrong_view_count_and_dims() {
        assert!(merge_views(&frame(vec![]), 0.0, 240).is_err());
        let views = (0..4)
            .map(|_| NovelView {
                pointmap: pm(5, 5, 0.0),
                guide: ViewGuide::Mask(BinaryMask::filled(5, 4, true).unwrap()),
            })
            .collect();
        assert!(matches!(merge_views(&frame(views), 0.0, 240), Err(Error::DimensionMismatch { .. })));
    }
}
