use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complete::{CanonicalFrame, ViewGuide};
use crate::error::{FormatError, Result};
use crate::io::layout::{self, CANONICAL_DIR, GLOBAL_DIR};
use crate::io::{write_mask, write_pointmap, write_rgb_triplet, write_trajectory};
use crate::lift::GlobalFrame;
use crate::raster::RgbImage;
use crate::synth::{Corruption, NoiseSpec, SceneTruth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    /// Object-to-global placement.
    pub scale: f64,
    pub translation: [f64; 3],
    /// Global centroid of the object samples.
    pub centroid: [f64; 3],
    /// Depth scale factor the corrupted frame was built with.
    pub depth_scale: f64,
    /// Canonical-to-global map encoded by the (corrupted) global frame.
    pub effective_scale: f64,
    pub effective_translation: [f64; 3],
    pub outliers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub scene_scale: f64,
    pub canonical_scale: f64,
    pub background_points: usize,
    pub object_samples: usize,
    pub frames: Vec<FrameTruth>,
}

impl FixtureTruth {
    pub fn new(truth: &SceneTruth, canonical_scale: f64, corruption: Option<&[Corruption]>) -> Self {
        let c0 = truth.object.centroid().unwrap_or_default();
        let frames = truth
            .poses
            .iter()
            .enumerate()
            .map(|(t, gt)| {
                let (lambda, outliers) = corruption.map_or((1.0, 0), |c| (c[t].scale, c[t].outliers));
                let centre = truth.cameras[t].pose.center();
                let eff_t = lambda * gt.translation() + (1.0 - lambda) * centre;
                FrameTruth {
                    scale: gt.scale(),
                    translation: (*gt.translation()).into(),
                    centroid: gt.apply(&c0).into(),
                    depth_scale: lambda,
                    effective_scale: lambda * gt.scale() / canonical_scale,
                    effective_translation: eff_t.into(),
                    outliers,
                }
            })
            .collect();
        Self {
            scene_scale: truth.scene_scale(),
            canonical_scale,
            background_points: truth.background.len(),
            object_samples: truth.object.len(),
            frames,
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(FormatError::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| FormatError::file(path, e))?;
    Ok(())
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| FormatError::file(path, e))?;
    Ok(())
}

/// Writes the pipeline input layout (see [`crate::io::layout`]) plus
/// `truth.json`, `scene.json`, `noise.json` and `source_trajectory.json`.
pub fn write_fixture(
    dir: &Path,
    truth: &SceneTruth,
    global: &[GlobalFrame],
    canonical: &(dyn Fn(usize) -> Result<CanonicalFrame> + Sync),
    noise: &NoiseSpec,
    fixture_truth: &FixtureTruth,
) -> Result<()> {
    let gdir = dir.join(GLOBAL_DIR);
    let cdir = dir.join(CANONICAL_DIR);
    create_dir(&gdir)?;
    create_dir(&cdir)?;
    global.par_iter().try_for_each(|f| -> Result<()> {
        let t = f.index;
        write_pointmap(&f.pointmap, gdir.join(layout::pointmap_file(t)))?;
        write_mask(&f.mask, gdir.join(layout::mask_file(t)))?;
        if let Some(c) = f.pointmap.colors() {
            let (w, h) = f.pointmap.dims();
            write_rgb_triplet(&RgbImage::new(w, h, c.to_vec())?, gdir.join(layout::color_stem(t)))?;
        }
        Ok(())
    })?;
    // canonical frames are produced on demand so only a few are held at once
    (0..global.len()).into_par_iter().try_for_each(|t| -> Result<()> {
        let c = canonical(t)?;
        let fdir = layout::canonical_frame_dir(&cdir, c.index);
        create_dir(&fdir)?;
        write_pointmap(&c.ref_pointmap, fdir.join(layout::REF_FILE))?;
        for (k, v) in c.novel_views.iter().enumerate() {
            write_pointmap(&v.pointmap, fdir.join(layout::view_file(k + 1)))?;
            match &v.guide {
                ViewGuide::Image(img) => write_rgb_triplet(img, fdir.join(layout::view_stem(k + 1)))?,
                ViewGuide::Mask(m) => write_mask(m, fdir.join(layout::view_mask_file(k + 1)))?,
            }
        }
        Ok(())
    })?;
    write_trajectory(&truth.source_trajectory()?, dir.join(layout::SOURCE_TRAJECTORY_FILE))?;
    write_json(&truth.spec, &dir.join(layout::SCENE_FILE))?;
    write_json(noise, &dir.join(layout::NOISE_FILE))?;
    write_json(fixture_truth, &dir.join(layout::TRUTH_FILE))?;
    Ok(())
}
