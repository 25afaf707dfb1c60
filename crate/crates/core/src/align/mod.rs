//! Placement of canonical completions in the global scene: dense
//! correspondences, robust scale+translation fits, temporal smoothing.

mod correspondence;
mod fit;
mod robust;
mod smooth;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use correspondence::{build_correspondences, CorrespondenceSet};
pub use fit::{fit_scale_translation, weighted_residual, ScaleTranslationFit, MIN_SCALE};
pub use robust::{robust_fit, FrameAlignment, RobustParams};
pub use smooth::{rts_smooth_1d, smooth_placements, smooth_track, SmootherConfig};

use crate::camera::Vec3;
use crate::cloud::{apply_similarity, PointCloud};
use crate::complete::CanonicalCompletion;
use crate::error::{Error, FormatError, Result};
use crate::lift::{GlobalFrame, DEFAULT_CONF_MIN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignParams {
    pub conf_min: f64,
    pub robust: RobustParams,
    /// `None` disables temporal smoothing.
    pub smoother: Option<SmootherConfig>,
}

impl AlignParams {
    pub fn for_scene_scale(scene_scale: f64) -> Self {
        Self {
            conf_min: DEFAULT_CONF_MIN,
            robust: RobustParams::default(),
            smoother: Some(SmootherConfig::for_scene_scale(scene_scale)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFrame {
    pub index: usize,
    /// Fit before smoothing (after degenerate substitution).
    pub raw: FrameAlignment,
    /// Placement actually applied to the cloud.
    pub smoothed: FrameAlignment,
    /// Source of the transform when this frame was degenerate.
    pub substituted_from: Option<usize>,
    pub cloud: PointCloud,
}

fn nearest_valid(t: usize, valid: &[bool]) -> Option<usize> {
    (1..valid.len()).find_map(|d| {
        if t >= d && valid[t - d] {
            Some(t - d)
        } else if t + d < valid.len() && valid[t + d] {
            Some(t + d)
        } else {
            None
        }
    })
}

/// Aligns every canonical completion into global space. Frames are matched
/// by position in the two slices.
pub fn align_sequence(
    canonical: &[CanonicalCompletion],
    global: &[GlobalFrame],
    params: &AlignParams,
) -> Result<Vec<AlignedFrame>> {
    if canonical.is_empty() {
        return Err(Error::Empty("alignment needs at least one frame"));
    }
    if canonical.len() != global.len() {
        return Err(Error::InvalidArgument(format!(
            "{} canonical frames for {} global frames",
            canonical.len(),
            global.len()
        )));
    }
    if let Some(s) = &params.smoother {
        s.validate()?;
    }
    let fits = canonical
        .par_iter()
        .zip(global)
        .map(|(c, g)| {
            let corrs = build_correspondences(&c.ref_pointmap, &g.pointmap, &g.mask, params.conf_min)?;
            Ok(robust_fit(&corrs, &params.robust))
        })
        .collect::<Result<Vec<_>>>()?;
    let valid: Vec<bool> = fits.iter().map(|f| !f.degenerate).collect();
    if !valid.iter().any(|v| *v) {
        return Err(Error::AllDegenerate);
    }
    let mut raw = Vec::with_capacity(fits.len());
    let mut subst = Vec::with_capacity(fits.len());
    for (t, f) in fits.iter().enumerate() {
        if valid[t] {
            raw.push(f.clone());
            subst.push(None);
        } else {
            let src = nearest_valid(t, &valid).expect("some frame is valid");
            let mut g = f.clone();
            g.st = fits[src].st;
            raw.push(g);
            subst.push(Some(src));
        }
    }
    // measurement: centroid of the whole transformed completion
    let measured: Vec<Option<Vec3>> =
        raw.iter().zip(canonical).map(|(a, c)| c.cloud.centroid().map(|m| a.st.apply(&m))).collect();
    for (a, m) in raw.iter_mut().zip(&measured) {
        if let Some(m) = m {
            a.centroid_global = *m;
        }
    }
    let smoothed: Vec<FrameAlignment> = match &params.smoother {
        Some(cfg) if raw.len() > 1 => {
            let track = smooth_track(&measured, cfg);
            raw.iter()
                .zip(&measured)
                .zip(track)
                .map(|((a, m), c)| {
                    let mut out = a.clone();
                    if let Some(m) = m {
                        out.st = a.st.with_translation(a.st.translation() + (c - m));
                        out.centroid_global = c;
                    }
                    out
                })
                .collect()
        }
        _ => raw.clone(),
    };
    Ok(raw
        .into_iter()
        .zip(smoothed)
        .zip(subst)
        .zip(canonical)
        .map(|(((raw, smoothed), substituted_from), c)| AlignedFrame {
            index: c.index,
            cloud: apply_similarity(&smoothed.st, &c.cloud),
            raw,
            smoothed,
            substituted_from,
        })
        .collect())
}

pub const ALIGNMENT_CSV_HEADER: [&str; 18] = [
    "t",
    "s",
    "tx",
    "ty",
    "tz",
    "inliers",
    "rms_residual",
    "degenerate",
    "substituted_from",
    "raw_cx",
    "raw_cy",
    "raw_cz",
    "smooth_cx",
    "smooth_cy",
    "smooth_cz",
    "raw_tx",
    "raw_ty",
    "raw_tz",
];

/// Per-frame diagnostics; `s`/`t*` are the applied (smoothed) placement.
pub fn write_alignment_csv<W: Write>(frames: &[AlignedFrame], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Format(FormatError::InvalidValue(format!("csv: {e}")));
    w.write_record(ALIGNMENT_CSV_HEADER).map_err(csv_err)?;
    for (t, f) in frames.iter().enumerate() {
        let (s, r) = (&f.smoothed, &f.raw);
        let tt = s.st.translation();
        let rt = r.st.translation();
        let rec = [
            t.to_string(),
            s.st.scale().to_string(),
            tt.x.to_string(),
            tt.y.to_string(),
            tt.z.to_string(),
            r.inliers.to_string(),
            r.rms_residual.to_string(),
            (r.degenerate as u8).to_string(),
            f.substituted_from.map_or(String::new(), |v| v.to_string()),
            r.centroid_global.x.to_string(),
            r.centroid_global.y.to_string(),
            r.centroid_global.z.to_string(),
            s.centroid_global.x.to_string(),
            s.centroid_global.y.to_string(),
            s.centroid_global.z.to_string(),
            rt.x.to_string(),
            rt.y.to_string(),
            rt.z.to_string(),
        ];
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_alignment_csv_file(frames: &[AlignedFrame], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_alignment_csv(frames, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| FormatError::file(path, e))?;
    Ok(())
}
