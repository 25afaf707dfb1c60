//! End-to-end drivers over the on-disk layout in [`crate::io::layout`]:
//! fixture synthesis, proxy building and depth-scaffold rendering. Each
//! driver writes a run manifest with a SHA-256 digest per artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{align_sequence, write_alignment_csv_file, AlignParams, AlignedFrame, RobustParams, SmootherConfig};
use crate::complete::{
    merge_views, CanonicalCompletion, CanonicalFrame, NovelView, ViewGuide, DEFAULT_WHITE_THRESH, NOVEL_VIEW_COUNT,
};
use crate::error::{Error, FormatError, Result};
use crate::io::layout::{self, ALIGNMENT_CSV, CANONICAL_DIR, DEPTH_FILE, GLOBAL_DIR, PROXY_DIR, RUN_MANIFEST};
use crate::io::{read_mask, read_pointmap, read_rgb_triplet, read_trajectory, write_depth_sequence, write_mask};
use crate::lift::{build_scene_lift, GlobalFrame, DEFAULT_CONF_MIN};
use crate::proxy::{foreground_file, Proxy4D, BACKGROUND_FILE, MANIFEST_FILE};
use crate::raster::mask_pointmap;
use crate::render::{render_sequence, RenderConfig, RenderedSequence};
use crate::synth::{
    corrupt_monocular, generate_truth, simulate_capture, write_fixture, CanonicalOptions, CanonicalSimulator,
    FixtureTruth, NoiseSpec, SceneSpec,
};

/// Every tunable of `build-proxy` and `render`. Missing JSON fields take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root holding `global/` and `canonical/`; the specific directories
    /// below override it.
    pub input_dir: Option<PathBuf>,
    pub global_dir: Option<PathBuf>,
    pub mask_dir: Option<PathBuf>,
    pub canonical_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub conf_min: f64,
    /// Background voxel size; 0 keeps every point.
    pub voxel: f64,
    pub white_thresh: u8,
    pub mad_k: f64,
    pub min_corr: usize,
    pub robust_iters: usize,
    /// Merge the four novel views; off aligns the visible surface only.
    pub completion: bool,
    pub smoothing: bool,
    /// `None` derives the value from the scene scale.
    pub smoother_q: Option<f64>,
    pub smoother_r: Option<f64>,
    pub depth_ratio: f64,
    pub splat_radius: u32,
    pub dilation_passes: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let robust = RobustParams::default();
        Self {
            input_dir: None,
            global_dir: None,
            mask_dir: None,
            canonical_dir: None,
            output_dir: None,
            conf_min: DEFAULT_CONF_MIN,
            voxel: 0.0,
            white_thresh: DEFAULT_WHITE_THRESH,
            mad_k: robust.mad_k,
            min_corr: robust.min_corr,
            robust_iters: robust.iters,
            completion: true,
            smoothing: true,
            smoother_q: None,
            smoother_r: None,
            depth_ratio: 10.0,
            splat_radius: RenderConfig::default().splat_radius,
            dilation_passes: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(FormatError::from)?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::file(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(0.0..=1.0).contains(&self.conf_min) {
            return bad(format!("conf_min must lie in [0, 1], got {}", self.conf_min));
        }
        if !(self.voxel >= 0.0) || !self.voxel.is_finite() {
            return bad(format!("voxel must be >= 0, got {}", self.voxel));
        }
        if !(self.mad_k > 0.0) || !self.mad_k.is_finite() {
            return bad(format!("mad_k must be > 0, got {}", self.mad_k));
        }
        if self.min_corr < 2 {
            return bad(format!("min_corr must be >= 2, got {}", self.min_corr));
        }
        for (name, v) in [("smoother_q", self.smoother_q), ("smoother_r", self.smoother_r)] {
            if v.is_some_and(|v| !(v > 0.0) || !v.is_finite()) {
                return bad(format!("{name} must be > 0"));
            }
        }
        if !(self.depth_ratio >= 1.0) || !self.depth_ratio.is_finite() {
            return bad(format!("depth_ratio must be >= 1, got {}", self.depth_ratio));
        }
        Ok(())
    }

    fn require(&self, field: Option<&PathBuf>, sub: &str, what: &str) -> Result<PathBuf> {
        match (field, &self.input_dir) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(root)) => Ok(root.join(sub)),
            (None, None) => Err(Error::InvalidArgument(format!("no {what} directory given"))),
        }
    }

    pub fn global_path(&self) -> Result<PathBuf> {
        self.require(self.global_dir.as_ref(), GLOBAL_DIR, "global point map")
    }

    pub fn mask_path(&self) -> Result<PathBuf> {
        match &self.mask_dir {
            Some(p) => Ok(p.clone()),
            None => self.global_path(),
        }
    }

    pub fn canonical_path(&self) -> Result<PathBuf> {
        self.require(self.canonical_dir.as_ref(), CANONICAL_DIR, "canonical")
    }

    pub fn output_path(&self) -> Result<PathBuf> {
        self.output_dir.clone().ok_or_else(|| Error::InvalidArgument("no output directory given".into()))
    }

    pub fn render_config(&self) -> RenderConfig {
        RenderConfig { splat_radius: self.splat_radius, dilation_passes: self.dilation_passes }
    }

    pub fn align_params(&self, scene_scale: f64) -> AlignParams {
        let base = SmootherConfig::for_scene_scale(scene_scale);
        AlignParams {
            conf_min: self.conf_min,
            robust: RobustParams { min_corr: self.min_corr, mad_k: self.mad_k, iters: self.robust_iters },
            smoother: self.smoothing.then(|| SmootherConfig {
                process_noise: self.smoother_q.unwrap_or(base.process_noise),
                measurement_noise_lateral: self.smoother_r.unwrap_or(base.measurement_noise_lateral),
                depth_ratio: self.depth_ratio,
            }),
        }
    }
}

/// Machine-readable record of one command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub summary: serde_json::Value,
    /// Path relative to the output directory → hex SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::file(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hashes `artifacts` (relative to `dir`) and writes `dir/manifest.json`.
pub fn write_run_manifest(
    dir: &Path,
    command: &str,
    summary: serde_json::Value,
    artifacts: &[String],
) -> Result<RunManifest> {
    write_run_manifest_at(&dir.join(RUN_MANIFEST), dir, command, summary, artifacts)
}

/// As [`write_run_manifest`] with an explicit manifest path.
pub fn write_run_manifest_at(
    path: &Path,
    dir: &Path,
    command: &str,
    summary: serde_json::Value,
    artifacts: &[String],
) -> Result<RunManifest> {
    let hashes = artifacts
        .par_iter()
        .map(|rel| Ok((rel.clone(), sha256_file(&dir.join(rel))?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        summary,
        artifacts: hashes,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(FormatError::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| FormatError::file(path, e))?;
    Ok(manifest)
}

fn rel_files(root: &Path, dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| FormatError::file(&d, e))? {
            let p = entry.map_err(|e| FormatError::file(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).expect("walk stays under root");
                out.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SynthReport {
    pub truth: FixtureTruth,
    pub manifest: RunManifest,
}

/// Generates a scene, emulates capture, corruption and canonical
/// reconstruction, and writes the fixture to `out`.
pub fn synthesize(spec: &SceneSpec, noise: &NoiseSpec, canon: &CanonicalOptions, out: &Path) -> Result<SynthReport> {
    let truth = generate_truth(spec)?;
    let clean = simulate_capture(&truth);
    let sim = CanonicalSimulator::new(&truth, canon)?;
    let (global, corruption) = corrupt_monocular(&truth, &clean, noise)?;
    let fixture_truth = FixtureTruth::new(&truth, canon.canonical_scale, Some(&corruption));
    std::fs::create_dir_all(out).map_err(|e| FormatError::file(out, e))?;
    write_fixture(out, &truth, &global, &|t| sim.frame(&clean[t]), noise, &fixture_truth)?;
    let summary = serde_json::json!({
        "frames": truth.frame_count(),
        "width": spec.camera.width,
        "height": spec.camera.height,
        "background_points": truth.background.len(),
        "object_samples": truth.object.len(),
        "scene_scale": truth.scene_scale(),
        "canonical_scale": canon.canonical_scale,
    });
    let files: Vec<String> = rel_files(out, out)?.into_iter().filter(|f| f != RUN_MANIFEST).collect();
    let manifest = write_run_manifest(out, "synth", summary, &files)?;
    Ok(SynthReport { truth: fixture_truth, manifest })
}

fn must_exist(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingInput(path))
    }
}

/// Frames `0..T` where `frame_{t}.pmap` exists for every `t < T`.
fn discover_frames(global: &Path) -> Result<usize> {
    let mut t = 0;
    while global.join(layout::pointmap_file(t)).exists() {
        t += 1;
    }
    if t == 0 {
        return Err(Error::MissingInput(global.join(layout::pointmap_file(0))));
    }
    Ok(t)
}

fn load_global(cfg: &PipelineConfig, t: usize) -> Result<GlobalFrame> {
    let (gdir, mdir) = (cfg.global_path()?, cfg.mask_path()?);
    let mut pm = read_pointmap(gdir.join(layout::pointmap_file(t)))?;
    if let Some(img) = read_rgb_triplet(gdir.join(layout::color_stem(t)))? {
        pm = pm.with_colors(img.pixels().to_vec())?;
    }
    let mask = read_mask(mdir.join(layout::mask_file(t)))?;
    GlobalFrame::new(t, pm, mask)
}

fn load_canonical(cfg: &PipelineConfig, g: &GlobalFrame) -> Result<CanonicalFrame> {
    let fdir = layout::canonical_frame_dir(&cfg.canonical_path()?, g.index);
    let mut ref_pointmap = read_pointmap(fdir.join(layout::REF_FILE))?;
    if let (None, Some(c)) = (ref_pointmap.colors(), g.pointmap.colors()) {
        if ref_pointmap.dims() == g.pointmap.dims() {
            ref_pointmap = ref_pointmap.with_colors(c.to_vec())?;
        }
    }
    let mut novel_views = Vec::new();
    if cfg.completion {
        for k in 1..=NOVEL_VIEW_COUNT {
            let pointmap = read_pointmap(fdir.join(layout::view_file(k)))?;
            let guide = match read_rgb_triplet(fdir.join(layout::view_stem(k)))? {
                Some(img) => ViewGuide::Image(img),
                None => ViewGuide::Mask(read_mask(fdir.join(layout::view_mask_file(k)))?),
            };
            novel_views.push(NovelView { pointmap, guide });
        }
    }
    Ok(CanonicalFrame { index: g.index, ref_pointmap, ref_mask: g.mask.clone(), novel_views })
}

/// Checks that every file the build reads exists before loading anything.
fn check_inputs(cfg: &PipelineConfig, frames: usize) -> Result<()> {
    let (mdir, cdir) = (cfg.mask_path()?, cfg.canonical_path()?);
    for t in 0..frames {
        must_exist(mdir.join(layout::mask_file(t)))?;
        let fdir = layout::canonical_frame_dir(&cdir, t);
        must_exist(fdir.join(layout::REF_FILE))?;
        if cfg.completion {
            for k in 1..=NOVEL_VIEW_COUNT {
                must_exist(fdir.join(layout::view_file(k)))?;
                let red = PathBuf::from(format!("{}_r.pgm", fdir.join(layout::view_stem(k)).display()));
                if !red.exists() {
                    must_exist(fdir.join(layout::view_mask_file(k)))?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub proxy: Proxy4D,
    pub aligned: Vec<AlignedFrame>,
    pub manifest: RunManifest,
}

/// Loads the global frames of a build after checking that every input
/// file exists.
pub fn load_global_frames(cfg: &PipelineConfig) -> Result<Vec<GlobalFrame>> {
    cfg.validate()?;
    let gdir = cfg.global_path()?;
    let frames = discover_frames(&gdir)?;
    check_inputs(cfg, frames)?;
    (0..frames).into_par_iter().map(|t| load_global(cfg, t)).collect()
}

/// Completed canonical cloud of one frame; with completion disabled, the
/// visible reference pixels only.
pub fn complete_frame(cfg: &PipelineConfig, c: &CanonicalFrame) -> Result<CanonicalCompletion> {
    if cfg.completion {
        merge_views(c, cfg.conf_min, cfg.white_thresh)
    } else {
        let cloud = mask_pointmap(&c.ref_pointmap, &c.ref_mask, true, cfg.conf_min)?;
        let n = cloud.len();
        Ok(CanonicalCompletion {
            index: c.index,
            cloud,
            ref_pointmap: c.ref_pointmap.clone(),
            view_counts: [n, 0, 0, 0, 0],
        })
    }
}

/// Loads and completes each canonical frame in turn, so the novel views of
/// only a few frames are in memory at once.
pub fn load_completions(cfg: &PipelineConfig, global: &[GlobalFrame]) -> Result<Vec<CanonicalCompletion>> {
    global.par_iter().map(|g| complete_frame(cfg, &load_canonical(cfg, g)?)).collect()
}

/// Lift, complete, align and assemble in memory.
pub fn assemble_proxy(
    cfg: &PipelineConfig,
    global: &[GlobalFrame],
    canonical: &[CanonicalFrame],
) -> Result<(Proxy4D, Vec<AlignedFrame>)> {
    cfg.validate()?;
    let completions = canonical.par_iter().map(|c| complete_frame(cfg, c)).collect::<Result<Vec<_>>>()?;
    assemble_completed(cfg, global, &completions)
}

/// Lift, align and assemble from already completed canonical clouds.
pub fn assemble_completed(
    cfg: &PipelineConfig,
    global: &[GlobalFrame],
    completions: &[CanonicalCompletion],
) -> Result<(Proxy4D, Vec<AlignedFrame>)> {
    cfg.validate()?;
    let lift = build_scene_lift(global, cfg.conf_min, cfg.voxel)?;
    let scene_scale = match lift.background.diagonal() {
        d if d > 0.0 => d,
        _ => 1.0,
    };
    let aligned = align_sequence(completions, global, &cfg.align_params(scene_scale))?;
    let degenerate: Vec<usize> = aligned.iter().filter(|a| a.raw.degenerate).map(|a| a.index).collect();
    if !degenerate.is_empty() {
        log::warn!("degenerate frames filled from neighbours: {degenerate:?}");
    }
    let proxy = Proxy4D::assemble(lift.background, aligned.iter().map(|a| a.cloud.clone()).collect())?
        .with_provenance("completion", cfg.completion.into())
        .with_provenance("smoothing", cfg.smoothing.into())
        .with_provenance("degenerate_frames", serde_json::json!(degenerate));
    Ok((proxy, aligned))
}

/// `build-proxy`: writes `proxy/`, `alignment.csv` and `manifest.json`
/// under the output directory.
pub fn build_proxy(cfg: &PipelineConfig) -> Result<BuildReport> {
    let out = cfg.output_path()?;
    let global = load_global_frames(cfg)?;
    let completions = load_completions(cfg, &global)?;
    let (proxy, aligned) = assemble_completed(cfg, &global, &completions)?;
    std::fs::create_dir_all(&out).map_err(|e| FormatError::file(&out, e))?;
    let pdir = out.join(PROXY_DIR);
    proxy.save(&pdir)?;
    write_alignment_csv_file(&aligned, out.join(ALIGNMENT_CSV))?;
    let mut files = vec![
        ALIGNMENT_CSV.to_string(),
        format!("{PROXY_DIR}/{BACKGROUND_FILE}"),
        format!("{PROXY_DIR}/{MANIFEST_FILE}"),
    ];
    files.extend((0..proxy.frame_count()).map(|t| format!("{PROXY_DIR}/{}", foreground_file(t))));
    let summary = serde_json::json!({
        "frames": proxy.frame_count(),
        "scene_scale": proxy.scene_scale(),
        "background_points": proxy.background().len(),
        "foreground_points": proxy.foreground().iter().map(|c| c.len()).collect::<Vec<_>>(),
        "degenerate_frames": aligned.iter().filter(|a| a.raw.degenerate).map(|a| a.index).collect::<Vec<_>>(),
        "config": cfg_summary(cfg),
    });
    let manifest = write_run_manifest(&out, "build-proxy", summary, &files)?;
    Ok(BuildReport { proxy, aligned, manifest })
}

/// Config without directory fields, so manifests do not depend on where
/// the run happened.
fn cfg_summary(cfg: &PipelineConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(m) = v.as_object_mut() {
        for k in ["input_dir", "global_dir", "mask_dir", "canonical_dir", "output_dir"] {
            m.remove(k);
        }
    }
    v
}

#[derive(Debug, Clone)]
pub struct RenderReport {
    pub sequence: RenderedSequence,
    pub manifest: RunManifest,
}

pub fn visibility_file(t: usize) -> String {
    format!("visibility_{t:04}.pgm")
}

/// `render`: `depth.dmap`, `depth_NNNN.pgm` previews and
/// `visibility_NNNN.pgm` masks under `out`.
pub fn render_to_dir(proxy_dir: &Path, trajectory: &Path, out: &Path, cfg: &RenderConfig) -> Result<RenderReport> {
    must_exist(proxy_dir.join(MANIFEST_FILE))?;
    let traj = read_trajectory(must_exist(trajectory.to_path_buf())?)?;
    let proxy = Proxy4D::load(proxy_dir)?;
    let seq = render_sequence(&proxy, &traj, cfg)?;
    std::fs::create_dir_all(out).map_err(|e| FormatError::file(out, e))?;
    let previews = write_depth_sequence(&seq.frames, out.join(DEPTH_FILE))?;
    seq.frames
        .par_iter()
        .enumerate()
        .try_for_each(|(t, f)| write_mask(&f.visibility(), out.join(visibility_file(t))))?;
    let mut files = vec![DEPTH_FILE.to_string()];
    files.extend(previews.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()));
    files.extend((0..seq.frames.len()).map(visibility_file));
    let summary = serde_json::json!({
        "frames": seq.frames.len(),
        "width": traj.intrinsics().width,
        "height": traj.intrinsics().height,
        "point_counts": seq.point_counts,
        "visible_pixels": seq.frames.iter().map(|f| f.visible_count()).collect::<Vec<_>>(),
        "elapsed_seconds": seq.elapsed.as_secs_f64(),
        "frames_per_second": seq.frames_per_second(),
        "splat_radius": cfg.splat_radius,
        "dilation_passes": cfg.dilation_passes,
    });
    let manifest = write_run_manifest(out, "render", summary, &files)?;
    Ok(RenderReport { sequence: seq, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(frames: usize) -> SceneSpec {
        let mut spec = SceneSpec::default_room(frames, 96, 64);
        spec.object.spacing = 0.03;
        for b in &mut spec.background {
            match b {
                crate::synth::BackgroundPrimitive::Plane { spacing, .. }
                | crate::synth::BackgroundPrimitive::Box { spacing, .. } => *spacing = 0.08,
            }
        }
        spec
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = PipelineConfig::from_json("{\"mad_k\": 2.5, \"completion\": false}").unwrap();
        assert_eq!(cfg.mad_k, 2.5);
        assert!(!cfg.completion);
        assert_eq!(cfg.min_corr, 10);
        assert!(PipelineConfig::from_json("{\"nonsense\": 1}").is_err());
        let bad = PipelineConfig { conf_min: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let rooted = PipelineConfig { input_dir: Some("/x".into()), ..Default::default() };
        assert_eq!(rooted.mask_path().unwrap(), PathBuf::from("/x/global"));
        assert_eq!(rooted.canonical_path().unwrap(), PathBuf::from("/x/canonical"));
    }

    #[test]
    fn synth_build_render_round() {
        let dir = tempfile::tempdir().unwrap();
        let fx = dir.path().join("fx");
        synthesize(&small_spec(3), &NoiseSpec::none(), &CanonicalOptions::default(), &fx).unwrap();
        let cfg = PipelineConfig {
            input_dir: Some(fx.clone()),
            output_dir: Some(dir.path().join("out")),
            ..Default::default()
        };
        let report = build_proxy(&cfg).unwrap();
        assert_eq!(report.proxy.frame_count(), 3);
        assert!(report.manifest.artifacts.contains_key(ALIGNMENT_CSV));
        let out = dir.path().join("render");
        let r = render_to_dir(
            &dir.path().join("out").join(PROXY_DIR),
            &fx.join(layout::SOURCE_TRAJECTORY_FILE),
            &out,
            &RenderConfig::default(),
        )
        .unwrap();
        assert_eq!(r.sequence.frames.len(), 3);
        assert!(out.join("depth_0002.pgm").exists());
        assert!(out.join(visibility_file(2)).exists());
    }

    #[test]
    fn missing_mask_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let fx = dir.path().join("fx");
        synthesize(&small_spec(2), &NoiseSpec::none(), &CanonicalOptions::default(), &fx).unwrap();
        let gone = fx.join(GLOBAL_DIR).join(layout::mask_file(1));
        std::fs::remove_file(&gone).unwrap();
        let cfg =
            PipelineConfig { input_dir: Some(fx), output_dir: Some(dir.path().join("out")), ..Default::default() };
        match build_proxy(&cfg) {
            Err(Error::MissingInput(p)) => assert_eq!(p, gone),
            other => panic!("unexpected {other:?}"),
        }
    }
}
