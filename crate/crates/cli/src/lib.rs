//! Command-line surface of `proxy4d`: argument parsing, command dispatch and
//! exit-code mapping. The binary is a thin wrapper over [`run`].

pub mod serve;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use proxy4d::io::layout::{PROXY_DIR, RUN_MANIFEST};
use proxy4d::io::{read_trajectory, write_trajectory, KeyframeFile};
use proxy4d::pipeline::{self, write_run_manifest, write_run_manifest_at, PipelineConfig};
use proxy4d::proxy::{foreground_file, BACKGROUND_FILE, MANIFEST_FILE};
use proxy4d::synth::{CanonicalOptions, NoiseSpec, SceneSpec};
use proxy4d::{
    bullet_time, composite, interpolate_keyframes, orbit, CameraIntrinsics, Error, FormatError, OrbitParams, Pivot,
    Proxy4D, RenderConfig, Result, SimilarityST, Trajectory, Vec3,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DEGENERATE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::AllDegenerate => EXIT_DEGENERATE,
        Error::Format(f) if f.is_io() => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

#[derive(Debug, Parser)]
#[command(name = "proxy4d", version, about = "Build, edit and render geometry-complete 4D point-cloud proxies")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic fixture with ground truth.
    Synth(SynthArgs),
    /// Lift, complete, align and assemble a proxy.
    BuildProxy(BuildArgs),
    /// Author a camera trajectory.
    #[command(subcommand)]
    Traj(TrajCommand),
    /// Render depth scaffolds along a trajectory.
    Render(RenderArgs),
    /// Scale the foreground or composite two proxies.
    #[command(subcommand)]
    Edit(EditCommand),
    /// Serve a proxy over HTTP for the trajectory editor.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Scene description (JSON); defaults to the built-in room scene.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Noise description (JSON); overrides the noise flags.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long, default_value_t = 45)]
    pub frames: usize,
    #[arg(long, default_value_t = 832)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub scale_jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub depth_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub canonical_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub canonical_noise: f64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Config file (JSON); flags take precedence over its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fixture root holding `global/` and `canonical/`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub global: Option<PathBuf>,
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long)]
    pub canonical: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub conf_min: Option<f64>,
    #[arg(long)]
    pub voxel: Option<f64>,
    #[arg(long)]
    pub white_thresh: Option<u8>,
    #[arg(long)]
    pub mad_k: Option<f64>,
    #[arg(long)]
    pub min_corr: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub smoother_q: Option<f64>,
    #[arg(long)]
    pub smoother_r: Option<f64>,
    #[arg(long)]
    pub depth_ratio: Option<f64>,
    #[arg(long)]
    pub no_smoothing: bool,
    #[arg(long)]
    pub no_completion: bool,
}

impl BuildArgs {
    pub fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::read(p)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = &self.$flag { cfg.$field = v.clone().into(); })*
            };
        }
        set!(input => input_dir, global => global_dir, masks => mask_dir, canonical => canonical_dir,
             out => output_dir, conf_min => conf_min, voxel => voxel, white_thresh => white_thresh,
             mad_k => mad_k, min_corr => min_corr, iters => robust_iters, smoother_q => smoother_q,
             smoother_r => smoother_r, depth_ratio => depth_ratio);
        if self.no_smoothing {
            cfg.smoothing = false;
        }
        if self.no_completion {
            cfg.completion = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct IntrinsicsArgs {
    #[arg(long, default_value_t = 832)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    #[arg(long, default_value_t = 60.0)]
    pub hfov: f64,
    /// Copy intrinsics from an existing trajectory file instead.
    #[arg(long)]
    pub like: Option<PathBuf>,
}

impl IntrinsicsArgs {
    fn resolve(&self) -> Result<CameraIntrinsics> {
        match &self.like {
            Some(p) => Ok(*read_trajectory(p)?.intrinsics()),
            None => CameraIntrinsics::from_fov(self.width, self.height, self.hfov),
        }
    }
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z but got {s:?}")),
    }
}

#[derive(Debug, Subcommand)]
pub enum TrajCommand {
    /// Circle around a centre at fixed pitch.
    Orbit {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        center: Option<Vec3>,
        #[arg(long)]
        radius: Option<f64>,
        /// Take missing centre/radius from this proxy's suggestion.
        #[arg(long)]
        proxy: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        start_yaw: f64,
        #[arg(long, default_value_t = 120.0, allow_hyphen_values = true)]
        sweep: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        pitch: f64,
        #[arg(long, default_value_t = 45)]
        frames: usize,
        #[command(flatten)]
        intrinsics: IntrinsicsArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Interpolate a keyframe file (JSON).
    Keyframes {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Freeze time over a span of an existing trajectory.
    BulletTime {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        freeze_at: usize,
        #[arg(long)]
        start: usize,
        /// Exclusive end of the span.
        #[arg(long)]
        end: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Proxy directory, or a build output directory containing `proxy/`.
    #[arg(long)]
    pub proxy: PathBuf,
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub splat_radius: Option<u32>,
    #[arg(long)]
    pub dilation: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, clap::ValueEnum)]
pub enum PivotKind {
    /// Each frame about its own foreground centroid.
    Centroid,
    /// A fixed point given with `--pivot-point`.
    Point,
}

#[derive(Debug, Subcommand)]
pub enum EditCommand {
    /// Scale every foreground frame uniformly.
    Scale {
        #[arg(long)]
        proxy: PathBuf,
        #[arg(long)]
        factor: f64,
        #[arg(long, value_enum, default_value_t = PivotKind::Centroid)]
        pivot: PivotKind,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        pivot_point: Option<Vec3>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Insert `--other` into `--proxy` through a similarity placement.
    Composite {
        #[arg(long)]
        proxy: PathBuf,
        #[arg(long)]
        other: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
        translate: Vec3,
        /// `other` frame k lands on frame k + offset.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        frame_offset: i64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub proxy: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 1)]
    pub splat_radius: u32,
}

/// Accepts either a proxy directory or a build output directory.
pub fn resolve_proxy_dir(dir: &Path) -> PathBuf {
    let nested = dir.join(PROXY_DIR);
    if nested.join(MANIFEST_FILE).is_file() {
        nested
    } else {
        dir.to_path_buf()
    }
}

fn load_proxy(dir: &Path) -> Result<Proxy4D> {
    let dir = resolve_proxy_dir(dir);
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(Error::MissingInput(dir.join(MANIFEST_FILE)));
    }
    Proxy4D::load(&dir)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::File { path: path.into(), source: e })?;
    Ok(serde_json::from_str(&text).map_err(FormatError::from)?)
}

/// Writes a trajectory plus `<out>.manifest.json` beside it.
fn emit_trajectory(traj: &Trajectory, out: &Path, kind: &str) -> Result<()> {
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    write_trajectory(traj, out)?;
    let name = out.file_name().ok_or_else(|| Error::InvalidArgument("output path has no file name".into()))?;
    let name = name.to_string_lossy().into_owned();
    let summary = serde_json::json!({ "kind": kind, "frames": traj.len(), "time_warp": traj.time_warp().is_some() });
    write_run_manifest_at(&dir.join(format!("{name}.{RUN_MANIFEST}")), &dir, "traj", summary, &[name])?;
    Ok(())
}

/// Saves an edited proxy under `out/proxy` with a run manifest in `out`.
fn emit_proxy(proxy: &Proxy4D, out: &Path, command: &str, summary: serde_json::Value) -> Result<()> {
    proxy.save(out.join(PROXY_DIR))?;
    let mut files = vec![format!("{PROXY_DIR}/{BACKGROUND_FILE}"), format!("{PROXY_DIR}/{MANIFEST_FILE}")];
    files.extend((0..proxy.frame_count()).map(|t| format!("{PROXY_DIR}/{}", foreground_file(t))));
    write_run_manifest(out, command, summary, &files)?;
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => read_json::<SceneSpec>(p)?,
        None => SceneSpec { seed: a.seed, ..SceneSpec::default_room(a.frames, a.width, a.height) },
    };
    let noise = match &a.noise {
        Some(p) => read_json::<NoiseSpec>(p)?,
        None => NoiseSpec {
            scale_jitter: a.scale_jitter,
            depth_noise: a.depth_noise,
            outlier_fraction: a.outlier_fraction,
            seed: a.seed,
        },
    };
    let canon = CanonicalOptions { canonical_scale: a.canonical_scale, depth_noise: a.canonical_noise, seed: a.seed };
    let report = pipeline::synthesize(&spec, &noise, &canon, &a.out)?;
    log::info!("wrote {} frames to {}", report.truth.frames.len(), a.out.display());
    Ok(())
}

fn run_traj(cmd: &TrajCommand) -> Result<()> {
    match cmd {
        TrajCommand::Orbit { center, radius, proxy, start_yaw, sweep, pitch, frames, intrinsics, out } => {
            let suggested = match (center, radius, proxy) {
                (Some(_), Some(_), _) => None,
                (_, _, Some(p)) => Some(load_proxy(p)?.suggested_orbit()),
                _ => return Err(Error::InvalidArgument("orbit needs --center and --radius, or --proxy".into())),
            };
            let params = OrbitParams {
                center: center.or(suggested.map(|s| s.0)).expect("checked above"),
                radius: radius.or(suggested.map(|s| s.1)).expect("checked above"),
                start_yaw_deg: *start_yaw,
                sweep_yaw_deg: *sweep,
                pitch_deg: *pitch,
                frames: *frames,
                intrinsics: intrinsics.resolve()?,
            };
            emit_trajectory(&orbit(&params)?, out, "orbit")
        }
        TrajCommand::Keyframes { keys, out } => {
            let file: KeyframeFile = read_json(keys)?;
            let traj = interpolate_keyframes(&file.keyframes()?, file.frame_count)?;
            emit_trajectory(&traj, out, "keyframes")
        }
        TrajCommand::BulletTime { input, freeze_at, start, end, out } => {
            if !input.exists() {
                return Err(Error::MissingInput(input.clone()));
            }
            if start > end {
                return Err(Error::InvalidArgument(format!("span start {start} exceeds end {end}")));
            }
            let traj = bullet_time(&read_trajectory(input)?, *freeze_at, *start..*end)?;
            emit_trajectory(&traj, out, "bullet-time")
        }
    }
}

fn run_render(a: &RenderArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::read(p)?.render_config(),
        None => RenderConfig::default(),
    };
    if let Some(r) = a.splat_radius {
        cfg.splat_radius = r;
    }
    if let Some(d) = a.dilation {
        cfg.dilation_passes = d;
    }
    let report = pipeline::render_to_dir(&resolve_proxy_dir(&a.proxy), &a.trajectory, &a.out, &cfg)?;
    log::info!(
        "rendered {} frames at {:.1} frames/s",
        report.sequence.frames.len(),
        report.sequence.frames_per_second()
    );
    Ok(())
}

fn run_edit(cmd: &EditCommand) -> Result<()> {
    match cmd {
        EditCommand::Scale { proxy, factor, pivot, pivot_point, out } => {
            let pivot = match (pivot, pivot_point) {
                (PivotKind::Centroid, _) => Pivot::FrameCentroid,
                (PivotKind::Point, Some(p)) => Pivot::Point(*p),
                (PivotKind::Point, None) => {
                    return Err(Error::InvalidArgument("--pivot point needs --pivot-point x,y,z".into()))
                }
            };
            let edited = load_proxy(proxy)?.scale_foreground(*factor, pivot)?;
            let summary = serde_json::json!({ "edit": "scale", "factor": factor, "frames": edited.frame_count() });
            emit_proxy(&edited, out, "edit", summary)
        }
        EditCommand::Composite { proxy, other, scale, translate, frame_offset, out } => {
            let placement = SimilarityST::new(*scale, *translate)?;
            let merged = composite(&load_proxy(proxy)?, &load_proxy(other)?, &placement, *frame_offset)?;
            let summary = serde_json::json!({ "edit": "composite", "frame_offset": frame_offset, "frames": merged.frame_count() });
            emit_proxy(&merged, out, "edit", summary)
        }
    }
}

fn run_serve(a: &ServeArgs) -> Result<()> {
    let proxy = load_proxy(&a.proxy)?;
    let cfg = RenderConfig { splat_radius: a.splat_radius, ..Default::default() };
    serve::run(proxy, cfg, &a.bind, a.port)
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match &cli.command {
        Command::Synth(a) => run_synth(a),
        Command::BuildProxy(a) => {
            let report = pipeline::build_proxy(&a.config()?)?;
            log::info!("built proxy with {} frames", report.proxy.frame_count());
            Ok(())
        }
        Command::Traj(c) => run_traj(c),
        Command::Render(a) => run_render(a),
        Command::Edit(c) => run_edit(c),
        Command::Serve(a) => run_serve(a),
    }
}
