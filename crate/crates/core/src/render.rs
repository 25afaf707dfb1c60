//! Z-buffer point splatting into depth scaffolds.
//!
//! Each point covers the `(2r+1)²` pixel square centred on the pixel that
//! contains its projection. Per pixel the smallest camera-frame depth wins;
//! equal depths go to the lower point index. Splatting runs in parallel over
//! point chunks whose buffers are merged with the same `(depth, index)`
//! ordering, so the result does not depend on the schedule.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::camera::{Camera, Vec3};
use crate::cloud::{PointCloud, Rgb};
use crate::error::{Error, Result};
use crate::proxy::Proxy4D;
use crate::raster::BinaryMask;
use crate::trajectory::Trajectory;

pub const NO_POINT: u32 = u32::MAX;
const CHUNK: usize = 1 << 15;
/// Rows per splatting band; a band of an 832-wide image is ~200 KiB.
const BAND_ROWS: usize = 16;
const DILATION_MIN_NEIGHBOURS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderConfig {
    pub splat_radius: u32,
    /// Hole-filling passes; 0 disables dilation.
    pub dilation_passes: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { splat_radius: 1, dilation_passes: 0 }
    }
}

/// Rendered depth (0 = no geometry) with an optional color preview.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    color: Option<Vec<Rgb>>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || depth.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "depth grid of {} values cannot be {width}x{height}",
                depth.len()
            )));
        }
        if let Some(d) = depth.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidArgument(format!("depth {d} is not a finite value >= 0")));
        }
        Ok(Self { width, height, depth, color: None })
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

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    pub fn color(&self) -> Option<&[Rgb]> {
        self.color.as_deref()
    }

    pub fn visibility(&self) -> BinaryMask {
        BinaryMask::new(self.width, self.height, self.depth.iter().map(|d| *d > 0.0).collect())
            .expect("frame dimensions are positive")
    }

    pub fn visible_count(&self) -> usize {
        self.depth.iter().filter(|d| **d > 0.0).count()
    }
}

/// Depth and winning point index per pixel ([`NO_POINT`] for holes).
#[derive(Debug, Clone, PartialEq)]
pub struct ZBuffer {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub index: Vec<u32>,
}

impl ZBuffer {
    /// Fills holes with at least five visible 8-neighbours using the
    /// nearest of them. Each pass reads only the previous pass's state.
    fn dilate(&mut self, passes: u32) {
        let (w, h) = (self.width as isize, self.height as isize);
        for _ in 0..passes {
            let mut fills = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    let pix = (y * w + x) as usize;
                    if self.index[pix] != NO_POINT {
                        continue;
                    }
                    let mut seen = 0;
                    let mut best = (f64::INFINITY, NO_POINT);
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            let (nx, ny) = (x + dx, y + dy);
                            if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w || ny >= h {
                                continue;
                            }
                            let n = (ny * w + nx) as usize;
                            if self.index[n] == NO_POINT {
                                continue;
                            }
                            seen += 1;
                            let cand = (self.depth[n], self.index[n]);
                            if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                                best = cand;
                            }
                        }
                    }
                    if seen >= DILATION_MIN_NEIGHBOURS {
                        fills.push((pix, best));
                    }
                }
            }
            if fills.is_empty() {
                break;
            }
            for (pix, (d, i)) in fills {
                self.depth[pix] = d;
                self.index[pix] = i;
            }
        }
    }

    fn into_frame(self, parts: &[&PointCloud]) -> DepthFrame {
        let with_color = !parts.is_empty() && parts.iter().all(|c| c.colors().is_some());
        let color = with_color.then(|| {
            let offsets = part_offsets(parts);
            self.index
                .iter()
                .map(|&i| {
                    if i == NO_POINT {
                        [0, 0, 0]
                    } else {
                        let (p, local) = locate(&offsets, i as usize);
                        parts[p].colors().unwrap()[local]
                    }
                })
                .collect()
        });
        let depth =
            self.depth.into_iter().zip(&self.index).map(|(d, &i)| if i == NO_POINT { 0.0 } else { d }).collect();
        DepthFrame { width: self.width, height: self.height, depth, color }
    }
}

fn part_offsets(parts: &[&PointCloud]) -> Vec<usize> {
    let mut acc = 0;
    parts
        .iter()
        .map(|c| {
            let o = acc;
            acc += c.len();
            o
        })
        .collect()
}

fn locate(offsets: &[usize], i: usize) -> (usize, usize) {
    let p = offsets.partition_point(|o| *o <= i) - 1;
    (p, i - offsets[p])
}

/// Interleaved depth/index pair; both halves of a pixel's key share a cache
/// line.
#[derive(Clone, Copy)]
struct Cell {
    depth: f64,
    index: u32,
}

const EMPTY: Cell = Cell { depth: f64::INFINITY, index: NO_POINT };

/// A point projected to its centre pixel.
#[derive(Clone, Copy)]
struct Projected {
    depth: f64,
    index: u32,
    u: i32,
    v: i32,
}

/// Projects a run of points and bins them by the image bands their splat
/// squares touch. Bins keep point order.
fn project_chunk(points: &[Vec3], first: usize, camera: &Camera, r: i64, bands: usize) -> Vec<Vec<Projected>> {
    let rot = camera.pose.rotation();
    let tr = camera.pose.translation();
    let k = &camera.intrinsics;
    let (w, h) = (camera.width() as i64, camera.height() as i64);
    let mut bins = vec![Vec::new(); bands];
    for (j, p) in points.iter().enumerate() {
        let z = rot[(2, 0)] * p.x + rot[(2, 1)] * p.y + rot[(2, 2)] * p.z + tr.z;
        if !(z > 0.0) {
            continue;
        }
        let x = rot[(0, 0)] * p.x + rot[(0, 1)] * p.y + rot[(0, 2)] * p.z + tr.x;
        let y = rot[(1, 0)] * p.x + rot[(1, 1)] * p.y + rot[(1, 2)] * p.z + tr.y;
        let u = k.fx * x / z + k.cx;
        let v = k.fy * y / z + k.cy;
        if !(u.is_finite() && v.is_finite()) {
            continue;
        }
        let (uf, vf) = ((u + 0.5).floor(), (v + 0.5).floor());
        // the splat square misses the image entirely
        if uf < -(r as f64) || vf < -(r as f64) || uf > (w - 1 + r) as f64 || vf > (h - 1 + r) as f64 {
            continue;
        }
        let (ui, vi) = (uf as i64, vf as i64);
        let rec = Projected { depth: z, index: (first + j) as u32, u: ui as i32, v: vi as i32 };
        let (y0, y1) = ((vi - r).max(0), (vi + r).min(h - 1));
        for bin in &mut bins[y0 as usize / BAND_ROWS..=y1 as usize / BAND_ROWS] {
            bin.push(rec);
        }
    }
    bins
}

/// Splats binned points into one band of rows starting at `row0`.
fn splat_band(cells: &mut [Cell], row0: usize, width: usize, bins: &[&[Projected]], r: i64) {
    let rows = (cells.len() / width) as i64;
    let (w, row0) = (width as i64, row0 as i64);
    for bin in bins {
        for p in *bin {
            let (u, v) = (p.u as i64, p.v as i64 - row0);
            let (x0, x1) = ((u - r).max(0), (u + r).min(w - 1));
            let (y0, y1) = ((v - r).max(0), (v + r).min(rows - 1));
            for py in y0..=y1 {
                let row = (py * w) as usize;
                for c in &mut cells[row + x0 as usize..=row + x1 as usize] {
                    if p.depth < c.depth || (p.depth == c.depth && p.index < c.index) {
                        *c = Cell { depth: p.depth, index: p.index };
                    }
                }
            }
        }
    }
}

/// Splats several clouds as if concatenated in order (indices continue
/// across parts) and returns the raw z-buffer.
///
/// Points are projected in parallel chunks and binned by horizontal band;
/// each band then owns a disjoint, cache-sized slice of the buffer. Every
/// pixel sees the same candidate set whatever the schedule, and the
/// `(depth, index)` minimum is order-independent.
pub fn render_zbuffer(parts: &[&PointCloud], camera: &Camera, cfg: &RenderConfig) -> ZBuffer {
    let (w, h) = (camera.width(), camera.height());
    let total: usize = parts.iter().map(|c| c.len()).sum();
    assert!(total < NO_POINT as usize, "too many points for one frame");
    let offsets = part_offsets(parts);
    let r = cfg.splat_radius as i64;
    let bands = h.div_ceil(BAND_ROWS);
    let jobs: Vec<(usize, &[Vec3])> = parts
        .iter()
        .zip(&offsets)
        .flat_map(|(c, &off)| c.positions().chunks(CHUNK).enumerate().map(move |(k, ch)| (off + k * CHUNK, ch)))
        .collect();
    let binned: Vec<Vec<Vec<Projected>>> =
        jobs.par_iter().map(|(first, pts)| project_chunk(pts, *first, camera, r, bands)).collect();
    let mut cells = vec![EMPTY; w * h];
    cells.par_chunks_mut(BAND_ROWS * w).enumerate().for_each(|(b, band)| {
        let bins: Vec<&[Projected]> = binned.iter().map(|chunk| chunk[b].as_slice()).collect();
        splat_band(band, b * BAND_ROWS, w, &bins, r);
    });
    let (depth, index) = cells.iter().map(|c| (c.depth, c.index)).unzip();
    let mut buf = ZBuffer { width: w, height: h, depth, index };
    buf.dilate(cfg.dilation_passes);
    buf
}

pub fn render_depth(cloud: &PointCloud, camera: &Camera, cfg: &RenderConfig) -> DepthFrame {
    render_parts(&[cloud], camera, cfg)
}

/// Renders the concatenation of `parts` without materialising it.
pub fn render_parts(parts: &[&PointCloud], camera: &Camera, cfg: &RenderConfig) -> DepthFrame {
    render_zbuffer(parts, camera, cfg).into_frame(parts)
}

#[derive(Debug, Clone)]
pub struct RenderedSequence {
    pub frames: Vec<DepthFrame>,
    /// Points in the frame view rendered at each output frame.
    pub point_counts: Vec<usize>,
    pub elapsed: Duration,
}

impl RenderedSequence {
    pub fn frames_per_second(&self) -> f64 {
        self.frames.len() as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Renders `frame_view(proxy, warp(t))` from `traj[t]` for every output frame.
pub fn render_sequence(proxy: &Proxy4D, traj: &Trajectory, cfg: &RenderConfig) -> Result<RenderedSequence> {
    traj.check_source(proxy.frame_count())?;
    let start = Instant::now();
    let frames: Vec<(DepthFrame, usize)> = (0..traj.len())
        .into_par_iter()
        .map(|t| {
            let src = traj.source_frame(t);
            let fg = &proxy.foreground()[src];
            let parts = [proxy.background(), fg];
            (render_parts(&parts, &traj.camera(t), cfg), proxy.background().len() + fg.len())
        })
        .collect();
    let elapsed = start.elapsed();
    let (frames, point_counts) = frames.into_iter().unzip();
    Ok(RenderedSequence { frames, point_counts, elapsed })
}
