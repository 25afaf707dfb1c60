//! File names of the pipeline's input and output directories.
//!
//! ```text
//! <input>/global/frame_0000.pmap       global point map of frame 0
//! <input>/global/mask_0000.pgm         foreground mask (>= 128 is foreground)
//! <input>/global/color_0000_{r,g,b}.pgm  optional source colors
//! <input>/canonical/0000/ref.pmap      canonical map registered to frame 0
//! <input>/canonical/0000/view_1.pmap   novel views 1..=4 with either
//! <input>/canonical/0000/view_1_{r,g,b}.pgm  a rendered image on white
//! <input>/canonical/0000/view_1_mask.pgm     or an explicit mask
//! ```

use std::path::{Path, PathBuf};

pub const GLOBAL_DIR: &str = "global";
pub const CANONICAL_DIR: &str = "canonical";
pub const TRUTH_FILE: &str = "truth.json";
pub const SCENE_FILE: &str = "scene.json";
pub const NOISE_FILE: &str = "noise.json";
pub const SOURCE_TRAJECTORY_FILE: &str = "source_trajectory.json";
pub const PROXY_DIR: &str = "proxy";
pub const ALIGNMENT_CSV: &str = "alignment.csv";
pub const RUN_MANIFEST: &str = "manifest.json";
pub const DEPTH_FILE: &str = "depth.dmap";

pub fn pointmap_file(t: usize) -> String {
    format!("frame_{t:04}.pmap")
}

pub fn mask_file(t: usize) -> String {
    format!("mask_{t:04}.pgm")
}

/// Stem of the `_r/_g/_b` PGM triplet holding a frame's colors.
pub fn color_stem(t: usize) -> String {
    format!("color_{t:04}")
}

pub fn canonical_frame_dir(root: &Path, t: usize) -> PathBuf {
    root.join(format!("{t:04}"))
}

pub const REF_FILE: &str = "ref.pmap";

/// Novel views are numbered from 1.
pub fn view_file(k: usize) -> String {
    format!("view_{k}.pmap")
}

pub fn view_stem(k: usize) -> String {
    format!("view_{k}")
}

pub fn view_mask_file(k: usize) -> String {
    format!("view_{k}_mask.pgm")
}
