#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proxy4d::synth::{BackgroundPrimitive, SceneSpec};

/// A small, fast scene: default room at low resolution with coarse sampling.
pub fn small_spec(frames: usize) -> SceneSpec {
    let mut spec = SceneSpec::default_room(frames, 96, 64);
    spec.object.spacing = 0.03;
    for b in &mut spec.background {
        match b {
            BackgroundPrimitive::Plane { spacing, .. } | BackgroundPrimitive::Box { spacing, .. } => *spacing = 0.08,
        }
    }
    spec
}

pub fn proxy4d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxy4d")).args(args).output().expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = proxy4d(args);
    assert!(out.status.success(), "proxy4d {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Synthesizes a small fixture and builds its proxy; returns (fixture, build output).
pub fn fixture_and_proxy(root: &Path, frames: usize) -> (PathBuf, PathBuf) {
    let spec_path = root.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&small_spec(frames)).unwrap()).unwrap();
    let fx = root.join("fx");
    let out = root.join("build");
    ok(&["synth", "--spec", s(&spec_path), "--out", s(&fx)]);
    ok(&["build-proxy", "--input", s(&fx), "--out", s(&out)]);
    (fx, out)
}
