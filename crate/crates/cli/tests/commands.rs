mod common;

use common::{fixture_and_proxy, ok, proxy4d, s};
use proxy4d::io::layout::{self, ALIGNMENT_CSV, DEPTH_FILE, GLOBAL_DIR, RUN_MANIFEST, SOURCE_TRAJECTORY_FILE};
use proxy4d::io::{read_depth_sequence, read_trajectory, write_mask};
use proxy4d::pipeline::{sha256_file, RunManifest};
use proxy4d::BinaryMask;
use proxy4d_cli::{EXIT_DEGENERATE, EXIT_VALIDATION};

fn manifest(dir: &std::path::Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(RUN_MANIFEST)).unwrap()).unwrap()
}

#[test]
fn synth_build_traj_render_chain() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, build) = fixture_and_proxy(dir.path(), 4);
    assert!(build.join(ALIGNMENT_CSV).exists());
    let m = manifest(&build);
    assert_eq!(m.command, "build-proxy");
    for (rel, digest) in &m.artifacts {
        assert_eq!(&sha256_file(&build.join(rel)).unwrap(), digest, "{rel}");
    }

    let traj = dir.path().join("orbit.json");
    ok(&[
        "traj",
        "orbit",
        "--proxy",
        s(&build),
        "--sweep",
        "120",
        "--frames",
        "4",
        "--like",
        s(&fx.join(SOURCE_TRAJECTORY_FILE)),
        "--out",
        s(&traj),
    ]);
    assert_eq!(read_trajectory(&traj).unwrap().len(), 4);
    assert!(dir.path().join(format!("orbit.json.{RUN_MANIFEST}")).exists());

    let bt = dir.path().join("bullet.json");
    ok(&[
        "traj",
        "bullet-time",
        "--input",
        s(&traj),
        "--freeze-at",
        "1",
        "--start",
        "1",
        "--end",
        "3",
        "--out",
        s(&bt),
    ]);
    assert_eq!(read_trajectory(&bt).unwrap().time_warp(), Some(&[0, 1, 1, 3][..]));

    let render = dir.path().join("render");
    ok(&["--threads", "2", "render", "--proxy", s(&build), "--trajectory", s(&bt), "--out", s(&render)]);
    let frames = read_depth_sequence(render.join(DEPTH_FILE)).unwrap();
    assert_eq!(frames.len(), 4);
    assert!(frames.iter().all(|f| f.visible_count() > 0));
    let rm = manifest(&render);
    assert_eq!(rm.summary["frames"], 4);
    assert!(rm.summary["frames_per_second"].as_f64().unwrap() > 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, ba) = fixture_and_proxy(a.path(), 3);
    let (_, bb) = fixture_and_proxy(b.path(), 3);
    assert_eq!(manifest(&ba).artifacts, manifest(&bb).artifacts);
    assert_eq!(manifest(&a.path().join("fx")).artifacts, manifest(&b.path().join("fx")).artifacts);
}

#[test]
fn missing_mask_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, _) = fixture_and_proxy(dir.path(), 2);
    let gone = fx.join(GLOBAL_DIR).join(layout::mask_file(1));
    std::fs::remove_file(&gone).unwrap();
    let out = proxy4d(&["build-proxy", "--input", s(&fx), "--out", s(&dir.path().join("again"))]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&gone)));
}

#[test]
fn empty_masks_exit_as_all_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, _) = fixture_and_proxy(dir.path(), 2);
    for t in 0..2 {
        write_mask(&BinaryMask::filled(96, 64, false).unwrap(), fx.join(GLOBAL_DIR).join(layout::mask_file(t)))
            .unwrap();
    }
    let out = proxy4d(&["build-proxy", "--input", s(&fx), "--out", s(&dir.path().join("again"))]);
    assert_eq!(out.status.code(), Some(EXIT_DEGENERATE), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"mad_k": -1.0}"#).unwrap();
    let out = proxy4d(&["build-proxy", "--config", s(&cfg), "--input", "nowhere", "--out", "x"]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mad_k"));

    // the flag overrides the bad file value, so the next failure is the missing input
    let out = proxy4d(&["build-proxy", "--config", s(&cfg), "--mad-k", "3", "--input", "nowhere", "--out", "x"]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame_0000.pmap"));
}

#[test]
fn keyframes_and_edits() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, build) = fixture_and_proxy(dir.path(), 3);
    let src = read_trajectory(fx.join(SOURCE_TRAJECTORY_FILE)).unwrap();
    let keys = proxy4d::io::KeyframeFile {
        frame_count: 3,
        keyframes: [0usize, 2]
            .iter()
            .map(|&t| proxy4d::io::KeyframeRecord {
                frame: t,
                camera: proxy4d::io::CameraRecord::from_camera(&src.camera(t)),
            })
            .collect(),
    };
    let kpath = dir.path().join("keys.json");
    std::fs::write(&kpath, serde_json::to_string(&keys).unwrap()).unwrap();
    let kt = dir.path().join("kt.json");
    ok(&["traj", "keyframes", "--keys", s(&kpath), "--out", s(&kt)]);
    let interp = read_trajectory(&kt).unwrap();
    assert!((interp.poses()[2].center() - src.poses()[2].center()).norm() < 1e-9);

    let scaled = dir.path().join("scaled");
    ok(&["edit", "scale", "--proxy", s(&build), "--factor", "2", "--out", s(&scaled)]);
    assert_eq!(manifest(&scaled).summary["frames"], 3);
    let comp = dir.path().join("comp");
    ok(&[
        "edit",
        "composite",
        "--proxy",
        s(&build),
        "--other",
        s(&scaled),
        "--translate",
        "0.5,0,0",
        "--frame-offset",
        "1",
        "--out",
        s(&comp),
    ]);
    assert_eq!(manifest(&comp).summary["frames"], 2);
    let out = proxy4d(&["edit", "scale", "--proxy", s(&build), "--factor", "-1", "--out", s(&scaled)]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
}
