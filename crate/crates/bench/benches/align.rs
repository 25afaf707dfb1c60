use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use proxy4d::align::{fit_scale_translation, robust_fit, smooth_track, RobustParams, SmootherConfig};
use proxy4d_bench::{centroid_track, correspondences};

fn fit(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit");
    for n in [1_000usize, 100_000] {
        let corrs = correspondences(n, 7);
        g.bench_with_input(BenchmarkId::new("closed_form", n), &corrs, |b, s| {
            b.iter(|| fit_scale_translation(s).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("robust", n), &corrs, |b, s| {
            b.iter(|| robust_fit(s, &RobustParams::default()))
        });
    }
    g.finish();
}

fn smoother(c: &mut Criterion) {
    let cfg = SmootherConfig::for_scene_scale(10.0);
    let mut g = c.benchmark_group("smoother");
    for n in [45usize, 10_000] {
        let track = centroid_track(n, 3);
        g.bench_with_input(BenchmarkId::new("rts_3d", n), &track, |b, t| b.iter(|| smooth_track(t, &cfg)));
    }
    g.finish();
}

criterion_group!(benches, fit, smoother);
criterion_main!(benches);
