use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use lumascape_core::audio::{separate_stems, stft, HpssConfig, StftConfig};
use lumascape_core::model::deserialize;
use lumascape_core::render::{render_all, FixtureConfig};
use lumascape_core::testkit::{banded_frames, drum_pattern, white_noise, SR};
use lumascape_core::video::{extract_colors, PaletteConfig};

fn audio_stages(c: &mut Criterion) {
    let noise = white_noise(0.3, 10.0, SR, 1);
    c.bench_function("stft 10 s", |b| {
        b.iter(|| stft(black_box(&noise), StftConfig::default()).unwrap())
    });

    let drums = drum_pattern(10.0, 2).audio;
    let mut group = c.benchmark_group("hpss");
    group.sample_size(10);
    group.bench_function("separate 10 s", |b| {
        b.iter(|| separate_stems(black_box(&drums), StftConfig::default(), HpssConfig::default()).unwrap())
    });
    group.finish();
}

fn palette(c: &mut Criterion) {
    let frames = banded_frames(
        &[([230, 20, 20], 0.6), ([20, 20, 230], 0.3), ([120, 120, 120], 0.1)],
        320,
        180,
        60,
        10.0,
    );
    let cfg = PaletteConfig::default();
    c.bench_function("color k-means 60 frames", |b| {
        b.iter(|| extract_colors(black_box(&frames), &cfg))
    });
}

fn render(c: &mut Criterion) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/fixture_lightscape.json");
    let ls = deserialize(&std::fs::read(path).unwrap()).unwrap();
    let fixtures = FixtureConfig::default();
    c.bench_function("render 12 s at 60 fps", |b| {
        b.iter(|| render_all(black_box(&ls), &fixtures, 60.0).unwrap())
    });
}

criterion_group!(benches, audio_stages, palette, render);
criterion_main!(benches);
