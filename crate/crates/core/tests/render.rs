mod common;

use std::path::PathBuf;

use common::*;
use lumascape_core::model::{
    deserialize, serialize, AnalysisResult, BeatGrid, PercussiveEvents, Segment, SegmentLabel,
};
use lumascape_core::render::*;
use lumascape_core::synth::{synthesize, SynthesisConfig};
use lumascape_core::Lightscape;
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn blessing() -> bool {
    std::env::var_os("LUMASCAPE_BLESS").is_some()
}

/// The analysis behind the committed fixture document.
fn fixture_analysis() -> AnalysisResult {
    let beats: Vec<f64> = (0..24).map(|k| 0.25 + k as f64 * 0.5).collect();
    AnalysisResult {
        duration: 12.0,
        beat_grid: BeatGrid {
            bpm: 120.0,
            downbeats: beats.iter().step_by(4).copied().collect(),
            beats,
        },
        segments: vec![
            Segment::new(0.0, 4.25, SegmentLabel::Intro, 2),
            Segment::new(4.25, 8.25, SegmentLabel::Verse, 4),
            Segment::new(8.25, 12.0, SegmentLabel::Chorus, 5),
        ],
        events: PercussiveEvents {
            kicks: (0..12).map(|k| 0.25 + k as f64).collect(),
            snares: (0..11).map(|k| 0.75 + k as f64).collect(),
        },
        per_segment_median_rms: vec![0.0, 0.6, 1.0],
    }
}

fn fixture_lightscape() -> Lightscape {
    let path = data("fixture_lightscape.json");
    if blessing() {
        let ls = synthesize(&fixture_analysis(), &test_palette(), &SynthesisConfig::default())
            .unwrap()
            .lightscape;
        std::fs::write(&path, serialize(&ls)).unwrap();
    }
    deserialize(&std::fs::read(&path).unwrap()).unwrap()
}

fn fixtures() -> FixtureConfig {
    let path = data("fixtures16.json");
    if blessing() {
        std::fs::write(&path, FixtureConfig::ring(16).to_json()).unwrap();
    }
    FixtureConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn check_golden(name: &str, actual: &str) {
    let path = data(name);
    if blessing() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert!(expected == actual, "{name} differs from the committed golden file");
}

#[test]
fn golden_frames_and_ratios_are_stable() {
    let ls = fixture_lightscape();
    let fx = fixtures();
    let frames = render_all(&ls, &fx, 30.0).unwrap();
    assert_eq!(frames.len(), 361);
    let bins = PaletteBins::from_lightscape(&ls);
    check_golden("golden_frames_30fps.csv", &frames_csv(&frames, &fx));
    check_golden(
        "golden_ratios_30fps.csv",
        &ratios_csv(&color_ratios(&frames, &bins), &bins),
    );
}

#[test]
fn fixture_document_round_trips_byte_for_byte() {
    let bytes = std::fs::read_to_string(data("fixture_lightscape.json")).unwrap();
    let ls = deserialize(bytes.as_bytes()).unwrap();
    assert_eq!(serialize(&ls), bytes);
}

#[test]
fn sixty_fps_contains_thirty_fps() {
    let ls = fixture_lightscape();
    let fx = fixtures();
    let f30 = render_all(&ls, &fx, 30.0).unwrap();
    let f60 = render_all(&ls, &fx, 60.0).unwrap();
    for (k, frame) in f30.iter().enumerate() {
        assert_eq!(frame, &f60[2 * k], "frame {k}");
    }
}

#[test]
fn ratios_sum_to_one() {
    let ls = fixture_lightscape();
    let frames = render_all(&ls, &fixtures(), 30.0).unwrap();
    let bins = PaletteBins::from_lightscape(&ls);
    for r in color_ratios(&frames, &bins) {
        let sum: f64 = r.ratios.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9, "t={} sum {sum}", r.t);
        assert!(r.ratios.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

#[test]
fn render_all_equals_per_frame_rendering() {
    let ls = fixture_lightscape();
    let fx = FixtureConfig::ring(7);
    let all = render_all(&ls, &fx, 10.0).unwrap();
    for f in all.iter().step_by(13) {
        assert_eq!(&render_frame(&ls, &fx, f.t).unwrap(), f);
    }
}

#[test]
fn out_of_range_time_is_rejected() {
    let ls = fixture_lightscape();
    assert!(matches!(
        render_frame(&ls, &fixtures(), 12.5),
        Err(RenderError::TimeOutOfRange { .. })
    ));
}

#[test]
fn raw_frame_stream_layout() {
    let ls = fixture_lightscape();
    let fx = fixtures();
    let frames = render_all(&ls, &fx, 30.0).unwrap();
    let raw = frames_raw(&frames, fx.fixtures.len(), 30.0);
    let header = format!("LUMARAW1 {} 1 30\n", fx.fixtures.len());
    assert!(raw.starts_with(header.as_bytes()));
    assert_eq!(raw.len(), header.len() + frames.len() * 16 * 3);
    let body = &raw[header.len()..];
    assert_eq!(&body[..3], &frames[0].colors[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adding_an_object_never_darkens(t in 0.0f64..12.0, drop in 0usize..40) {
        let full = fixture_lightscape();
        let fx = fixtures();
        let mut partial = full.clone();
        let i = drop % partial.objects.len();
        partial.objects.remove(i);
        let a = render_frame(&full, &fx, t).unwrap();
        let b = render_frame(&partial, &fx, t).unwrap();
        for (ca, cb) in a.colors.iter().zip(&b.colors) {
            for ch in 0..3 {
                prop_assert!(ca[ch] >= cb[ch]);
            }
        }
    }

    #[test]
    fn falloff_is_bounded_and_symmetric(c in 0.0f64..1.0, w in 0.01f64..1.0, p in 0.0f64..1.0) {
        let a = spatial_falloff(c, w, p);
        if let Some(v) = a {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let mirrored = spatial_falloff(c, w, (2.0 * c - p).rem_euclid(1.0));
        match (a, mirrored) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (None, None) => {}
            // the boundary itself may fall either way after the reflection
            (x, y) => prop_assert!(x.unwrap_or(0.0) < 1e-6 && y.unwrap_or(0.0) < 1e-6),
        }
    }

    #[test]
    fn frame_grid_is_exact_multiples(d in 0.1f64..30.0, fps in prop::sample::select(vec![24.0, 25.0, 30.0, 60.0])) {
        let times = frame_times(d, fps);
        prop_assert_eq!(times[0], 0.0);
        prop_assert!(*times.last().unwrap() <= d);
        prop_assert!((times.len() as f64) / fps > d);
        for (k, t) in times.iter().enumerate() {
            prop_assert_eq!(*t, k as f64 / fps);
        }
    }
}
