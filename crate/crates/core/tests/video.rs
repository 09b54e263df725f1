use lumascape_core::model::{Color, Hsv};
use lumascape_core::testkit::banded_frames;
use lumascape_core::video::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RED: [u8; 3] = [220, 30, 30];
const BLUE: [u8; 3] = [30, 40, 210];
const GRAY: [u8; 3] = [128, 128, 128];

fn jittered(frames: FrameSet, amount: i32, seed: u64) -> FrameSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FrameSet {
        frames: frames
            .frames
            .into_iter()
            .map(|mut f| {
                for p in f.pixels.iter_mut() {
                    *p = (*p as i32 + rng.random_range(-amount..=amount)).clamp(0, 255) as u8;
                }
                f
            })
            .collect(),
        source: frames.source,
    }
}

fn within(c: &Color, want: [u8; 3], tol: i32) -> bool {
    c.channels()
        .iter()
        .zip(want)
        .all(|(a, b)| (*a as i32 - b as i32).abs() <= tol)
}

fn sixty_thirty_ten() -> FrameSet {
    jittered(
        banded_frames(&[(RED, 0.6), (BLUE, 0.3), (GRAY, 0.1)], 64, 48, 12, 24.0),
        3,
        8,
    )
}

#[test]
fn roles_follow_dominant_colors() {
    let (palette, clusters) = palette_from_frames(&sixty_thirty_ten(), &PaletteConfig::default()).unwrap();
    assert!(within(&palette.primary, RED, 5), "{:?}", palette.primary);
    assert!(within(&palette.secondary, BLUE, 5), "{:?}", palette.secondary);
    assert!(within(&palette.background, GRAY, 5), "{:?}", palette.background);
    let total: f64 = clusters.iter().map(|c| c.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(clusters.windows(2).all(|w| w[0].weight >= w[1].weight));
}

#[test]
fn soft_variants_keep_hue_and_lose_saturation() {
    let (palette, _) = palette_from_frames(&sixty_thirty_ten(), &PaletteConfig::default()).unwrap();
    for (base, soft) in [
        (palette.primary, palette.soft_primary),
        (palette.secondary, palette.soft_secondary),
    ] {
        assert_eq!(soft.hsv().h, base.hsv().h);
        assert!(soft.hsv().s < base.hsv().s);
        assert!(soft.hsv_consistent());
    }
}

#[test]
fn same_seed_same_palette() {
    let frames = sixty_thirty_ten();
    let cfg = PaletteConfig::default();
    assert_eq!(palette_from_frames(&frames, &cfg), palette_from_frames(&frames, &cfg));
}

#[test]
fn raw_stream_and_png_sequence_agree() {
    let dir = tempfile::tempdir().unwrap();
    let frames = banded_frames(&[(RED, 0.5), (BLUE, 0.5)], 320, 180, 30, 10.0);
    let raw = dir.path().join("frames.raw");
    let seq = dir.path().join("seq");
    write_raw_stream(&raw, &frames.frames, 10.0).unwrap();
    write_png_sequence(&seq, &frames.frames, 10.0).unwrap();
    let cfg = FrameConfig::default();
    let a = ingest_frames(&raw, 1.0, 2.0, &cfg).unwrap();
    let b = ingest_frames(&seq, 1.0, 2.0, &cfg).unwrap();
    assert_eq!(a.frames.len(), 10);
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.frames[0].width, 160);
    assert_eq!(a.frames[0].height, 90);
    assert!(matches!(
        ingest_frames(&raw, 50.0, 60.0, &cfg),
        Err(VideoError::NoFramesInSegment { .. })
    ));
}

#[test]
fn single_color_fills_every_role() {
    let frames = banded_frames(&[([200, 20, 20], 1.0)], 16, 16, 2, 1.0);
    let (palette, _) = palette_from_frames(&frames, &PaletteConfig::default()).unwrap();
    for (_, c) in palette.entries() {
        assert!(c.hsv_consistent());
    }
    assert!(within(&palette.primary, [200, 20, 20], 0));
    assert_ne!(palette.secondary.channels(), palette.primary.channels());
}

proptest! {
    #[test]
    fn soft_color_keeps_hue(h in 0.0f64..360.0, s in 0.01f64..1.0, v in 0.05f64..1.0) {
        let cfg = PaletteConfig::default();
        let base = Color::from_hsv(Hsv::new(h, s, v));
        let soft = derive_soft_color(&base, &cfg);
        prop_assert_eq!(soft.hsv().h, base.hsv().h);
        prop_assert!(soft.hsv().s < base.hsv().s);
        prop_assert!(soft.hsv().v >= base.hsv().v);
    }

    #[test]
    fn subsample_is_increasing_and_bounded(n in 0usize..500, m in 1usize..120) {
        let idx = subsample_indices(n, m);
        prop_assert_eq!(idx.len(), n.min(m));
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.iter().all(|&i| i < n));
    }
}
