//! Reference implementations used as independent oracles, plus generators.
#![allow(dead_code)]

use lumascape_core::model::{
    quantize, AnalysisResult, BeatGrid, Color, ColorPalette, Hsv, PercussiveEvents, Segment, SegmentLabel,
};
use proptest::prelude::*;
use std::path::{Path, PathBuf};

use lumascape_core::audio::{write_wav, AudioBuffer};
use lumascape_core::testkit::*;
use lumascape_core::video::write_raw_stream;

/// Midrank of each value by direct counting: `1 + #smaller + (#equal − 1)/2`.
pub fn naive_midranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let less = values.iter().filter(|&&u| u < v).count() as f64;
            let equal = values.iter().filter(|&&u| u == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact signed-rank p by enumerating all 2ⁿ sign patterns:
/// the share of patterns whose `min(T⁺, T⁻)` is at most the observed one.
/// Differences are compared exactly; zeros are dropped.
pub fn brute_force_signed_rank_p(diffs: &[f64]) -> Option<(f64, f64, usize)> {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    if d.is_empty() {
        return None;
    }
    let ranks = naive_midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let total: f64 = ranks.iter().sum();
    let t_plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let w = t_plus.min(total - t_plus);
    let n = d.len();
    let mut hits = 0u64;
    for mask in 0u64..(1u64 << n) {
        let tp: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if tp.min(total - tp) <= w {
            hits += 1;
        }
    }
    Some((hits as f64 / (1u64 << n) as f64, w, n))
}

/// Holm adjustment written from its textbook form: the j-th smallest p
/// becomes `max_{i ≤ j} min(1, (m − i + 1) · p_(i))`.
pub fn textbook_holm(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    for (j, &target) in idx.iter().enumerate() {
        out[target] = (0..=j)
            .map(|i| ((m - i) as f64 * p[idx[i]]).min(1.0))
            .fold(0.0, f64::max);
    }
    out
}

/// Smallest within-cluster sum of squares over every split of the sorted
/// values into `k` non-empty contiguous runs.
pub fn brute_force_kmeans_sse(values: &[f64], k: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let sse = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    fn rec(v: &[f64], k: usize, sse: &dyn Fn(&[f64]) -> f64) -> f64 {
        if k == 1 {
            return sse(v);
        }
        (1..=v.len() - (k - 1))
            .map(|cut| sse(&v[..cut]) + rec(&v[cut..], k - 1, sse))
            .fold(f64::INFINITY, f64::min)
    }
    rec(&v, k, &sse)
}

/// Greedy one-to-one matching within `tol`; returns (precision, recall, f1).
pub fn f1_score(detected: &[f64], truth: &[f64], tol: f64) -> (f64, f64, f64) {
    let mut used = vec![false; truth.len()];
    let mut hits = 0usize;
    for &d in detected {
        let best = truth
            .iter()
            .enumerate()
            .filter(|(i, t)| !used[*i] && (d - **t).abs() <= tol)
            .min_by(|a, b| (d - a.1).abs().total_cmp(&(d - b.1).abs()));
        if let Some((i, _)) = best {
            used[i] = true;
            hits += 1;
        }
    }
    let precision = if detected.is_empty() {
        0.0
    } else {
        hits as f64 / detected.len() as f64
    };
    let recall = if truth.is_empty() {
        0.0
    } else {
        hits as f64 / truth.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Share of true beats with a detected beat within `tol`.
pub fn beat_hit_rate(detected: &[f64], truth: &[f64], tol: f64) -> f64 {
    let hits = truth
        .iter()
        .filter(|t| detected.iter().any(|d| (d - **t).abs() <= tol))
        .count();
    hits as f64 / truth.len() as f64
}

/// Magnitude of one frame by a direct DFT: periodic Hann window centred on
/// `center` (zero outside the signal), scaled by the window sum.
pub fn direct_dft_magnitudes(x: &[f64], center: usize, window: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let hann: Vec<f64> = (0..window)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / window as f64).cos())
        .collect();
    let norm: f64 = hann.iter().sum();
    let frame: Vec<f64> = (0..window)
        .map(|n| {
            let i = center as isize + n as isize - (window / 2) as isize;
            if i >= 0 && (i as usize) < x.len() {
                x[i as usize] * hann[n]
            } else {
                0.0
            }
        })
        .collect();
    (0..=window / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in frame.iter().enumerate() {
                let a = -2.0 * PI * (k * n) as f64 / window as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re * re + im * im).sqrt() / norm
        })
        .collect()
}

pub fn test_palette() -> ColorPalette {
    let c = |h, s, v| Color::from_hsv(Hsv::new(h, s, v));
    ColorPalette {
        primary: c(0.0, 1.0, 1.0),
        soft_primary: c(0.0, 0.6, 0.9),
        secondary: c(240.0, 1.0, 1.0),
        soft_secondary: c(240.0, 0.6, 0.9),
        background: c(0.0, 0.0, 0.5),
    }
}

fn strictly_increasing_times(raw: Vec<f64>, min_gap: f64, below: f64) -> Vec<f64> {
    let mut v: Vec<f64> = raw.into_iter().map(quantize).filter(|t| *t < below).collect();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for t in v {
        if out.last().is_none_or(|l| t - l >= min_gap) {
            out.push(t);
        }
    }
    out
}

/// Random but structurally valid analysis results, already on the
/// six-decimal grid.
pub fn analysis_strategy() -> impl Strategy<Value = AnalysisResult> {
    (
        20.0f64..120.0,
        prop::collection::vec(0.0f64..1.0, 0..6),
        prop::collection::vec(1u8..=5, 6),
        60.0f64..180.0,
        0.0f64..0.5,
        prop::collection::vec(0.0f64..1.0, 0..80),
        prop::collection::vec(0.0f64..1.0, 0..80),
        prop::collection::vec(0.0f64..1.0, 6),
    )
        .prop_map(|(duration, cuts, temps, bpm, offset, kicks, snares, rms)| {
            let duration = quantize(duration);
            let mut bounds: Vec<f64> = cuts.iter().map(|c| quantize(c * duration)).collect();
            bounds.sort_by(f64::total_cmp);
            let mut edges = vec![0.0];
            for b in bounds {
                if b - edges.last().unwrap() >= 2.0 && duration - b >= 2.0 {
                    edges.push(b);
                }
            }
            edges.push(duration);
            let segments: Vec<Segment> = edges
                .windows(2)
                .enumerate()
                .map(|(i, w)| Segment::new(w[0], w[1], SegmentLabel::Unknown, temps[i]))
                .collect();
            let period = 60.0 / bpm;
            let beats: Vec<f64> = (0..)
                .map(|k| quantize(offset + k as f64 * period))
                .take_while(|b| *b <= duration)
                .collect();
            let downbeats = beats.iter().step_by(4).copied().collect();
            let scale = |v: Vec<f64>| v.into_iter().map(|x| x * duration).collect::<Vec<_>>();
            AnalysisResult {
                duration,
                beat_grid: BeatGrid {
                    bpm: quantize(bpm),
                    beats,
                    downbeats,
                },
                per_segment_median_rms: rms[..segments.len()].iter().map(|x| quantize(*x)).collect(),
                segments,
                events: PercussiveEvents {
                    kicks: strictly_increasing_times(scale(kicks), 0.1, duration - 0.01),
                    snares: strictly_increasing_times(scale(snares), 0.1, duration - 0.01),
                },
            }
        })
}

/// A quiet first half and a loud second half over a steady drum pattern,
/// plus matching red/blue frames. Returns (audio, frames).
pub fn write_song(dir: &Path) -> (PathBuf, PathBuf) {
    let secs = 24.0;
    let drums = drum_pattern(secs, 3).audio;
    let low = sine(330.0, 0.2, secs, SR);
    let high = mix(&sine(523.0, 0.3, secs, SR), &white_noise(0.2, secs, SR, 4));
    let half = drums.len() / 2;
    let samples: Vec<f64> = (0..drums.len())
        .map(|i| {
            let d = drums.samples[i];
            if i < half {
                0.2 * (d + low.samples[i])
            } else {
                0.7 * d + high.samples[i]
            }
        })
        .collect();
    let audio_path = dir.join("song.wav");
    write_wav(&audio_path, &AudioBuffer::new(samples, SR).unwrap()).unwrap();

    let frames = banded_frames(
        &[([230, 20, 20], 0.6), ([20, 20, 230], 0.3), ([120, 120, 120], 0.1)],
        64,
        36,
        48,
        2.0,
    );
    let frames_path = dir.join("frames.raw");
    write_raw_stream(&frames_path, &frames.frames, 2.0).unwrap();
    (audio_path, frames_path)
}
