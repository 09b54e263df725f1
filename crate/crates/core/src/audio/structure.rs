//! Novelty-based structural segmentation and external segment files.
//!
//! Beat-synchronous log-mel features feed a cosine self-similarity matrix; a
//! Gaussian-tapered checkerboard kernel slid along its diagonal gives the
//! novelty curve, whose strong peaks become boundaries snapped to downbeats.

use std::path::{Path, PathBuf};

use super::stft::{stft, Spectrogram, StftConfig};
use super::{AudioBuffer, AudioError};
use crate::model::{check_partition, BeatGrid, SegmentLabel};

/// A structural span before a temperature is assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpan {
    pub start: f64,
    pub end: f64,
    pub label: SegmentLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureConfig {
    pub mel_bands: usize,
    /// Checkerboard kernel size in beats.
    pub kernel_beats: usize,
    pub min_spacing_beats: usize,
    /// Absolute novelty floor on top of the `mean + std` threshold, so a
    /// homogeneous texture yields a single segment.
    pub min_novelty: f64,
    pub min_duration_s: f64,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            mel_bands: 40,
            kernel_beats: 16,
            min_spacing_beats: 8,
            min_novelty: 0.05,
            min_duration_s: 10.0,
        }
    }
}

/// Supplies structural spans that partition the song.
pub trait SegmentProvider {
    fn segments(&self, audio: &AudioBuffer, beats: &BeatGrid) -> Result<Vec<SegmentSpan>, AudioError>;
}

#[derive(Debug, Clone, Default)]
pub struct NoveltySegmenter {
    pub stft: StftConfig,
    pub config: StructureConfig,
}

impl SegmentProvider for NoveltySegmenter {
    fn segments(&self, audio: &AudioBuffer, beats: &BeatGrid) -> Result<Vec<SegmentSpan>, AudioError> {
        segment_structure(audio, beats, self.stft, &self.config)
    }
}

/// Segments read from a `start<TAB>end<TAB>label` file.
#[derive(Debug, Clone)]
pub struct ExternalSegments {
    pub path: PathBuf,
}

impl SegmentProvider for ExternalSegments {
    fn segments(&self, audio: &AudioBuffer, _beats: &BeatGrid) -> Result<Vec<SegmentSpan>, AudioError> {
        load_segment_file(&self.path, audio.duration())
    }
}

pub fn parse_segment_file(text: &str, duration: f64) -> Result<Vec<SegmentSpan>, AudioError> {
    let mut spans = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(AudioError::SegmentFile(format!(
                "line {lineno}: expected `start<TAB>end<TAB>label`, got {} field(s)",
                fields.len()
            )));
        }
        let num = |s: &str, what: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AudioError::SegmentFile(format!("line {lineno}: bad {what} `{s}`")))
        };
        let label = fields[2]
            .parse::<SegmentLabel>()
            .map_err(|e| AudioError::SegmentFile(format!("line {lineno}: {e}")))?;
        spans.push(SegmentSpan {
            start: num(fields[0], "start")?,
            end: num(fields[1], "end")?,
            label,
        });
    }
    let bounds: Vec<_> = spans.iter().map(|s| (s.start, s.end)).collect();
    check_partition(&bounds, duration).map_err(AudioError::NonPartitioning)?;
    Ok(spans)
}

pub fn load_segment_file(path: &Path, duration: f64) -> Result<Vec<SegmentSpan>, AudioError> {
    let text = std::fs::read_to_string(path).map_err(|e| AudioError::Io(format!("{}: {e}", path.display())))?;
    parse_segment_file(&text, duration)
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `[band][bin]`.
pub fn mel_filterbank(n_bands: usize, bin_freqs: &[f64], fmax: f64) -> Vec<Vec<f64>> {
    let mmax = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_bands + 2)
        .map(|i| mel_to_hz(mmax * i as f64 / (n_bands + 1) as f64))
        .collect();
    (0..n_bands)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            bin_freqs
                .iter()
                .map(|&f| {
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Beat-interval boundaries `[0, b0, b1, …, duration]` with duplicates and
/// out-of-range beats removed.
fn beat_intervals(beats: &[f64], duration: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    for &b in beats {
        if b > *edges.last().unwrap() + 1e-9 && b < duration - 1e-9 {
            edges.push(b);
        }
    }
    edges.push(duration);
    edges
}

/// Mean log-mel vector per beat interval.
fn beat_features(spec: &Spectrogram, edges: &[f64], n_bands: usize) -> Vec<Vec<f64>> {
    let fb = mel_filterbank(n_bands, &spec.bin_frequencies, spec.sample_rate as f64 / 2.0);
    let frame_mel: Vec<Vec<f64>> = spec
        .magnitudes
        .iter()
        .map(|frame| {
            fb.iter()
                .map(|w| w.iter().zip(frame).map(|(a, m)| a * m * m).sum::<f64>())
                .collect()
        })
        .collect();
    edges
        .windows(2)
        .map(|w| {
            let mut acc = vec![0.0; n_bands];
            let mut count = 0usize;
            for (t, mel) in spec.frame_times.iter().zip(&frame_mel) {
                if *t >= w[0] && *t < w[1] {
                    for (a, m) in acc.iter_mut().zip(mel) {
                        *a += m;
                    }
                    count += 1;
                }
            }
            if count == 0 {
                // interval shorter than a hop: take the nearest frame
                let mid = 0.5 * (w[0] + w[1]);
                let k = ((mid * spec.frame_rate()).round() as usize).min(frame_mel.len() - 1);
                acc.clone_from(&frame_mel[k]);
                count = 1;
            }
            acc.iter().map(|a| (1.0 + a / count as f64).ln()).collect()
        })
        .collect()
}

fn cosine_ssm(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let norms: Vec<f64> = features
        .iter()
        .map(|f| f.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let n = features.len();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let d = if norms[i] == 0.0 || norms[j] == 0.0 {
                if norms[i] == norms[j] {
                    1.0
                } else {
                    0.0
                }
            } else {
                features[i].iter().zip(&features[j]).map(|(a, b)| a * b).sum::<f64>() / (norms[i] * norms[j])
            };
            s[i][j] = d;
            s[j][i] = d;
        }
    }
    s
}

/// Foote novelty; entry `n` scores a boundary at the start of interval `n`.
/// Positions where the kernel does not fit are zero.
pub fn checkerboard_novelty(ssm: &[Vec<f64>], kernel: usize) -> Vec<f64> {
    let half = (kernel / 2).max(1) as isize;
    let sigma = half as f64 / 2.0;
    let offsets: Vec<isize> = (-half..half).collect();
    let weight = |i: isize, j: isize| {
        // cell centres sit half a step off the boundary
        let (x, y) = (i as f64 + 0.5, j as f64 + 0.5);
        let sign = if (i < 0) == (j < 0) { 1.0 } else { -1.0 };
        sign * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    };
    let norm: f64 = offsets
        .iter()
        .flat_map(|&i| offsets.iter().map(move |&j| weight(i, j).abs()))
        .sum();
    let n = ssm.len() as isize;
    (0..n)
        .map(|c| {
            if c - half < 0 || c + half > n {
                return 0.0;
            }
            let mut acc = 0.0;
            for &i in &offsets {
                for &j in &offsets {
                    acc += weight(i, j) * ssm[(c + i) as usize][(c + j) as usize];
                }
            }
            acc / norm
        })
        .collect()
}

/// Peak indices above `max(mean + std, floor)`, greedily by height with
/// `spacing` enforced against each other and the ends. Earliest wins ties.
pub fn pick_novelty_peaks(novelty: &[f64], spacing: usize, floor: f64) -> Vec<usize> {
    let n = novelty.len();
    if n < 3 {
        return Vec::new();
    }
    let mean = novelty.iter().sum::<f64>() / n as f64;
    let std = (novelty.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let threshold = (mean + std).max(floor);
    let mut cands: Vec<usize> = (1..n - 1)
        .filter(|&i| novelty[i] > threshold && novelty[i] > novelty[i - 1] && novelty[i] >= novelty[i + 1])
        .collect();
    cands.sort_by(|&a, &b| novelty[b].total_cmp(&novelty[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for c in cands {
        if c < spacing || c + spacing > n {
            continue;
        }
        if chosen.iter().all(|&p| p.abs_diff(c) >= spacing) {
            chosen.push(c);
        }
    }
    chosen.sort_unstable();
    chosen
}

fn snap_to_downbeat(t: f64, downbeats: &[f64]) -> f64 {
    downbeats
        .iter()
        .copied()
        .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
        .unwrap_or(t)
}

pub fn segment_structure(
    audio: &AudioBuffer,
    beats: &BeatGrid,
    stft_cfg: StftConfig,
    cfg: &StructureConfig,
) -> Result<Vec<SegmentSpan>, AudioError> {
    let duration = audio.duration();
    if duration < cfg.min_duration_s {
        return Err(AudioError::TooShort {
            what: "structure segmentation",
            needed_s: cfg.min_duration_s,
            got_s: duration,
        });
    }
    let spec = stft(audio, stft_cfg)?.spectrogram();
    let edges = beat_intervals(&beats.beats, duration);
    let features = beat_features(&spec, &edges, cfg.mel_bands);
    let ssm = cosine_ssm(&features);
    let novelty = checkerboard_novelty(&ssm, cfg.kernel_beats);
    let peaks = pick_novelty_peaks(&novelty, cfg.min_spacing_beats, cfg.min_novelty);

    let mut bounds: Vec<f64> = peaks
        .iter()
        .map(|&p| snap_to_downbeat(edges[p], &beats.downbeats))
        .filter(|&t| t > 0.0 && t < duration)
        .collect();
    bounds.sort_by(f64::total_cmp);
    bounds.dedup();

    let mut cuts = vec![0.0];
    cuts.extend(bounds);
    cuts.push(duration);
    Ok(cuts
        .windows(2)
        .map(|w| SegmentSpan {
            start: w[0],
            end: w[1],
            label: SegmentLabel::Unknown,
        })
        .collect())
}
