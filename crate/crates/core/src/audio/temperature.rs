//! Segment temperature: median short-window RMS, normalized across the song
//! and quantized to five levels by optimal one-dimensional k-means.

use super::buffer::rms;
use super::{AudioBuffer, AudioError};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureConfig {
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        Self {
            window_s: 0.5,
            hop_s: 0.25,
        }
    }
}

pub const LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Temperatures {
    pub levels: Vec<u8>,
    /// Min–max normalized per-segment median RMS.
    pub normalized: Vec<f64>,
}

/// `(center_time, rms)` for every full window.
fn windowed_rms(audio: &AudioBuffer, cfg: &TemperatureConfig) -> Vec<(f64, f64)> {
    let sr = audio.sample_rate as f64;
    let win = ((cfg.window_s * sr).round() as usize).max(1);
    let hop = ((cfg.hop_s * sr).round() as usize).max(1);
    if audio.len() < win {
        return vec![(audio.duration() / 2.0, audio.rms())];
    }
    (0..=(audio.len() - win) / hop)
        .map(|j| {
            let s = j * hop;
            ((s as f64 + win as f64 / 2.0) / sr, rms(&audio.samples[s..s + win]))
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median RMS of the windows centred inside each `[start, end)` span; spans
/// too short to hold a window centre fall back to their own RMS.
pub fn segment_median_rms(
    audio: &AudioBuffer,
    spans: &[(f64, f64)],
    cfg: &TemperatureConfig,
) -> Result<Vec<f64>, AudioError> {
    if let Some(i) = spans.iter().position(|s| !(s.1 > s.0)) {
        return Err(AudioError::ZeroDurationSegment(i));
    }
    let windows = windowed_rms(audio, cfg);
    let sr = audio.sample_rate as f64;
    Ok(spans
        .iter()
        .map(|&(s, e)| {
            let inside: Vec<f64> = windows
                .iter()
                .filter(|(c, _)| *c >= s && *c < e)
                .map(|&(_, r)| r)
                .collect();
            if inside.is_empty() {
                let a = ((s * sr).round() as usize).min(audio.len());
                let b = ((e * sr).round() as usize).clamp(a, audio.len());
                rms(&audio.samples[a..b])
            } else {
                median(inside)
            }
        })
        .collect())
}

/// Maps values to `[0, 1]`; a constant input maps to all zeros.
pub fn normalize_min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
}

/// Result of one-dimensional k-means: ascending centroids and, per value, the
/// index of its cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<f64>,
    pub assignment: Vec<usize>,
}

impl Clustering {
    pub fn sse(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.assignment)
            .map(|(v, &a)| (v - self.centroids[a]).powi(2))
            .sum()
    }
}

/// Within-group sum of squared deviations of `values[a..b]` weighted by
/// `counts[a..b]`.
fn group_cost(values: &[f64], counts: &[usize], a: usize, b: usize) -> f64 {
    let n: usize = counts[a..b].iter().sum();
    let mean = values[a..b]
        .iter()
        .zip(&counts[a..b])
        .map(|(v, &c)| v * c as f64)
        .sum::<f64>()
        / n as f64;
    values[a..b]
        .iter()
        .zip(&counts[a..b])
        .map(|(v, &c)| c as f64 * (v - mean).powi(2))
        .sum()
}

/// Globally optimal one-dimensional k-means by dynamic programming over the
/// sorted distinct values (clusters of a 1-D optimum are contiguous).
/// `k` is clamped to the number of distinct values.
pub fn kmeans_1d(values: &[f64], k: usize) -> Clustering {
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let m = distinct.len();
    if m == 0 {
        return Clustering {
            centroids: Vec::new(),
            assignment: Vec::new(),
        };
    }
    let counts: Vec<usize> = distinct
        .iter()
        .map(|d| values.iter().filter(|v| *v == d).count())
        .collect();
    let k = k.clamp(1, m);

    // best[g][j]: cost of splitting distinct[..j] into g + 1 groups
    let mut best = vec![vec![f64::INFINITY; m + 1]; k];
    let mut cut = vec![vec![0usize; m + 1]; k];
    for j in 1..=m {
        best[0][j] = group_cost(&distinct, &counts, 0, j);
    }
    for g in 1..k {
        for j in g + 1..=m {
            for i in g..j {
                let c = best[g - 1][i] + group_cost(&distinct, &counts, i, j);
                // strict comparison keeps the earliest cut on ties
                if c < best[g][j] {
                    best[g][j] = c;
                    cut[g][j] = i;
                }
            }
        }
    }
    let mut bounds = vec![m];
    let mut j = m;
    for g in (1..k).rev() {
        j = cut[g][j];
        bounds.push(j);
    }
    bounds.push(0);
    bounds.reverse();

    let mut centroids = Vec::with_capacity(k);
    let mut group_of = vec![0usize; m];
    for (g, w) in bounds.windows(2).enumerate() {
        let n: usize = counts[w[0]..w[1]].iter().sum();
        let sum: f64 = distinct[w[0]..w[1]]
            .iter()
            .zip(&counts[w[0]..w[1]])
            .map(|(v, &c)| v * c as f64)
            .sum();
        centroids.push(sum / n as f64);
        group_of[w[0]..w[1]].iter_mut().for_each(|x| *x = g);
    }
    let assignment = values
        .iter()
        .map(|v| group_of[distinct.partition_point(|d| d < v)])
        .collect();
    Clustering { centroids, assignment }
}

/// Level for cluster rank `j` (1-based) out of `k`.
pub fn rank_to_level(j: usize, k: usize) -> u8 {
    if k <= 1 {
        return 3;
    }
    (1.0 + 4.0 * (j - 1) as f64 / (k - 1) as f64).round() as u8
}

/// Quantizes normalized energies to temperature levels 1..=5.
pub fn quantize_levels(normalized: &[f64]) -> Vec<u8> {
    if normalized.is_empty() {
        return Vec::new();
    }
    let mut distinct = normalized.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = LEVELS.min(distinct.len());
    let clustering = kmeans_1d(normalized, k);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| clustering.centroids[a].total_cmp(&clustering.centroids[b]));
    let mut rank = vec![0; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r + 1;
    }
    clustering
        .assignment
        .iter()
        .map(|&a| rank_to_level(rank[a], k))
        .collect()
}

pub fn compute_temperature(
    audio: &AudioBuffer,
    spans: &[(f64, f64)],
    cfg: &TemperatureConfig,
) -> Result<Temperatures, AudioError> {
    if spans.is_empty() {
        return Err(AudioError::Config("temperature needs at least one segment".into()));
    }
    let medians = segment_median_rms(audio, spans, cfg)?;
    let normalized = normalize_min_max(&medians);
    Ok(Temperatures {
        levels: quantize_levels(&normalized),
        normalized,
    })
}
