//! Global tempo by autocorrelation and beat placement by dynamic programming.
//!
//! The beat sequence maximises `Σ env(b_i) − λ Σ ln(Δb_i / τ)²` where `τ` is
//! the autocorrelation period. Predecessors are searched in
//! `[0.7τ, 1.3τ]` so consecutive beats never stray more than 30% from the
//! period.

use super::onset::OnsetEnvelope;
use super::AudioError;
use crate::model::BeatGrid;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeatConfig {
    pub bpm_min: f64,
    pub bpm_max: f64,
    /// λ, weight of the log-interval penalty.
    pub tightness: f64,
    pub beats_per_bar: usize,
    /// Centre of the log-Gaussian tempo preference that resolves octave
    /// ambiguity in the autocorrelation.
    pub prior_bpm: f64,
    /// Width of that preference in octaves; 0 disables it.
    pub prior_octaves: f64,
}

impl Default for BeatConfig {
    fn default() -> Self {
        Self {
            bpm_min: 60.0,
            bpm_max: 180.0,
            tightness: 100.0,
            beats_per_bar: 4,
            prior_bpm: 120.0,
            prior_octaves: 1.0,
        }
    }
}

const MIN_ENVELOPE_VARIANCE: f64 = 1e-8;
const INTERVAL_SLACK: f64 = 0.3;
/// Gaussian width applied before autocorrelation so a period that is not a
/// whole number of frames still gives one clear peak.
const TEMPO_SMOOTHING_FRAMES: f64 = 1.5;

fn gaussian_smooth(x: &[f64], sigma: f64) -> Vec<f64> {
    let half = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    (0..x.len() as isize)
        .map(|i| {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (j, w) in (-half..=half).zip(&kernel) {
                if let Some(v) = x.get((i + j) as usize).filter(|_| i + j >= 0) {
                    acc += w * v;
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect()
}

/// Tempo period in frames (fractional) from the mean-removed, biased
/// autocorrelation, weighted by the tempo preference, searched over the BPM
/// range and refined by parabolic interpolation.
pub fn estimate_period(env: &OnsetEnvelope, cfg: &BeatConfig) -> Option<f64> {
    let x = gaussian_smooth(&env.values, TEMPO_SMOOTHING_FRAMES);
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let lag_min = (60.0 * env.frame_rate / cfg.bpm_max).floor().max(1.0) as usize;
    let lag_max = (60.0 * env.frame_rate / cfg.bpm_min).ceil() as usize;
    if lag_max + 1 >= n {
        return None;
    }
    let acf = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let prior = |lag: usize| {
        if cfg.prior_octaves <= 0.0 {
            return 1.0;
        }
        let octaves = (60.0 * env.frame_rate / lag as f64 / cfg.prior_bpm).log2() / cfg.prior_octaves;
        (-0.5 * octaves * octaves).exp()
    };
    let values: Vec<f64> = (lag_min - 1..=lag_max + 1).map(|l| acf(l) * prior(l)).collect();
    // search strictly inside so both neighbours exist; earliest wins ties
    let mut best = 1;
    for i in 1..values.len() - 1 {
        if values[i] > values[best] {
            best = i;
        }
    }
    if values[best] <= 0.0 {
        return None;
    }
    let (a, b, c) = (values[best - 1], values[best], values[best + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let lag = (lag_min - 1 + best) as f64 + offset;
    // keep the refined period inside the requested range
    let lo = 60.0 * env.frame_rate / cfg.bpm_max;
    let hi = 60.0 * env.frame_rate / cfg.bpm_min;
    Some(lag.clamp(lo, hi))
}

/// Sub-frame peak position around integer index `i`.
fn refine_peak(x: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= x.len() {
        return i as f64;
    }
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom < 0.0 {
        i as f64 + (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        i as f64
    }
}

pub fn track_beats(env: &OnsetEnvelope, cfg: &BeatConfig) -> Result<BeatGrid, AudioError> {
    if env.duration() < 5.0 {
        return Err(AudioError::TooShort {
            what: "beat tracking",
            needed_s: 5.0,
            got_s: env.duration(),
        });
    }
    if env.variance() < MIN_ENVELOPE_VARIANCE {
        return Err(AudioError::NoBeatFound);
    }
    let period = estimate_period(env, cfg).ok_or(AudioError::NoBeatFound)?;
    let x = &env.values;
    let n = x.len();

    let min_step = ((1.0 - INTERVAL_SLACK) * period).ceil().max(1.0) as usize;
    let max_step = ((1.0 + INTERVAL_SLACK) * period).floor() as usize;
    let mut score = vec![0.0; n];
    let mut back: Vec<Option<usize>> = vec![None; n];
    for t in 0..n {
        let mut best: Option<(f64, usize)> = None;
        if t >= min_step {
            let lo = t.saturating_sub(max_step);
            for p in lo..=t - min_step {
                let dev = ((t - p) as f64 / period).ln();
                let cand = score[p] - cfg.tightness * dev * dev;
                if best.is_none_or(|(s, _)| cand > s) {
                    best = Some((cand, p));
                }
            }
        }
        match best {
            // starting a fresh chain is allowed only before the first period
            Some((s, p)) if s > 0.0 || t > max_step => {
                score[t] = x[t] + s;
                back[t] = Some(p);
            }
            _ => score[t] = x[t],
        }
    }

    let tail_start = n.saturating_sub(period.round() as usize);
    let mut last = tail_start;
    for t in tail_start..n {
        if score[t] > score[last] {
            last = t;
        }
    }
    let mut frames = vec![last];
    while let Some(p) = back[*frames.last().unwrap()] {
        frames.push(p);
    }
    frames.reverse();

    let beats: Vec<f64> = frames
        .iter()
        .map(|&f| env.time_at(refine_peak(x, f)).max(0.0))
        .collect();
    let bpm = 60.0 * env.frame_rate / period;

    let bar = cfg.beats_per_bar.max(1);
    let mut best_phase = 0;
    let mut best_sum = f64::NEG_INFINITY;
    for phase in 0..bar.min(frames.len()) {
        let s: f64 = frames.iter().skip(phase).step_by(bar).map(|&f| x[f]).sum();
        if s > best_sum {
            best_sum = s;
            best_phase = phase;
        }
    }
    let downbeats = beats.iter().copied().skip(best_phase).step_by(bar).collect();
    Ok(BeatGrid { bpm, beats, downbeats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse_env(bpm: f64, secs: f64, frame_rate: f64) -> OnsetEnvelope {
        let n = (secs * frame_rate) as usize;
        let mut values = vec![0.0; n];
        let period = 60.0 / bpm;
        let mut t = 0.3;
        while t < secs {
            let i = (t * frame_rate).round() as usize;
            if i < n {
                values[i] = 1.0;
            }
            t += period;
        }
        OnsetEnvelope {
            values,
            frame_rate,
            start_time: 0.0,
        }
    }

    #[test]
    fn flat_envelope_has_no_beat() {
        let env = OnsetEnvelope {
            values: vec![0.5; 1000],
            frame_rate: 86.0,
            start_time: 0.0,
        };
        assert!(matches!(
            track_beats(&env, &BeatConfig::default()),
            Err(AudioError::NoBeatFound)
        ));
    }

    #[test]
    fn short_envelope_rejected() {
        let env = impulse_env(120.0, 3.0, 86.0);
        assert!(matches!(
            track_beats(&env, &BeatConfig::default()),
            Err(AudioError::TooShort { .. })
        ));
    }

    #[test]
    fn impulse_train_tempo_and_grid() {
        let env = impulse_env(120.0, 20.0, 100.0);
        let grid = track_beats(&env, &BeatConfig::default()).unwrap();
        assert!((grid.bpm - 120.0).abs() < 1.0, "bpm {}", grid.bpm);
        assert!(grid.beats.windows(2).all(|w| w[1] > w[0]));
        for w in grid.beats.windows(2) {
            let d = w[1] - w[0];
            assert!((d - 0.5).abs() <= 0.3 * 0.5 + 1e-9);
        }
        assert!(grid.downbeats.iter().all(|d| grid.beats.contains(d)));
        assert!(grid.downbeats.len() >= grid.beats.len() / 4);
    }
}
