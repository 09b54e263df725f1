//! Kick and snare events from band-limited spectral flux of the drum stem.

use super::hpss::median_filter;
use super::stft::{stft, Spectrogram, StftConfig};
use super::{AudioBuffer, AudioError};
use crate::model::PercussiveEvents;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrumConfig {
    /// Kick band `[lo, hi]` in Hz.
    pub kick_band: [f64; 2],
    /// Snare bands in Hz; their bins are pooled.
    pub snare_bands: Vec<[f64; 2]>,
    pub median_window_s: f64,
    /// Multiplier on the global median absolute deviation.
    pub delta: f64,
    pub min_interval_s: f64,
    pub log_gain: f64,
    /// Peaks must also reach this fraction of the strongest flux value within
    /// `relative_window_s`. The MAD term vanishes when flux is sparse, which
    /// would admit any ripple.
    pub min_relative_strength: f64,
    pub relative_window_s: f64,
}

impl Default for DrumConfig {
    fn default() -> Self {
        Self {
            kick_band: [30.0, 120.0],
            snare_bands: vec![[150.0, 400.0], [1000.0, 4000.0]],
            median_window_s: 1.0,
            delta: 2.0,
            min_interval_s: 0.1,
            log_gain: 1.0,
            min_relative_strength: 0.3,
            relative_window_s: 4.0,
        }
    }
}

impl DrumConfig {
    pub fn check(&self) -> Result<(), AudioError> {
        let bands = std::iter::once(&self.kick_band).chain(&self.snare_bands);
        for b in bands {
            if !(b[0] >= 0.0 && b[0] < b[1]) {
                return Err(AudioError::Config(format!("drum band [{}, {}] is empty", b[0], b[1])));
            }
        }
        if !(self.min_interval_s > 0.0
            && self.median_window_s > 0.0
            && self.relative_window_s > 0.0
            && self.delta >= 0.0)
            || !(0.0..=1.0).contains(&self.min_relative_strength)
        {
            return Err(AudioError::Config("drum detector parameters out of range".into()));
        }
        Ok(())
    }
}

/// Rectified log-flux over `bins`. Entry `k` describes frame `k`; frame 0 is
/// compared with silence so a hit at the very start is still an onset.
fn flux_from_silence(spec: &Spectrogram, bins: &[usize], log_gain: f64) -> Vec<f64> {
    let compress = |m: f64| (1.0 + log_gain * m).ln();
    let zero = vec![0.0; spec.n_bins()];
    (0..spec.n_frames())
        .map(|k| {
            let prev = if k == 0 { &zero } else { &spec.magnitudes[k - 1] };
            let cur = &spec.magnitudes[k];
            bins.iter()
                .map(|&b| (compress(cur[b]) - compress(prev[b])).max(0.0))
                .sum()
        })
        .collect()
}

fn band_energy(spec: &Spectrogram, bins: &[usize]) -> Vec<f64> {
    spec.magnitudes
        .iter()
        .map(|f| bins.iter().map(|&b| f[b] * f[b]).sum())
        .collect()
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Peak picking on `flux` with an adaptive threshold, greedy minimum-interval
/// suppression and energy-based refinement. Returns event times.
pub fn pick_events(flux: &[f64], energy: &[f64], frame_times: &[f64], frame_rate: f64, cfg: &DrumConfig) -> Vec<f64> {
    let n = flux.len();
    if n == 0 {
        return Vec::new();
    }
    let half = (cfg.median_window_s * frame_rate / 2.0).round() as usize;
    let local = median_filter(flux, 2 * half + 1);
    let m = median(flux);
    let deviations: Vec<f64> = flux.iter().map(|v| (v - m).abs()).collect();
    let mad = median(&deviations);
    let reach = (cfg.relative_window_s * frame_rate / 2.0).round() as usize;
    let floor = |i: usize| {
        let lo = i.saturating_sub(reach);
        let hi = (i + reach + 1).min(n);
        cfg.min_relative_strength * flux[lo..hi].iter().copied().fold(0.0, f64::max)
    };

    let at = |i: isize| {
        if i < 0 || i as usize >= n {
            f64::NEG_INFINITY
        } else {
            flux[i as usize]
        }
    };
    let mut cands: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = flux[i];
            v > 0.0
                && v >= floor(i)
                && v > local[i] + cfg.delta * mad
                && v >= at(i as isize - 1)
                && v > at(i as isize + 1)
        })
        .collect();
    cands.sort_by(|&a, &b| flux[b].total_cmp(&flux[a]).then(a.cmp(&b)));

    let min_gap = cfg.min_interval_s - 1e-9;
    let mut chosen: Vec<usize> = Vec::new();
    for c in cands {
        if chosen
            .iter()
            .all(|&p| (frame_times[p] - frame_times[c]).abs() >= min_gap)
        {
            chosen.push(c);
        }
    }
    chosen.sort_unstable();

    let mut times: Vec<f64> = chosen
        .iter()
        .map(|&f| {
            let lo = f.saturating_sub(1);
            let hi = (f + 1).min(n - 1);
            let mut best = f;
            for g in lo..=hi {
                if energy[g] > energy[best] {
                    best = g;
                }
            }
            frame_times[best]
        })
        .collect();
    times.dedup();
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        if out.last().is_none_or(|&l| t - l >= min_gap) {
            out.push(t);
        }
    }
    out
}

pub fn detect_kick_snare(
    drums: &AudioBuffer,
    stft_cfg: StftConfig,
    cfg: &DrumConfig,
) -> Result<PercussiveEvents, AudioError> {
    cfg.check()?;
    stft_cfg.check()?;
    let duration = drums.duration();
    let mut padded = drums.clone();
    if padded.len() < stft_cfg.window {
        padded.samples.resize(stft_cfg.window, 0.0);
    }
    let spec = stft(&padded, stft_cfg)?.spectrogram();
    let frame_rate = spec.frame_rate();

    let kick_bins = spec.bins_in(cfg.kick_band[0], cfg.kick_band[1]);
    let mut snare_bins: Vec<usize> = cfg.snare_bands.iter().flat_map(|b| spec.bins_in(b[0], b[1])).collect();
    snare_bins.sort_unstable();
    snare_bins.dedup();

    let detect = |bins: &[usize]| -> Vec<f64> {
        if bins.is_empty() {
            return Vec::new();
        }
        let flux = flux_from_silence(&spec, bins, cfg.log_gain);
        let energy = band_energy(&spec, bins);
        pick_events(&flux, &energy, &spec.frame_times, frame_rate, cfg)
            .into_iter()
            .filter(|&t| t < duration)
            .collect()
    };

    Ok(PercussiveEvents {
        kicks: detect(&kick_bins),
        snares: detect(&snare_bins),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SR: u32 = 44100;

    fn add_kick(buf: &mut [f64], t0: f64) {
        let start = (t0 * SR as f64) as usize;
        for i in 0..(0.25 * SR as f64) as usize {
            if start + i >= buf.len() {
                break;
            }
            let t = i as f64 / SR as f64;
            buf[start + i] += 0.8 * (-t / 0.06).exp() * (2.0 * PI * 60.0 * t).sin();
        }
    }

    #[test]
    fn silence_yields_no_events() {
        let a = AudioBuffer::new(vec![0.0; SR as usize * 3], SR).unwrap();
        let ev = detect_kick_snare(&a, StftConfig::default(), &DrumConfig::default()).unwrap();
        assert!(ev.kicks.is_empty() && ev.snares.is_empty());
    }

    #[test]
    fn close_kicks_merge() {
        let mut buf = vec![0.0; SR as usize * 2];
        add_kick(&mut buf, 0.5);
        add_kick(&mut buf, 0.54);
        let a = AudioBuffer::new(buf, SR).unwrap();
        let ev = detect_kick_snare(&a, StftConfig::default(), &DrumConfig::default()).unwrap();
        assert_eq!(ev.kicks.len(), 1, "{:?}", ev.kicks);
        assert!((ev.kicks[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn kick_at_time_zero_is_found() {
        let mut buf = vec![0.0; SR as usize * 2];
        add_kick(&mut buf, 0.0);
        add_kick(&mut buf, 1.0);
        let a = AudioBuffer::new(buf, SR).unwrap();
        let ev = detect_kick_snare(&a, StftConfig::default(), &DrumConfig::default()).unwrap();
        assert_eq!(ev.kicks.len(), 2, "{:?}", ev.kicks);
        assert!(ev.kicks[0] < 0.05);
    }

    #[test]
    fn quiet_hits_far_from_a_loud_one_survive() {
        let mut buf = vec![0.0; SR as usize * 9];
        add_kick(&mut buf, 0.5);
        let mut quiet = vec![0.0; buf.len()];
        add_kick(&mut quiet, 6.0);
        add_kick(&mut quiet, 7.0);
        for (b, q) in buf.iter_mut().zip(&quiet) {
            *b += 0.15 * q;
        }
        let a = AudioBuffer::new(buf, SR).unwrap();
        let ev = detect_kick_snare(&a, StftConfig::default(), &DrumConfig::default()).unwrap();
        assert_eq!(ev.kicks.len(), 3, "{:?}", ev.kicks);
    }

    #[test]
    fn rejects_empty_band() {
        let cfg = DrumConfig {
            kick_band: [120.0, 30.0],
            ..DrumConfig::default()
        };
        assert!(cfg.check().is_err());
    }
}
