//! Spectral-flux onset strength.

use super::stft::Spectrogram;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnsetConfig {
    /// `ln(1 + gain * |X|)` compression gain.
    pub log_gain: f64,
    /// Width of the centred moving mean that is subtracted, seconds.
    pub mean_window_s: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            log_gain: 1000.0,
            mean_window_s: 0.5,
        }
    }
}

/// Non-negative novelty per spectrogram frame, starting at frame 1.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetEnvelope {
    pub values: Vec<f64>,
    pub frame_rate: f64,
    /// Time of `values[0]` (the second spectrogram frame).
    pub start_time: f64,
}

impl OnsetEnvelope {
    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 / self.frame_rate
    }

    /// Fractional index to time.
    pub fn time_at(&self, pos: f64) -> f64 {
        self.start_time + pos / self.frame_rate
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.frame_rate
    }

    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.values.iter().sum::<f64>() / n;
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }
}

/// Half-wave rectified log-magnitude flux summed over `bins`
/// (all bins when `None`). Entry `i` describes frame `i + 1`.
pub fn band_flux(spec: &Spectrogram, bins: Option<&[usize]>, log_gain: f64) -> Vec<f64> {
    let compress = |m: f64| (1.0 + log_gain * m).ln();
    let all: Vec<usize>;
    let bins = match bins {
        Some(b) => b,
        None => {
            all = (0..spec.n_bins()).collect();
            &all
        }
    };
    spec.magnitudes
        .windows(2)
        .map(|w| {
            bins.iter()
                .map(|&b| (compress(w[1][b]) - compress(w[0][b])).max(0.0))
                .sum()
        })
        .collect()
}

/// Centred moving mean over `2 * half + 1` samples (truncated at edges).
pub(crate) fn moving_mean(x: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

pub fn onset_envelope(spec: &Spectrogram, cfg: OnsetConfig) -> OnsetEnvelope {
    let flux = band_flux(spec, None, cfg.log_gain);
    let frame_rate = spec.frame_rate();
    let half = ((cfg.mean_window_s * frame_rate) / 2.0).round() as usize;
    let mean = moving_mean(&flux, half);
    let values = flux
        .iter()
        .zip(&mean)
        .map(|(f, m)| {
            let v = f - m;
            // tolerate prefix-sum rounding on flat input
            if v > 1e-9 * (1.0 + f.abs()) {
                v
            } else {
                0.0
            }
        })
        .collect();
    OnsetEnvelope {
        values,
        frame_rate,
        start_time: spec.frame_times.get(1).copied().unwrap_or(0.0),
    }
}
