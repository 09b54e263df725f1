//! Centered short-time Fourier transform and its weighted overlap-add
//! inverse.
//!
//! The signal is zero-padded by half a window on both sides so frame `k` is
//! centered on sample `k * hop` and the first frame time is 0. The inverse
//! normalizes by the summed squared window, which makes reconstruction exact
//! wherever that sum is non-zero.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{AudioBuffer, AudioError};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub window: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { window: 2048, hop: 512 }
    }
}

impl StftConfig {
    pub fn check(&self) -> Result<(), AudioError> {
        if !self.window.is_power_of_two() || self.window < 4 {
            return Err(AudioError::Config(format!(
                "stft window {} is not a power of two",
                self.window
            )));
        }
        if self.hop == 0 || !self.window.is_multiple_of(self.hop) {
            return Err(AudioError::Config(format!(
                "hop {} does not divide window {}",
                self.hop, self.window
            )));
        }
        Ok(())
    }
}

/// Complex STFT. `frames[k]` holds bins `0..=window/2`.
#[derive(Debug, Clone)]
pub struct Stft {
    pub frames: Vec<Vec<Complex64>>,
    pub config: StftConfig,
    pub sample_rate: u32,
    pub signal_len: usize,
}

/// Magnitude spectrogram, `magnitudes[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<Vec<f64>>,
    pub frame_times: Vec<f64>,
    pub bin_frequencies: Vec<f64>,
    pub window: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn n_bins(&self) -> usize {
        self.bin_frequencies.len()
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }

    /// Indices of bins whose centre frequency lies in `[lo, hi]`.
    pub fn bins_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        self.bin_frequencies
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= lo && f <= hi)
            .map(|(i, _)| i)
            .collect()
    }
}

pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

pub fn stft(audio: &AudioBuffer, config: StftConfig) -> Result<Stft, AudioError> {
    config.check()?;
    let n = config.window;
    if audio.len() < n {
        return Err(AudioError::TooShort {
            what: "stft",
            needed_s: n as f64 / audio.sample_rate as f64,
            got_s: audio.duration(),
        });
    }
    let half = n / 2;
    let mut padded = vec![0.0; audio.len() + n];
    padded[half..half + audio.len()].copy_from_slice(&audio.samples);
    let n_frames = audio.len() / config.hop + 1;
    let window = hann(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let frames = (0..n_frames)
        .into_par_iter()
        .map(|k| {
            let start = k * config.hop;
            let mut buf: Vec<Complex64> = padded[start..start + n]
                .iter()
                .zip(&window)
                .map(|(&x, &w)| Complex64::new(x * w, 0.0))
                .collect();
            fft.process(&mut buf);
            buf.truncate(half + 1);
            buf
        })
        .collect();

    Ok(Stft {
        frames,
        config,
        sample_rate: audio.sample_rate,
        signal_len: audio.len(),
    })
}

impl Stft {
    /// Magnitudes in amplitude units: divided by the window sum, so a
    /// full-scale sine shows about 0.5 in its bin.
    pub fn spectrogram(&self) -> Spectrogram {
        let n = self.config.window;
        let scale = 1.0 / hann(n).iter().sum::<f64>();
        Spectrogram {
            magnitudes: self
                .frames
                .par_iter()
                .map(|f| f.iter().map(|c| c.norm() * scale).collect())
                .collect(),
            frame_times: (0..self.frames.len())
                .map(|k| (k * self.config.hop) as f64 / self.sample_rate as f64)
                .collect(),
            bin_frequencies: (0..=n / 2)
                .map(|b| b as f64 * self.sample_rate as f64 / n as f64)
                .collect(),
            window: n,
            hop: self.config.hop,
            sample_rate: self.sample_rate,
        }
    }

    /// Same layout with every bin multiplied by `mask[frame][bin]`.
    pub fn masked(&self, mask: &[Vec<f64>]) -> Stft {
        Stft {
            frames: self
                .frames
                .iter()
                .zip(mask)
                .map(|(f, m)| f.iter().zip(m).map(|(c, &g)| c * g).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Weighted overlap-add inverse; returns `signal_len` samples.
pub fn istft(stft: &Stft) -> Vec<f64> {
    let n = stft.config.window;
    let hop = stft.config.hop;
    let half = n / 2;
    let window = hann(n);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);

    let time_frames: Vec<Vec<f64>> = stft
        .frames
        .par_iter()
        .map(|bins| {
            let mut full = vec![Complex64::new(0.0, 0.0); n];
            full[..=half].copy_from_slice(bins);
            for b in 1..half {
                full[n - b] = bins[b].conj();
            }
            ifft.process(&mut full);
            full.iter().zip(&window).map(|(c, w)| c.re / n as f64 * w).collect()
        })
        .collect();

    let padded_len = stft.signal_len + n;
    let mut out = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    // sequential accumulation keeps the summation order fixed
    for (k, frame) in time_frames.iter().enumerate() {
        let start = k * hop;
        for (j, (&x, &w)) in frame.iter().zip(&window).enumerate() {
            if start + j < padded_len {
                out[start + j] += x;
                norm[start + j] += w * w;
            }
        }
    }
    out[half..half + stft.signal_len]
        .iter()
        .zip(&norm[half..half + stft.signal_len])
        .map(|(&x, &w)| if w > 1e-10 { x / w } else { 0.0 })
        .collect()
}
