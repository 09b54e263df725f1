//! Median-filter harmonic/percussive separation and the stem providers.

use std::path::PathBuf;

use rayon::prelude::*;

use super::stft::{istft, stft, StftConfig};
use super::{ingest_audio, AudioBuffer, AudioError};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpssConfig {
    /// Median length across time, in frames.
    pub harmonic_kernel: usize,
    /// Median length across frequency, in bins.
    pub percussive_kernel: usize,
    pub eps: f64,
}

impl Default for HpssConfig {
    fn default() -> Self {
        Self {
            harmonic_kernel: 17,
            percussive_kernel: 17,
            eps: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StemSource {
    ComputedHpss,
    ExternalFiles,
}

#[derive(Debug, Clone)]
pub struct StemSet {
    pub drums: AudioBuffer,
    /// Everything that is not drums: bass, vocals and accompaniment.
    pub harmonic: AudioBuffer,
    pub source: StemSource,
}

/// Supplies the drum / non-drum split of a mix.
pub trait StemProvider {
    fn stems(&self, audio: &AudioBuffer) -> Result<StemSet, AudioError>;
}

#[derive(Debug, Clone, Default)]
pub struct HpssStems {
    pub stft: StftConfig,
    pub hpss: HpssConfig,
}

impl StemProvider for HpssStems {
    fn stems(&self, audio: &AudioBuffer) -> Result<StemSet, AudioError> {
        separate_stems(audio, self.stft, self.hpss)
    }
}

/// Pre-separated stems loaded from disk.
#[derive(Debug, Clone)]
pub struct ExternalStems {
    pub drums: PathBuf,
    pub rest: PathBuf,
}

/// Largest tolerated length mismatch between an external stem and the mix.
pub const STEM_LENGTH_TOLERANCE_S: f64 = 0.05;

impl StemProvider for ExternalStems {
    fn stems(&self, audio: &AudioBuffer) -> Result<StemSet, AudioError> {
        let load = |path: &PathBuf| -> Result<AudioBuffer, AudioError> {
            let stem = ingest_audio(path, audio.sample_rate)?;
            let diff = (stem.duration() - audio.duration()).abs();
            if diff > STEM_LENGTH_TOLERANCE_S {
                return Err(AudioError::StemMismatch {
                    path: path.display().to_string(),
                    stem_s: stem.duration(),
                    mix_s: audio.duration(),
                });
            }
            let mut samples = stem.samples;
            samples.resize(audio.len(), 0.0);
            AudioBuffer::new(samples, audio.sample_rate)
        };
        Ok(StemSet {
            drums: load(&self.drums)?,
            harmonic: load(&self.rest)?,
            source: StemSource::ExternalFiles,
        })
    }
}

fn median_of(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = buf[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Sliding median with a window truncated at the edges.
pub(crate) fn median_filter(x: &[f64], kernel: usize) -> Vec<f64> {
    let half = kernel / 2;
    let mut buf = Vec::with_capacity(kernel);
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            buf.clear();
            buf.extend_from_slice(&x[lo..hi]);
            median_of(&mut buf)
        })
        .collect()
}

/// Soft masks `(harmonic, percussive)` for a magnitude spectrogram
/// `mags[frame][bin]`. The two masks sum to one in every cell.
pub fn hpss_masks(mags: &[Vec<f64>], cfg: HpssConfig) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n_frames = mags.len();
    let n_bins = mags.first().map_or(0, Vec::len);

    // harmonic enhancement: median across time for each bin
    let by_bin: Vec<Vec<f64>> = (0..n_bins)
        .into_par_iter()
        .map(|b| {
            let track: Vec<f64> = mags.iter().map(|f| f[b]).collect();
            median_filter(&track, cfg.harmonic_kernel)
        })
        .collect();
    // percussive enhancement: median across frequency for each frame
    let perc: Vec<Vec<f64>> = mags
        .par_iter()
        .map(|f| median_filter(f, cfg.percussive_kernel))
        .collect();

    let mut mh = vec![vec![0.0; n_bins]; n_frames];
    let mut mp = vec![vec![0.0; n_bins]; n_frames];
    for t in 0..n_frames {
        for b in 0..n_bins {
            let h2 = by_bin[b][t] * by_bin[b][t];
            let p2 = perc[t][b] * perc[t][b];
            let p = p2 / (p2 + h2 + cfg.eps);
            mp[t][b] = p;
            mh[t][b] = 1.0 - p;
        }
    }
    (mh, mp)
}

/// Splits a mix into drums (percussive) and harmonic stems.
pub fn separate_stems(audio: &AudioBuffer, stft_cfg: StftConfig, cfg: HpssConfig) -> Result<StemSet, AudioError> {
    if audio.duration() < 2.0 {
        return Err(AudioError::TooShort {
            what: "stem separation",
            needed_s: 2.0,
            got_s: audio.duration(),
        });
    }
    let spec = stft(audio, stft_cfg)?;
    let mags = spec.spectrogram().magnitudes;
    let (mh, mp) = hpss_masks(&mags, cfg);
    let drums = istft(&spec.masked(&mp));
    let harmonic = istft(&spec.masked(&mh));
    Ok(StemSet {
        drums: AudioBuffer {
            samples: drums,
            sample_rate: audio.sample_rate,
        },
        harmonic: AudioBuffer {
            samples: harmonic,
            sample_rate: audio.sample_rate,
        },
        source: StemSource::ComputedHpss,
    })
}
