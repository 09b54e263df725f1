use std::path::Path;

use rayon::prelude::*;

use super::AudioError;

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::Empty);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(AudioError::Format("non-finite sample".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Reads a 16-bit PCM or 32-bit float WAV, averages channels to mono and
/// resamples to `target_rate`.
pub fn ingest_audio(path: &Path, target_rate: u32) -> Result<AudioBuffer, AudioError> {
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => AudioError::Io(format!("{}: {io}", path.display())),
        other => AudioError::Format(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    if !(1..=2).contains(&spec.channels) {
        return Err(AudioError::Format(format!(
            "{} channels (expected 1 or 2)",
            spec.channels
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>(),
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>(),
        (fmt, bits) => {
            return Err(AudioError::Format(format!(
                "unsupported sample format {fmt:?} at {bits} bits (expected 16-bit PCM or 32-bit float)"
            )))
        }
    }
    .map_err(|e| AudioError::Format(e.to_string()))?;

    let channels = spec.channels as usize;
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64).clamp(-1.0, 1.0))
        .collect();
    if mono.is_empty() {
        return Err(AudioError::Empty);
    }
    let samples = resample(&mono, spec.sample_rate, target_rate);
    AudioBuffer::new(samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect(), target_rate)
}

/// Writes 32-bit float mono WAV.
pub fn write_wav(path: &Path, audio: &AudioBuffer) -> Result<(), AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let io = |e: hound::Error| AudioError::Io(format!("{}: {e}", path.display()));
    let mut w = hound::WavWriter::create(path, spec).map_err(io)?;
    for &s in &audio.samples {
        w.write_sample(s as f32).map_err(io)?;
    }
    w.finalize().map_err(io)
}

/// Zero crossings of the sinc kernel on each side.
const SINC_HALF_WIDTH: f64 = 32.0;

/// Hann-windowed sinc resampling. Identity when the rates match.
pub fn resample(input: &[f64], from: u32, to: u32) -> Vec<f64> {
    if from == to || input.is_empty() {
        return input.to_vec();
    }
    let ratio = to as f64 / from as f64;
    // cutoff relative to the input Nyquist; a little headroom below the
    // lower Nyquist when downsampling
    let cutoff = if ratio < 1.0 { ratio * 0.95 } else { 1.0 };
    let half = SINC_HALF_WIDTH / cutoff;
    let out_len = (input.len() as f64 * ratio).round() as usize;
    let last = input.len() as isize - 1;

    (0..out_len)
        .into_par_iter()
        .map(|n| {
            let x = n as f64 / ratio;
            let lo = ((x - half).ceil() as isize).max(0);
            let hi = ((x + half).floor() as isize).min(last);
            let mut acc = 0.0;
            for k in lo..=hi {
                let d = x - k as f64;
                let arg = cutoff * d;
                let sinc = if arg == 0.0 {
                    1.0
                } else {
                    let p = std::f64::consts::PI * arg;
                    p.sin() / p
                };
                let w = 0.5 * (1.0 + (std::f64::consts::PI * d / half).cos());
                acc += input[k as usize] * cutoff * sinc * w;
            }
            acc
        })
        .collect()
}
