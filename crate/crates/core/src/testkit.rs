//! Deterministic synthetic signals and frames with known ground truth.
//!
//! Used by the test suites and benchmarks, and handy for trying the pipeline
//! without copyrighted media.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioBuffer;
use crate::video::{Frame, FrameSet};

pub const SR: u32 = 44100;

fn n_samples(secs: f64, sr: u32) -> usize {
    (secs * sr as f64).round() as usize
}

fn buffer(samples: Vec<f64>, sr: u32) -> AudioBuffer {
    AudioBuffer::new(samples, sr).expect("synthetic buffers are non-empty and finite")
}

pub fn sine(freq: f64, amplitude: f64, secs: f64, sr: u32) -> AudioBuffer {
    buffer(
        (0..n_samples(secs, sr))
            .map(|i| amplitude * (2.0 * PI * freq * i as f64 / sr as f64).sin())
            .collect(),
        sr,
    )
}

pub fn white_noise(amplitude: f64, secs: f64, sr: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    buffer(
        (0..n_samples(secs, sr))
            .map(|_| amplitude * rng.random_range(-1.0..1.0))
            .collect(),
        sr,
    )
}

/// Pink (1/f) noise scaled to the requested RMS, using Paul Kellett's
/// economy filter on uniform white noise.
pub fn pink_noise(rms: f64, secs: f64, sr: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let raw: Vec<f64> = (0..n_samples(secs, sr))
        .map(|_| {
            let w: f64 = rng.random_range(-1.0..1.0);
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect();
    let current = (raw.iter().map(|x| x * x).sum::<f64>() / raw.len().max(1) as f64).sqrt();
    let gain = if current > 0.0 { rms / current } else { 0.0 };
    buffer(raw.iter().map(|x| x * gain).collect(), sr)
}

/// Mixes `b` into `a` sample by sample; the result has `a`'s length.
pub fn mix(a: &AudioBuffer, b: &AudioBuffer) -> AudioBuffer {
    let mut out = a.samples.clone();
    for (o, x) in out.iter_mut().zip(&b.samples) {
        *o += x;
    }
    buffer(out, a.sample_rate)
}

/// Click shape: 1 kHz tone, 1 ms linear ramp up then linear decay to zero
/// over 20 ms.
fn add_click(buf: &mut [f64], t0: f64, sr: u32) {
    let start = n_samples(t0, sr);
    let attack = n_samples(0.001, sr);
    let len = n_samples(0.020, sr);
    for i in 0..len {
        let Some(x) = buf.get_mut(start + i) else { break };
        let env = if i < attack {
            i as f64 / attack as f64
        } else {
            1.0 - (i - attack) as f64 / (len - attack) as f64
        };
        *x += 0.9 * env * (2.0 * PI * 1000.0 * i as f64 / sr as f64).sin();
    }
}

/// A click track and its true click times.
pub struct ClickTrack {
    pub audio: AudioBuffer,
    pub clicks: Vec<f64>,
}

/// Ramped clicks at `bpm` starting at `offset`, over a pink-noise bed whose
/// RMS sits `noise_db` below the click signal's RMS (no bed when `None`).
pub fn click_track(bpm: f64, secs: f64, offset: f64, noise_db: Option<f64>, seed: u64) -> ClickTrack {
    let mut samples = vec![0.0; n_samples(secs, SR)];
    let period = 60.0 / bpm;
    let mut clicks = Vec::new();
    let mut t = offset;
    while t + 0.02 < secs {
        add_click(&mut samples, t, SR);
        clicks.push(t);
        t += period;
    }
    let clean = buffer(samples, SR);
    let audio = match noise_db {
        Some(db) => {
            let bed = pink_noise(clean.rms() * 10f64.powf(db / 20.0), secs, SR, seed);
            mix(&clean, &bed)
        }
        None => clean,
    };
    ClickTrack { audio, clicks }
}

/// Decaying 60 Hz burst.
pub fn add_kick(buf: &mut [f64], t0: f64, sr: u32) {
    let start = n_samples(t0, sr);
    for i in 0..n_samples(0.3, sr) {
        let Some(x) = buf.get_mut(start + i) else { break };
        let t = i as f64 / sr as f64;
        *x += 0.8 * (-t / 0.05).exp() * (2.0 * PI * 60.0 * t).sin();
    }
}

/// Decaying 200 Hz tone plus white noise.
pub fn add_snare(buf: &mut [f64], t0: f64, sr: u32, rng: &mut ChaCha8Rng) {
    let start = n_samples(t0, sr);
    for i in 0..n_samples(0.2, sr) {
        let Some(x) = buf.get_mut(start + i) else { break };
        let t = i as f64 / sr as f64;
        let env = (-t / 0.03).exp();
        let noise: f64 = rng.random_range(-1.0..1.0);
        *x += env * (0.4 * (2.0 * PI * 200.0 * t).sin() + 0.3 * noise);
    }
}

pub struct DrumPattern {
    pub audio: AudioBuffer,
    pub kicks: Vec<f64>,
    pub snares: Vec<f64>,
}

/// Kicks on the beat (0.0, 0.5, 1.0 s, …) and snares on the off-beats
/// (0.25, 0.75 s, …) at 120 BPM eighth notes, repeated for `secs`.
pub fn drum_pattern(secs: f64, seed: u64) -> DrumPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; n_samples(secs, SR)];
    let mut kicks = Vec::new();
    let mut snares = Vec::new();
    let mut k = 0;
    loop {
        let t = 0.25 * k as f64;
        if t + 0.05 >= secs {
            break;
        }
        if k % 2 == 0 {
            add_kick(&mut samples, t, SR);
            kicks.push(t);
        } else {
            add_snare(&mut samples, t, SR, &mut rng);
            snares.push(t);
        }
        k += 1;
    }
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 1.0 {
        samples.iter_mut().for_each(|x| *x /= peak);
    }
    DrumPattern {
        audio: buffer(samples, SR),
        kicks,
        snares,
    }
}

/// Sustained sine plus single-sample clicks every `click_period` seconds,
/// returned as `(mix, sine, clicks)`.
pub fn sine_plus_clicks(secs: f64, click_period: f64) -> (AudioBuffer, AudioBuffer, AudioBuffer) {
    let tone = sine(220.0, 0.5, secs, SR);
    let mut clicks = vec![0.0; tone.len()];
    let step = n_samples(click_period, SR);
    let mut i = step / 2;
    while i < clicks.len() {
        clicks[i] = 1.0;
        i += step;
    }
    let clicks = buffer(clicks, SR);
    (mix(&tone, &clicks), tone, clicks)
}

/// `first` seconds of white noise followed by `second` seconds of a pure tone.
pub fn two_textures(first: f64, second: f64, seed: u64) -> AudioBuffer {
    let mut s = white_noise(0.3, first, SR, seed).samples;
    s.extend(sine(440.0, 0.3, second, SR).samples);
    buffer(s, SR)
}

/// Consecutive segments of white noise with the given RMS levels, each
/// `seg_secs` long, and their boundaries.
pub fn stepped_loudness(levels: &[f64], seg_secs: f64, seed: u64) -> (AudioBuffer, Vec<(f64, f64)>) {
    let mut samples = Vec::new();
    let mut spans = Vec::new();
    for (i, &rms) in levels.iter().enumerate() {
        let noise = white_noise(1.0, seg_secs, SR, seed.wrapping_add(i as u64));
        let g = rms / noise.rms();
        samples.extend(noise.samples.iter().map(|x| x * g));
        spans.push((i as f64 * seg_secs, (i + 1) as f64 * seg_secs));
    }
    (buffer(samples, SR), spans)
}

/// Solid frames split into horizontal bands by pixel fraction, e.g.
/// `[((255,0,0), 0.6), ((0,0,255), 0.3), ((128,128,128), 0.1)]`.
pub fn banded_frames(bands: &[([u8; 3], f64)], width: u32, height: u32, count: usize, fps: f64) -> FrameSet {
    let total = (width * height) as usize;
    let mut pixels = Vec::with_capacity(total * 3);
    let mut filled = 0usize;
    for (i, (rgb, frac)) in bands.iter().enumerate() {
        let n = if i + 1 == bands.len() {
            total - filled
        } else {
            (frac * total as f64).round() as usize
        };
        for _ in 0..n {
            pixels.extend_from_slice(rgb);
        }
        filled += n;
    }
    FrameSet {
        frames: (0..count)
            .map(|k| Frame {
                t: k as f64 / fps,
                width,
                height,
                pixels: pixels.clone(),
            })
            .collect(),
        source: "synthetic bands".into(),
    }
}
