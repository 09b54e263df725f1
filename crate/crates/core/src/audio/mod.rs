//! Audio-side cues: stems, onsets, beats, structure, drum events and
//! per-segment temperature.

mod beats;
mod buffer;
mod drums;
mod hpss;
mod onset;
mod stft;
mod structure;
mod temperature;

pub use beats::{estimate_period, track_beats, BeatConfig};
pub use buffer::{ingest_audio, resample, write_wav, AudioBuffer};
pub use drums::{detect_kick_snare, pick_events, DrumConfig};
pub use hpss::{
    hpss_masks, separate_stems, ExternalStems, HpssConfig, HpssStems, StemProvider, StemSet, StemSource,
    STEM_LENGTH_TOLERANCE_S,
};
pub use onset::{band_flux, onset_envelope, OnsetConfig, OnsetEnvelope};
pub use stft::{istft, stft, Spectrogram, Stft, StftConfig};
pub use structure::{
    checkerboard_novelty, load_segment_file, mel_filterbank, parse_segment_file, pick_novelty_peaks, segment_structure,
    ExternalSegments, NoveltySegmenter, SegmentProvider, SegmentSpan, StructureConfig,
};
pub use temperature::{
    compute_temperature, kmeans_1d, normalize_min_max, quantize_levels, rank_to_level, segment_median_rms, Clustering,
    TemperatureConfig, Temperatures,
};

use crate::model::{AnalysisResult, BeatGrid, Segment};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AudioError {
    #[error("io error: {0}")]
    Io(String),
    #[error("unsupported audio: {0}")]
    Format(String),
    #[error("audio is empty")]
    Empty,
    #[error("invalid analysis config: {0}")]
    Config(String),
    #[error("{what} needs at least {needed_s:.3} s of audio, got {got_s:.3} s")]
    TooShort {
        what: &'static str,
        needed_s: f64,
        got_s: f64,
    },
    #[error("no beat found: onset envelope is flat")]
    NoBeatFound,
    #[error("stem {path} lasts {stem_s:.3} s but the mix lasts {mix_s:.3} s")]
    StemMismatch { path: String, stem_s: f64, mix_s: f64 },
    #[error("malformed segment file: {0}")]
    SegmentFile(String),
    #[error("segments do not partition the song: {0}")]
    NonPartitioning(String),
    #[error("segment {0} has zero duration")]
    ZeroDurationSegment(usize),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub sample_rate: u32,
    pub stft: StftConfig,
    pub hpss: HpssConfig,
    pub onset: OnsetConfig,
    pub beats: BeatConfig,
    pub structure: StructureConfig,
    pub drums: DrumConfig,
    pub temperature: TemperatureConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            sample_rate: 44100,
            stft: StftConfig::default(),
            hpss: HpssConfig::default(),
            onset: OnsetConfig::default(),
            beats: BeatConfig::default(),
            structure: StructureConfig::default(),
            drums: DrumConfig::default(),
            temperature: TemperatureConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn default_stems(&self) -> HpssStems {
        HpssStems {
            stft: self.stft,
            hpss: self.hpss,
        }
    }

    pub fn default_segmenter(&self) -> NoveltySegmenter {
        NoveltySegmenter {
            stft: self.stft,
            config: self.structure,
        }
    }
}

/// Beat grid of a mix: onset envelope of the full spectrogram, then tempo
/// and dynamic-programming beat placement.
pub fn beat_grid(audio: &AudioBuffer, cfg: &AnalysisConfig) -> Result<BeatGrid, AudioError> {
    let spec = stft(audio, cfg.stft)?.spectrogram();
    let env = onset_envelope(&spec, cfg.onset);
    let mut grid = track_beats(&env, &cfg.beats)?;
    let duration = audio.duration();
    for b in grid.beats.iter_mut().chain(grid.downbeats.iter_mut()) {
        *b = b.clamp(0.0, duration);
    }
    grid.beats.dedup();
    grid.downbeats.dedup();
    Ok(grid)
}

/// Runs the whole audio analysis.
pub fn analyze(
    audio: &AudioBuffer,
    stems: &dyn StemProvider,
    segmenter: &dyn SegmentProvider,
    cfg: &AnalysisConfig,
) -> Result<AnalysisResult, AudioError> {
    let stem_set = stems.stems(audio)?;
    let grid = beat_grid(audio, cfg)?;
    let spans = segmenter.segments(audio, &grid)?;
    let events = detect_kick_snare(&stem_set.drums, cfg.stft, &cfg.drums)?;
    let bounds: Vec<(f64, f64)> = spans.iter().map(|s| (s.start, s.end)).collect();
    let temps = compute_temperature(audio, &bounds, &cfg.temperature)?;
    let segments = spans
        .iter()
        .zip(&temps.levels)
        .map(|(s, &t)| Segment::new(s.start, s.end, s.label, t))
        .collect();
    Ok(AnalysisResult {
        duration: audio.duration(),
        beat_grid: grid,
        segments,
        events,
        per_segment_median_rms: temps.normalized,
    })
}
