//! Turns analysis results and a palette into a lightscape: flashes for
//! percussive events plus temperature-dependent background layers.

mod events;
mod interpolate;
mod layers;

pub use events::{synthesize_events, MIN_FLASH_S};
pub use interpolate::{evaluate, interpolate, keyframed_intensity, pulse_shape, LightState, OutOfSpan};
pub use layers::{boundary_crossfades, synthesize_layers, LayerKind};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    quantize, AnalysisResult, ColorPalette, Envelope, LightObject, Lightscape, ObjectBody, Segment, SCHEMA_VERSION,
};

pub const Z_AMBIENT: i32 = 0;
pub const Z_SWEEP: i32 = 1;
pub const Z_PULSE: i32 = 2;
pub const Z_FLASH: i32 = 10;

pub(crate) fn q(x: f64) -> f64 {
    quantize(x)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    Config(String),
    #[error("invalid analysis input: {0}")]
    Analysis(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub kick_envelope: Envelope,
    pub snare_envelope: Envelope,
    pub snare_width: f64,
    /// Alternate snare flashes between the two halves of the ring.
    pub snare_alternation: bool,
    /// Keep flashes in cold (temperature 1–2) segments.
    pub flashes_in_cold: bool,
    /// Total length of the transition between adjacent segments, seconds.
    pub crossfade_s: f64,
    pub ambient_intensity: f64,
    pub ambient_period_beats: f64,
    pub ambient_depth: f64,
    pub sweep_intensity: f64,
    pub sweep_width: f64,
    pub sweep_period_beats: f64,
    pub sweep_depth: f64,
    pub pulse_intensity: f64,
    pub pulse_depth: f64,
    /// Pulse color: the background with value raised to at least this.
    pub pulse_min_value: f64,
    /// Pulse color: saturation capped at this.
    pub pulse_max_saturation: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            kick_envelope: Envelope::new(0.02, 0.03, 0.15),
            snare_envelope: Envelope::new(0.02, 0.03, 0.10),
            snare_width: 0.5,
            snare_alternation: true,
            flashes_in_cold: true,
            crossfade_s: 0.5,
            ambient_intensity: 0.4,
            ambient_period_beats: 8.0,
            ambient_depth: 0.3,
            sweep_intensity: 0.6,
            sweep_width: 0.4,
            sweep_period_beats: 4.0,
            sweep_depth: 0.5,
            pulse_intensity: 1.0,
            pulse_depth: 0.8,
            pulse_min_value: 0.9,
            pulse_max_saturation: 0.2,
        }
    }
}

impl SynthesisConfig {
    pub fn check(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        for (name, env) in [("kick", &self.kick_envelope), ("snare", &self.snare_envelope)] {
            let parts = [env.attack, env.hold, env.release];
            if parts.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return bad(format!("{name} envelope durations must be finite and >= 0"));
            }
            if !(env.attack > 0.0) {
                return bad(format!("{name} envelope attack must be > 0"));
            }
        }
        let unit = [
            ("snare_width", self.snare_width),
            ("ambient_intensity", self.ambient_intensity),
            ("ambient_depth", self.ambient_depth),
            ("sweep_intensity", self.sweep_intensity),
            ("sweep_width", self.sweep_width),
            ("sweep_depth", self.sweep_depth),
            ("pulse_intensity", self.pulse_intensity),
            ("pulse_depth", self.pulse_depth),
            ("pulse_min_value", self.pulse_min_value),
            ("pulse_max_saturation", self.pulse_max_saturation),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.crossfade_s >= 0.0 && self.crossfade_s.is_finite()) {
            return bad("crossfade_s must be finite and >= 0".into());
        }
        for (name, v) in [
            ("ambient_period_beats", self.ambient_period_beats),
            ("sweep_period_beats", self.sweep_period_beats),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0"));
            }
        }
        Ok(())
    }
}

/// A synthesized lightscape plus any non-fatal adjustments made on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub lightscape: Lightscape,
    pub warnings: Vec<String>,
}

fn layer_rank(o: &LightObject, segments: &[Segment]) -> (usize, i32) {
    let seg =
        o.id.strip_prefix("seg")
            .and_then(|s| s.split('-').next())
            .and_then(|s| s.parse::<usize>().ok())
            .unwrap_or(segments.len());
    (seg, o.z_order)
}

/// Assembles the document: layers ordered by (segment, z-order), then
/// flashes by start time.
pub fn build_timeline(
    flashes: Vec<LightObject>,
    layers: Vec<LightObject>,
    segments: &[Segment],
    palette: &ColorPalette,
    duration: f64,
) -> Lightscape {
    let mut layers = layers;
    layers.sort_by_key(|o| layer_rank(o, segments));
    let mut flashes = flashes;
    flashes.sort_by(|a, b| a.start.total_cmp(&b.start).then_with(|| a.id.cmp(&b.id)));
    let mut objects = layers;
    objects.extend(flashes);
    Lightscape {
        version: SCHEMA_VERSION.to_string(),
        song_duration: q(duration),
        palette: palette.clone(),
        segments: segments
            .iter()
            .map(|s| Segment::new(q(s.start), q(s.end), s.label, s.temperature))
            .collect(),
        objects,
        provenance: BTreeMap::new(),
    }
}

/// Full synthesis from an analysis result and a palette.
pub fn synthesize(
    analysis: &AnalysisResult,
    palette: &ColorPalette,
    cfg: &SynthesisConfig,
) -> Result<Timeline, SynthError> {
    cfg.check()?;
    analysis.check().map_err(SynthError::Analysis)?;
    if !(analysis.beat_grid.bpm > 0.0) {
        return Err(SynthError::Analysis("beat grid has no tempo".into()));
    }
    let duration = analysis.duration;
    let flashes = synthesize_events(&analysis.events, &analysis.segments, duration, cfg);
    let (layers, warnings) = synthesize_layers(&analysis.segments, &analysis.beat_grid, palette, duration, cfg);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Timeline {
        lightscape: build_timeline(flashes, layers, &analysis.segments, palette, duration),
        warnings,
    })
}

/// Number of layer objects per segment of the given temperature.
pub fn layers_for_temperature(temperature: u8) -> usize {
    LayerKind::for_temperature(temperature).len()
}

pub fn is_flash(o: &LightObject) -> bool {
    matches!(o.body, ObjectBody::Flash { .. })
}
