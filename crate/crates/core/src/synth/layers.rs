//! Background layers per segment, with linear crossfades at boundaries.

use super::{q, SynthesisConfig, Z_AMBIENT, Z_PULSE, Z_SWEEP};
use crate::model::{
    BeatGrid, Color, ColorPalette, Hsv, Keyframe, LightObject, Modulation, ModulationKind, ObjectBody, PaletteRole,
    Segment, Spatial,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Ambient,
    Sweep,
    Pulse,
}

impl LayerKind {
    pub fn for_temperature(temperature: u8) -> &'static [LayerKind] {
        use LayerKind::*;
        match temperature {
            0..=2 => &[Ambient],
            3 | 4 => &[Ambient, Sweep],
            _ => &[Ambient, Sweep, Pulse],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LayerKind::Ambient => "ambient",
            LayerKind::Sweep => "sweep",
            LayerKind::Pulse => "pulse",
        }
    }
}

/// Crossfade length for each boundary between consecutive segments. A
/// crossfade longer than either neighbour is clamped to half the shorter
/// one, with a warning.
pub fn boundary_crossfades(segments: &[Segment], crossfade: f64) -> (Vec<f64>, Vec<String>) {
    let mut warnings = Vec::new();
    let fades = segments
        .windows(2)
        .map(|w| {
            let shorter = w[0].duration().min(w[1].duration());
            if crossfade > shorter {
                let clamped = shorter / 2.0;
                warnings.push(format!(
                    "crossfade {crossfade:.3} s at {:.3} s is longer than the adjacent segment \
                     ({shorter:.3} s); clamped to {clamped:.3} s",
                    w[0].end
                ));
                clamped
            } else {
                crossfade
            }
        })
        .collect();
    (fades, warnings)
}

/// Fade-in/fade-out weight of a segment's layer: ramps from 0 to 1 across
/// `[start - lead, start + lead]` and back to 0 across `[end - tail, end + tail]`.
fn weight(t: f64, seg: &Segment, lead: f64, tail: f64) -> f64 {
    let rise = if lead > 0.0 {
        ((t - (seg.start - lead)) / (2.0 * lead)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let fall = if tail > 0.0 {
        (((seg.end + tail) - t) / (2.0 * tail)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    rise.min(fall)
}

fn pulse_color(background: Color, cfg: &SynthesisConfig) -> Color {
    let hsv = background.hsv();
    Color::from_hsv(Hsv::new(
        hsv.h,
        hsv.s.min(cfg.pulse_max_saturation),
        hsv.v.max(cfg.pulse_min_value),
    ))
}

pub fn synthesize_layers(
    segments: &[Segment],
    grid: &BeatGrid,
    palette: &ColorPalette,
    duration: f64,
    cfg: &SynthesisConfig,
) -> (Vec<LightObject>, Vec<String>) {
    let (fades, warnings) = boundary_crossfades(segments, cfg.crossfade_s);
    let beat = grid.beat_period();
    let mut out = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let lead = if i > 0 { fades[i - 1] / 2.0 } else { 0.0 };
        let tail = if i + 1 < segments.len() { fades[i] / 2.0 } else { 0.0 };
        let start = q((seg.start - lead).max(0.0));
        let end = q((seg.end + tail).min(duration));

        let mut times: Vec<f64> = [
            seg.start - lead,
            seg.start,
            seg.start + lead,
            seg.end - tail,
            seg.end,
            seg.end + tail,
        ]
        .into_iter()
        .chain(grid.beats_in(seg.start, seg.end))
        .map(q)
        .filter(|&t| t >= start && t <= end)
        .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();

        for &kind in LayerKind::for_temperature(seg.temperature) {
            let (role, base, spatial, z, modulation, color_override) = match kind {
                LayerKind::Ambient => (
                    PaletteRole::SoftPrimary,
                    cfg.ambient_intensity,
                    Spatial::FULL,
                    Z_AMBIENT,
                    Modulation {
                        kind: ModulationKind::BrightnessSine,
                        period: q(cfg.ambient_period_beats * beat),
                        depth: q(cfg.ambient_depth),
                        origin: q(seg.start),
                    },
                    None,
                ),
                LayerKind::Sweep => (
                    PaletteRole::SoftSecondary,
                    cfg.sweep_intensity,
                    Spatial {
                        center: 0.5,
                        width: q(cfg.sweep_width),
                    },
                    Z_SWEEP,
                    Modulation {
                        kind: ModulationKind::SpatialSweep,
                        period: q(cfg.sweep_period_beats * beat),
                        depth: q(cfg.sweep_depth),
                        origin: q(seg.start),
                    },
                    None,
                ),
                LayerKind::Pulse => (
                    PaletteRole::Background,
                    cfg.pulse_intensity,
                    Spatial::FULL,
                    Z_PULSE,
                    Modulation {
                        kind: ModulationKind::BeatPulse,
                        period: q(beat),
                        depth: q(cfg.pulse_depth),
                        origin: q(grid.beats_in(seg.start, seg.end).next().unwrap_or(seg.start)),
                    },
                    Some(pulse_color(palette.background, cfg)),
                ),
            };
            let keyframes = times
                .iter()
                .map(|&t| Keyframe::intensity(t, q(base * weight(t, seg, lead, tail))))
                .collect();
            out.push(LightObject {
                id: format!("seg{i:02}-{}", kind.as_str()),
                color_role: role.as_str().to_string(),
                color_override,
                start,
                end,
                spatial,
                z_order: z,
                body: ObjectBody::Layer { modulation, keyframes },
            });
        }
    }
    (out, warnings)
}
