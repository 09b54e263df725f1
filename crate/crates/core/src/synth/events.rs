//! Flash objects for kick and snare events.

use super::{q, SynthesisConfig, Z_FLASH};
use crate::model::{Envelope, LightObject, ObjectBody, PaletteRole, PercussiveEvents, Segment, Spatial};

/// Shortest flash kept at the end of the song; events closer to the end
/// than this are dropped.
pub const MIN_FLASH_S: f64 = 1e-3;

fn flash(
    id: String,
    role: PaletteRole,
    t: f64,
    envelope: &Envelope,
    spatial: Spatial,
    duration: f64,
) -> Option<LightObject> {
    let start = q(t);
    if !(start >= 0.0) || duration - start < MIN_FLASH_S {
        return None;
    }
    let env = envelope.truncated(duration - start);
    let env = Envelope::new(q(env.attack), q(env.hold), q(env.release));
    let end = q(start + env.total()).min(q(duration));
    Some(LightObject {
        id,
        color_role: role.as_str().to_string(),
        color_override: None,
        start,
        end,
        spatial,
        z_order: Z_FLASH,
        body: ObjectBody::Flash { envelope: env },
    })
}

fn in_cold_segment(t: f64, segments: &[Segment]) -> bool {
    segments
        .iter()
        .find(|s| s.contains(t))
        .is_some_and(|s| s.temperature <= 2)
}

/// One flash per kick (primary, full width) and per snare (secondary, half
/// width, alternating sides), in time order.
pub fn synthesize_events(
    events: &PercussiveEvents,
    segments: &[Segment],
    duration: f64,
    cfg: &SynthesisConfig,
) -> Vec<LightObject> {
    let keep = |t: f64| cfg.flashes_in_cold || !in_cold_segment(t, segments);
    let mut out = Vec::with_capacity(events.kicks.len() + events.snares.len());
    for (i, &t) in events.kicks.iter().enumerate() {
        if keep(t) {
            out.extend(flash(
                format!("kick-{i:04}"),
                PaletteRole::Primary,
                t,
                &cfg.kick_envelope,
                Spatial::FULL,
                duration,
            ));
        }
    }
    for (i, &t) in events.snares.iter().enumerate() {
        let center = match (cfg.snare_alternation, i % 2) {
            (false, _) => 0.5,
            (true, 0) => 0.25,
            (true, _) => 0.75,
        };
        if keep(t) {
            out.extend(flash(
                format!("snare-{i:04}"),
                PaletteRole::Secondary,
                t,
                &cfg.snare_envelope,
                Spatial {
                    center,
                    width: cfg.snare_width,
                },
                duration,
            ));
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start).then_with(|| a.id.cmp(&b.id)));
    out
}
