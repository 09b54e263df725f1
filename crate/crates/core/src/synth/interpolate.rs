//! Evaluating an object's parameters at an arbitrary time.
//!
//! Keyframes (and flash envelope keypoints) are joined piecewise-linearly.
//! A layer's periodic modulation is then applied on top:
//!
//! * brightness sine: `intensity · (1 − depth · (1 − cos 2πφ) / 2)`, full at
//!   the origin and dipping by `depth` half a period later;
//! * spatial sweep: ring center moves by `depth / 2 · sin 2πφ`;
//! * beat pulse: factor `depth` on each beat, falling linearly to
//!   `1 − depth` and rising back over the last tenth of the beat.
//!
//! `φ` is `(t − origin) / period`. The editor preview re-implements these
//! formulas, so they must stay in sync with the web client.

use std::f64::consts::PI;

use crate::model::{LightObject, Modulation, ModulationKind, ObjectBody, Spatial, PARAM_INTENSITY};

/// Fraction of a beat spent rising back to the pulse peak.
const PULSE_RISE: f64 = 0.1;

const SPAN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightState {
    pub intensity: f64,
    pub spatial: Spatial,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("time {t:.6} s is outside object `{id}` ({start:.6}..{end:.6} s)")]
pub struct OutOfSpan {
    pub id: String,
    pub t: f64,
    pub start: f64,
    pub end: f64,
}

/// Linear interpolation through `(time, value)` points sorted by time. At a
/// repeated time the later point wins; outside the range the end values hold.
fn piecewise_linear(points: &[(f64, f64)], t: f64) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    if t < first.0 {
        return first.1;
    }
    for w in points.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if t >= t0 && t < t1 {
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
    }
    points[points.len() - 1].1
}

/// Beat pulse factor at beat phase `phase` in `[0, 1)`.
pub fn pulse_shape(phase: f64, depth: f64) -> f64 {
    let (hi, lo) = (depth, 1.0 - depth);
    let fall = 1.0 - PULSE_RISE;
    if phase < fall {
        hi + (lo - hi) * phase / fall
    } else {
        lo + (hi - lo) * (phase - fall) / PULSE_RISE
    }
}

fn phase(m: &Modulation, t: f64) -> f64 {
    (t - m.origin) / m.period
}

/// Intensity from keyframes or the flash envelope only, without modulation.
pub fn keyframed_intensity(obj: &LightObject, t: f64) -> f64 {
    match &obj.body {
        ObjectBody::Flash { envelope } => {
            let pts = envelope.keypoints().map(|(o, v)| (obj.start + o, v));
            piecewise_linear(&pts, t)
        }
        ObjectBody::Layer { keyframes, .. } => {
            let pts: Vec<(f64, f64)> = keyframes
                .iter()
                .filter_map(|k| k.params.get(PARAM_INTENSITY).map(|&v| (k.t, v)))
                .collect();
            piecewise_linear(&pts, t)
        }
    }
}

/// Intensity and spatial placement of `obj` at time `t`.
pub fn interpolate(obj: &LightObject, t: f64) -> Result<LightState, OutOfSpan> {
    if !(t >= obj.start - SPAN_SLACK && t <= obj.end + SPAN_SLACK) {
        return Err(OutOfSpan {
            id: obj.id.clone(),
            t,
            start: obj.start,
            end: obj.end,
        });
    }
    let mut intensity = keyframed_intensity(obj, t);
    let mut spatial = obj.spatial;
    if let ObjectBody::Layer { modulation: m, .. } = &obj.body {
        match m.kind {
            ModulationKind::None => {}
            ModulationKind::BrightnessSine => {
                let dip = (1.0 - (2.0 * PI * phase(m, t)).cos()) / 2.0;
                intensity *= 1.0 - m.depth * dip;
            }
            ModulationKind::SpatialSweep => {
                let offset = 0.5 * m.depth * (2.0 * PI * phase(m, t)).sin();
                spatial.center = (spatial.center + offset).rem_euclid(1.0);
            }
            ModulationKind::BeatPulse => {
                intensity *= pulse_shape(phase(m, t).rem_euclid(1.0), m.depth);
            }
        }
    }
    Ok(LightState {
        intensity: intensity.clamp(0.0, 1.0),
        spatial,
    })
}

/// `interpolate` for active objects, `None` otherwise.
pub fn evaluate(obj: &LightObject, t: f64) -> Option<LightState> {
    if obj.is_active(t) {
        interpolate(obj, t).ok()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Envelope, Keyframe};

    fn flash() -> LightObject {
        LightObject {
            id: "kick-0000".into(),
            color_role: "primary".into(),
            color_override: None,
            start: 10.0,
            end: 10.2,
            spatial: Spatial::FULL,
            z_order: 10,
            body: ObjectBody::Flash {
                envelope: Envelope::new(0.02, 0.03, 0.15),
            },
        }
    }

    fn layer(kind: ModulationKind) -> LightObject {
        LightObject {
            id: "seg00-ambient".into(),
            color_role: "softPrimary".into(),
            color_override: None,
            start: 0.0,
            end: 4.0,
            spatial: Spatial::FULL,
            z_order: 0,
            body: ObjectBody::Layer {
                modulation: Modulation {
                    kind,
                    period: 2.0,
                    depth: 0.8,
                    origin: 0.0,
                },
                keyframes: vec![
                    Keyframe::intensity(0.0, 0.0),
                    Keyframe::intensity(1.0, 1.0),
                    Keyframe::intensity(4.0, 1.0),
                ],
            },
        }
    }

    #[test]
    fn flash_envelope_values() {
        let f = flash();
        let at = |t| interpolate(&f, t).unwrap().intensity;
        assert_eq!(at(10.0), 0.0);
        assert!((at(10.01) - 0.5).abs() < 1e-9);
        assert!((at(10.02) - 1.0).abs() < 1e-9);
        assert!((at(10.05) - 1.0).abs() < 1e-9);
        assert!((at(10.125) - 0.5).abs() < 1e-9);
        assert!(at(10.2).abs() < 1e-9);
        assert!(interpolate(&f, 9.0).is_err());
        assert!(evaluate(&f, 10.3).is_none());
    }

    #[test]
    fn keyframes_are_exact_and_linear() {
        let l = layer(ModulationKind::None);
        assert_eq!(interpolate(&l, 1.0).unwrap().intensity, 1.0);
        assert_eq!(interpolate(&l, 0.25).unwrap().intensity, 0.25);
    }

    #[test]
    fn modulations() {
        let s = layer(ModulationKind::BrightnessSine);
        assert!((interpolate(&s, 2.0).unwrap().intensity - 1.0).abs() < 1e-12);
        assert!((interpolate(&s, 3.0).unwrap().intensity - 0.2).abs() < 1e-12);
        let w = layer(ModulationKind::SpatialSweep);
        assert!((interpolate(&w, 1.5).unwrap().spatial.center - 0.1).abs() < 1e-12);
        let p = layer(ModulationKind::BeatPulse);
        assert!((interpolate(&p, 2.0).unwrap().intensity - 0.8).abs() < 1e-12);
        assert!((interpolate(&p, 3.8).unwrap().intensity - 0.2).abs() < 1e-12);
    }

    #[test]
    fn pulse_is_continuous_across_the_beat() {
        for depth in [0.0, 0.3, 0.8, 1.0] {
            assert!((pulse_shape(0.0, depth) - pulse_shape(1.0 - 1e-12, depth)).abs() < 1e-9);
        }
    }
}
