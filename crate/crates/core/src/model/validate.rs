use std::collections::HashSet;
use std::fmt;

use super::{
    check_partition, Category, Lightscape, ModulationKind, ObjectBody, PaletteRole, PARAM_INTENSITY, TIME_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    InvalidDuration,
    NonFinite,
    SegmentPartition,
    InvalidTemperature,
    ColorHsvInconsistent,
    SoftHueMismatch,
    SoftSaturationNotReduced,
    EmptyId,
    DuplicateId,
    ObjectOutOfRange,
    SpatialOutOfRange,
    EnvelopeNegative,
    EnvelopeEmpty,
    EnvelopeDurationMismatch,
    KeyframesEmpty,
    KeyframesNotIncreasing,
    KeyframeOutOfSpan,
    IntensityOutOfRange,
    InvalidModulation,
    UnresolvedColor,
    CategoryMismatch,
    ObjectShape,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        use ViolationCode::*;
        match self {
            InvalidDuration => "invalid-duration",
            NonFinite => "non-finite",
            SegmentPartition => "segment-partition",
            InvalidTemperature => "invalid-temperature",
            ColorHsvInconsistent => "color-hsv-inconsistent",
            SoftHueMismatch => "soft-hue-mismatch",
            SoftSaturationNotReduced => "soft-saturation-not-reduced",
            EmptyId => "empty-id",
            DuplicateId => "duplicate-id",
            ObjectOutOfRange => "object-out-of-range",
            SpatialOutOfRange => "spatial-out-of-range",
            EnvelopeNegative => "envelope-negative",
            EnvelopeEmpty => "envelope-empty",
            EnvelopeDurationMismatch => "envelope-duration-mismatch",
            KeyframesEmpty => "keyframes-empty",
            KeyframesNotIncreasing => "keyframes-not-increasing",
            KeyframeOutOfSpan => "keyframe-out-of-span",
            IntensityOutOfRange => "intensity-out-of-range",
            InvalidModulation => "invalid-modulation",
            UnresolvedColor => "unresolved-color",
            CategoryMismatch => "category-mismatch",
            ObjectShape => "object-shape",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl serde::Serialize for ViolationCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, code: ViolationCode, message: impl Into<String>) {
        self.0.push(Violation {
            code,
            message: message.into(),
        });
    }
}

/// Every invariant violation in the document; empty iff valid.
pub fn validate(ls: &Lightscape) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Collector(Vec::new());
    let duration = ls.song_duration;

    if !duration.is_finite() || duration <= 0.0 {
        out.push(InvalidDuration, format!("songDuration {duration} must be positive"));
    }

    // palette
    for (role, c) in ls.palette.entries() {
        if !c.hsv_consistent() {
            out.push(
                ColorHsvInconsistent,
                format!("palette.{role}: hsv does not match rgb {c}"),
            );
        }
    }
    for (src, soft) in [
        (PaletteRole::Primary, PaletteRole::SoftPrimary),
        (PaletteRole::Secondary, PaletteRole::SoftSecondary),
    ] {
        let a = ls.palette.get(src).hsv();
        let b = ls.palette.get(soft).hsv();
        if a.h != b.h {
            out.push(
                SoftHueMismatch,
                format!("palette.{soft} hue {:.6} differs from {src} hue {:.6}", b.h, a.h),
            );
        }
        if a.s > 0.0 && b.s >= a.s {
            out.push(
                SoftSaturationNotReduced,
                format!("palette.{soft} saturation {:.6} not below {src} {:.6}", b.s, a.s),
            );
        }
    }

    // segments
    let spans: Vec<_> = ls.segments.iter().map(|s| (s.start, s.end)).collect();
    if ls.segments.iter().any(|s| !s.start.is_finite() || !s.end.is_finite()) {
        out.push(NonFinite, "segment bound is not finite");
    } else if let Err(msg) = check_partition(&spans, duration) {
        out.push(SegmentPartition, msg);
    }
    for (i, s) in ls.segments.iter().enumerate() {
        if Category::from_temperature(s.temperature).is_none() {
            out.push(
                InvalidTemperature,
                format!("segment {i} temperature {} outside 1..=5", s.temperature),
            );
        }
    }

    // objects
    let mut seen = HashSet::new();
    for obj in &ls.objects {
        let id = &obj.id;
        if id.is_empty() {
            out.push(EmptyId, "object with empty id");
        } else if !seen.insert(id.as_str()) {
            out.push(DuplicateId, format!("object id `{id}` appears more than once"));
        }
        if !obj.start.is_finite() || !obj.end.is_finite() {
            out.push(NonFinite, format!("{id}: start/end not finite"));
            continue;
        }
        if !(obj.start >= 0.0 && obj.start < obj.end && obj.end <= duration + TIME_TOLERANCE) {
            out.push(
                ObjectOutOfRange,
                format!(
                    "{id}: span [{:.6}, {:.6}] not inside [0, {:.6}]",
                    obj.start, obj.end, duration
                ),
            );
        }
        let sp = obj.spatial;
        if !(0.0..1.0).contains(&sp.center) || !(0.0..=1.0).contains(&sp.width) {
            out.push(
                SpatialOutOfRange,
                format!("{id}: spatial center {} / width {}", sp.center, sp.width),
            );
        }
        if obj.color_override.is_none() && obj.color_role.parse::<PaletteRole>().is_err() {
            out.push(
                UnresolvedColor,
                format!("{id}: role `{}` is not a palette role", obj.color_role),
            );
        }
        if let Some(c) = obj.color_override {
            if !c.hsv_consistent() {
                out.push(ColorHsvInconsistent, format!("{id}: override hsv does not match {c}"));
            }
        }
        match &obj.body {
            ObjectBody::Flash { envelope } => {
                let parts = [envelope.attack, envelope.hold, envelope.release];
                if parts.iter().any(|p| !p.is_finite()) {
                    out.push(NonFinite, format!("{id}: envelope not finite"));
                } else if parts.iter().any(|&p| p < 0.0) {
                    out.push(EnvelopeNegative, format!("{id}: negative envelope stage"));
                } else if envelope.total() <= 0.0 {
                    out.push(EnvelopeEmpty, format!("{id}: envelope has zero length"));
                } else if ((obj.end - obj.start) - envelope.total()).abs() > TIME_TOLERANCE {
                    out.push(
                        EnvelopeDurationMismatch,
                        format!(
                            "{id}: span {:.6} s but attack+hold+release = {:.6} s",
                            obj.end - obj.start,
                            envelope.total()
                        ),
                    );
                }
            }
            ObjectBody::Layer { modulation, keyframes } => {
                if keyframes.is_empty() {
                    out.push(KeyframesEmpty, format!("{id}: layer without keyframes"));
                }
                if keyframes.windows(2).any(|w| w[1].t <= w[0].t) {
                    out.push(
                        KeyframesNotIncreasing,
                        format!("{id}: keyframe times not strictly increasing"),
                    );
                }
                for k in keyframes {
                    if !k.t.is_finite() || k.params.values().any(|v| !v.is_finite()) {
                        out.push(NonFinite, format!("{id}: non-finite keyframe"));
                        continue;
                    }
                    if k.t < obj.start - TIME_TOLERANCE || k.t > obj.end + TIME_TOLERANCE {
                        out.push(
                            KeyframeOutOfSpan,
                            format!("{id}: keyframe at {:.6} outside object span", k.t),
                        );
                    }
                    if let Some(&i) = k.params.get(PARAM_INTENSITY) {
                        if !(0.0..=1.0).contains(&i) {
                            out.push(IntensityOutOfRange, format!("{id}: intensity {i} at {:.6}", k.t));
                        }
                    }
                }
                let m = modulation;
                let bad = !m.period.is_finite()
                    || !m.depth.is_finite()
                    || !m.origin.is_finite()
                    || !(0.0..=1.0).contains(&m.depth)
                    || (m.kind != ModulationKind::None && m.period <= 0.0);
                if bad {
                    out.push(
                        InvalidModulation,
                        format!("{id}: {} period {} depth {}", m.kind.as_str(), m.period, m.depth),
                    );
                }
            }
        }
    }
    out.0
}
