//! Canonical JSON encoding of [`Lightscape`] and [`AnalysisResult`] documents.
//!
//! Key order is fixed by the wire structs below, maps are sorted, every
//! fractional scalar is written with exactly six decimals and channels as
//! integers. Output is pretty-printed with two-space indentation and a
//! trailing newline.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{
    quantize, validate, AnalysisResult, BeatGrid, Category, Color, ColorPalette, Envelope, Hsv, Keyframe, LightObject,
    Lightscape, Modulation, ModulationKind, ObjectBody, PercussiveEvents, Segment, SegmentLabel, Spatial, Violation,
    ViolationCode,
};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed lightscape document: {0}")]
    Malformed(String),
    #[error("unsupported lightscape schema version `{0}` (expected {SCHEMA_VERSION})")]
    UnsupportedVersion(String),
    #[error("lightscape document has {} invariant violation(s)", .0.len())]
    Invalid(Vec<Violation>),
}

impl SchemaError {
    pub fn code(&self) -> &'static str {
        match self {
            SchemaError::Malformed(_) => "malformed",
            SchemaError::UnsupportedVersion(_) => "unsupported-version",
            SchemaError::Invalid(_) => "invalid-document",
        }
    }
}

/// Six-decimal fixed-point scalar on the wire.
#[derive(Debug, Clone, Copy)]
struct Fixed(f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.6}", quantize(self.0))).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Fixed)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColorWire {
    r: u8,
    g: u8,
    b: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<Fixed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<Fixed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v: Option<Fixed>,
}

impl From<&Color> for ColorWire {
    fn from(c: &Color) -> Self {
        Self {
            r: c.r,
            g: c.g,
            b: c.b,
            h: c.hsv.map(|x| Fixed(x.h)),
            s: c.hsv.map(|x| Fixed(x.s)),
            v: c.hsv.map(|x| Fixed(x.v)),
        }
    }
}

impl ColorWire {
    fn into_color(self, at: &str) -> Result<Color, SchemaError> {
        let hsv = match (self.h, self.s, self.v) {
            (None, None, None) => None,
            (Some(h), Some(s), Some(v)) => Some(Hsv { h: h.0, s: s.0, v: v.0 }),
            _ => {
                return Err(SchemaError::Malformed(format!(
                    "{at}: h, s and v must be given together"
                )))
            }
        };
        Ok(Color {
            r: self.r,
            g: self.g,
            b: self.b,
            hsv,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PaletteWire {
    primary: ColorWire,
    soft_primary: ColorWire,
    secondary: ColorWire,
    soft_secondary: ColorWire,
    background: ColorWire,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentWire {
    start: Fixed,
    end: Fixed,
    label: SegmentLabel,
    temperature: u8,
    #[serde(default)]
    category: Option<Category>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpatialWire {
    center: Fixed,
    width: Fixed,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeWire {
    attack: Fixed,
    hold: Fixed,
    release: Fixed,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModulationWire {
    kind: String,
    period: Fixed,
    depth: Fixed,
    origin: Fixed,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyframeWire {
    t: Fixed,
    params: BTreeMap<String, Fixed>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ObjectWire {
    id: String,
    kind: String,
    color_role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color_override: Option<ColorWire>,
    start: Fixed,
    end: Fixed,
    spatial: SpatialWire,
    z_order: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    envelope: Option<EnvelopeWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modulation: Option<ModulationWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    keyframes: Option<Vec<KeyframeWire>>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct DocumentWire {
    version: String,
    song_duration: Fixed,
    palette: PaletteWire,
    segments: Vec<SegmentWire>,
    objects: Vec<ObjectWire>,
    provenance: BTreeMap<String, String>,
}

fn object_to_wire(o: &LightObject) -> ObjectWire {
    let (envelope, modulation, keyframes) = match &o.body {
        ObjectBody::Flash { envelope } => (
            Some(EnvelopeWire {
                attack: Fixed(envelope.attack),
                hold: Fixed(envelope.hold),
                release: Fixed(envelope.release),
            }),
            None,
            None,
        ),
        ObjectBody::Layer { modulation, keyframes } => (
            None,
            Some(ModulationWire {
                kind: modulation.kind.as_str().to_string(),
                period: Fixed(modulation.period),
                depth: Fixed(modulation.depth),
                origin: Fixed(modulation.origin),
            }),
            Some(
                keyframes
                    .iter()
                    .map(|k| KeyframeWire {
                        t: Fixed(k.t),
                        params: k.params.iter().map(|(n, v)| (n.clone(), Fixed(*v))).collect(),
                    })
                    .collect(),
            ),
        ),
    };
    ObjectWire {
        id: o.id.clone(),
        kind: o.kind_str().to_string(),
        color_role: o.color_role.clone(),
        color_override: o.color_override.as_ref().map(ColorWire::from),
        start: Fixed(o.start),
        end: Fixed(o.end),
        spatial: SpatialWire {
            center: Fixed(o.spatial.center),
            width: Fixed(o.spatial.width),
        },
        z_order: o.z_order,
        envelope,
        modulation,
        keyframes,
    }
}

impl From<&ColorPalette> for PaletteWire {
    fn from(p: &ColorPalette) -> Self {
        PaletteWire {
            primary: (&p.primary).into(),
            soft_primary: (&p.soft_primary).into(),
            secondary: (&p.secondary).into(),
            soft_secondary: (&p.soft_secondary).into(),
            background: (&p.background).into(),
        }
    }
}

/// The palette as it appears inside a document.
pub fn serialize_palette(p: &ColorPalette) -> String {
    let mut text = serde_json::to_string_pretty(&PaletteWire::from(p)).expect("wire structs always serialize");
    text.push('\n');
    text
}

/// Canonical document text.
pub fn serialize(ls: &Lightscape) -> String {
    let wire = DocumentWire {
        version: ls.version.clone(),
        song_duration: Fixed(ls.song_duration),
        palette: (&ls.palette).into(),
        segments: ls
            .segments
            .iter()
            .map(|s| SegmentWire {
                start: Fixed(s.start),
                end: Fixed(s.end),
                label: s.label,
                temperature: s.temperature,
                category: Category::from_temperature(s.temperature),
            })
            .collect(),
        objects: ls.objects.iter().map(object_to_wire).collect(),
        provenance: ls.provenance.clone(),
    };
    let mut text = serde_json::to_string_pretty(&wire).expect("wire structs always serialize");
    text.push('\n');
    text
}

fn shape_violation(id: &str, msg: &str) -> Violation {
    Violation {
        code: ViolationCode::ObjectShape,
        message: format!("{id}: {msg}"),
    }
}

/// Parses, version-checks and validates a document.
pub fn deserialize(bytes: &[u8]) -> Result<Lightscape, SchemaError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| SchemaError::Malformed(e.to_string()))?;
    match value.get("version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(serde_json::Value::String(v)) => return Err(SchemaError::UnsupportedVersion(v.clone())),
        _ => return Err(SchemaError::Malformed("missing string field `version`".into())),
    }
    let wire: DocumentWire = serde_json::from_value(value).map_err(|e| SchemaError::Malformed(e.to_string()))?;

    let mut shape = Vec::new();
    let segments = wire
        .segments
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            if let Some(c) = s.category {
                if Category::from_temperature(s.temperature) != Some(c) {
                    shape.push(Violation {
                        code: ViolationCode::CategoryMismatch,
                        message: format!(
                            "segment {i}: category {} does not match temperature {}",
                            c.as_str(),
                            s.temperature
                        ),
                    });
                }
            }
            Segment {
                start: s.start.0,
                end: s.end.0,
                label: s.label,
                temperature: s.temperature,
            }
        })
        .collect();

    let mut objects = Vec::with_capacity(wire.objects.len());
    for o in wire.objects {
        let at = format!("object `{}`", o.id);
        let body = match o.kind.as_str() {
            "flash" => {
                if o.keyframes.is_some() || o.modulation.is_some() {
                    shape.push(shape_violation(&o.id, "flash carries layer fields"));
                }
                match o.envelope {
                    Some(e) => ObjectBody::Flash {
                        envelope: Envelope::new(e.attack.0, e.hold.0, e.release.0),
                    },
                    None => {
                        shape.push(shape_violation(&o.id, "flash without envelope"));
                        continue;
                    }
                }
            }
            "layer" => {
                if o.envelope.is_some() {
                    shape.push(shape_violation(&o.id, "layer carries an envelope"));
                }
                let modulation = match o.modulation {
                    None => Modulation::NONE,
                    Some(m) => Modulation {
                        kind: m
                            .kind
                            .parse::<ModulationKind>()
                            .map_err(|e| SchemaError::Malformed(format!("{at}: {e}")))?,
                        period: m.period.0,
                        depth: m.depth.0,
                        origin: m.origin.0,
                    },
                };
                let keyframes = o
                    .keyframes
                    .unwrap_or_default()
                    .into_iter()
                    .map(|k| Keyframe {
                        t: k.t.0,
                        params: k.params.into_iter().map(|(n, v)| (n, v.0)).collect(),
                    })
                    .collect();
                ObjectBody::Layer { modulation, keyframes }
            }
            other => return Err(SchemaError::Malformed(format!("{at}: unknown kind `{other}`"))),
        };
        let color_override = o.color_override.map(|c| c.into_color(&at)).transpose()?;
        objects.push(LightObject {
            id: o.id,
            color_role: o.color_role,
            color_override,
            start: o.start.0,
            end: o.end.0,
            spatial: Spatial {
                center: o.spatial.center.0,
                width: o.spatial.width.0,
            },
            z_order: o.z_order,
            body,
        });
    }

    let p = wire.palette;
    let palette = ColorPalette {
        primary: p.primary.into_color("palette.primary")?,
        soft_primary: p.soft_primary.into_color("palette.softPrimary")?,
        secondary: p.secondary.into_color("palette.secondary")?,
        soft_secondary: p.soft_secondary.into_color("palette.softSecondary")?,
        background: p.background.into_color("palette.background")?,
    };

    let ls = Lightscape {
        version: wire.version,
        song_duration: wire.song_duration.0,
        palette,
        segments,
        objects,
        provenance: wire.provenance,
    };
    shape.extend(validate(&ls));
    if shape.is_empty() {
        Ok(ls)
    } else {
        Err(SchemaError::Invalid(shape))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeatGridWire {
    bpm: Fixed,
    beats: Vec<Fixed>,
    downbeats: Vec<Fixed>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventsWire {
    kicks: Vec<Fixed>,
    snares: Vec<Fixed>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct AnalysisWire {
    duration: Fixed,
    beat_grid: BeatGridWire,
    segments: Vec<SegmentWire>,
    events: EventsWire,
    per_segment_median_rms: Vec<Fixed>,
}

fn fixed(v: &[f64]) -> Vec<Fixed> {
    v.iter().map(|&x| Fixed(x)).collect()
}

fn unfixed(v: Vec<Fixed>) -> Vec<f64> {
    v.into_iter().map(|x| x.0).collect()
}

/// Canonical analysis document text (same number formatting as lightscapes).
pub fn serialize_analysis(a: &AnalysisResult) -> String {
    let wire = AnalysisWire {
        duration: Fixed(a.duration),
        beat_grid: BeatGridWire {
            bpm: Fixed(a.beat_grid.bpm),
            beats: fixed(&a.beat_grid.beats),
            downbeats: fixed(&a.beat_grid.downbeats),
        },
        segments: a
            .segments
            .iter()
            .map(|s| SegmentWire {
                start: Fixed(s.start),
                end: Fixed(s.end),
                label: s.label,
                temperature: s.temperature,
                category: Category::from_temperature(s.temperature),
            })
            .collect(),
        events: EventsWire {
            kicks: fixed(&a.events.kicks),
            snares: fixed(&a.events.snares),
        },
        per_segment_median_rms: fixed(&a.per_segment_median_rms),
    };
    let mut text = serde_json::to_string_pretty(&wire).expect("wire structs always serialize");
    text.push('\n');
    text
}

/// Parses and checks an analysis document.
pub fn deserialize_analysis(bytes: &[u8]) -> Result<AnalysisResult, SchemaError> {
    let wire: AnalysisWire = serde_json::from_slice(bytes).map_err(|e| SchemaError::Malformed(e.to_string()))?;
    let a = AnalysisResult {
        duration: wire.duration.0,
        beat_grid: BeatGrid {
            bpm: wire.beat_grid.bpm.0,
            beats: unfixed(wire.beat_grid.beats),
            downbeats: unfixed(wire.beat_grid.downbeats),
        },
        segments: wire
            .segments
            .into_iter()
            .map(|s| Segment::new(s.start.0, s.end.0, s.label, s.temperature))
            .collect(),
        events: PercussiveEvents {
            kicks: unfixed(wire.events.kicks),
            snares: unfixed(wire.events.snares),
        },
        per_segment_median_rms: unfixed(wire.per_segment_median_rms),
    };
    a.check().map_err(SchemaError::Malformed)?;
    Ok(a)
}

/// The analysis exactly as it reads back from its canonical text.
pub fn quantize_analysis(a: &AnalysisResult) -> AnalysisResult {
    let q = |v: &[f64]| v.iter().map(|&x| quantize(x)).collect::<Vec<_>>();
    AnalysisResult {
        duration: quantize(a.duration),
        beat_grid: BeatGrid {
            bpm: quantize(a.beat_grid.bpm),
            beats: q(&a.beat_grid.beats),
            downbeats: q(&a.beat_grid.downbeats),
        },
        segments: a
            .segments
            .iter()
            .map(|s| Segment::new(quantize(s.start), quantize(s.end), s.label, s.temperature))
            .collect(),
        events: PercussiveEvents {
            kicks: q(&a.events.kicks),
            snares: q(&a.events.snares),
        },
        per_segment_median_rms: q(&a.per_segment_median_rms),
    }
}
