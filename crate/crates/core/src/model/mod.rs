//! Shared domain types and the lightscape document.
//!
//! Everything here is plain value data. Times are seconds as `f64`; the
//! canonical document quantizes every scalar to six decimal places (see
//! [`quantize`]), so generators should quantize at construction time if they
//! want `deserialize(serialize(x)) == x` to hold structurally.

mod color;
mod schema;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use color::{Color, Hsv, BLACK};
pub use schema::{
    deserialize, deserialize_analysis, quantize_analysis, serialize, serialize_analysis, serialize_palette,
    SchemaError, SCHEMA_VERSION,
};
pub use validate::{validate, Violation, ViolationCode};

/// Matching tolerance for time comparisons inside a document (1 ms).
pub const TIME_TOLERANCE: f64 = 1e-3;

/// Rounds to the canonical six-decimal grid.
pub fn quantize(x: f64) -> f64 {
    let q = (x * 1e6).round() / 1e6;
    // normalise -0.0 so it prints as 0.000000
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentLabel {
    Intro,
    Verse,
    Chorus,
    Bridge,
    Solo,
    Break,
    Ending,
    Instrumental,
    Unknown,
}

impl SegmentLabel {
    pub const ALL: [SegmentLabel; 9] = [
        SegmentLabel::Intro,
        SegmentLabel::Verse,
        SegmentLabel::Chorus,
        SegmentLabel::Bridge,
        SegmentLabel::Solo,
        SegmentLabel::Break,
        SegmentLabel::Ending,
        SegmentLabel::Instrumental,
        SegmentLabel::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentLabel::Intro => "intro",
            SegmentLabel::Verse => "verse",
            SegmentLabel::Chorus => "chorus",
            SegmentLabel::Bridge => "bridge",
            SegmentLabel::Solo => "solo",
            SegmentLabel::Break => "break",
            SegmentLabel::Ending => "ending",
            SegmentLabel::Instrumental => "instrumental",
            SegmentLabel::Unknown => "unknown",
        }
    }
}

impl FromStr for SegmentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        SegmentLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == lower)
            .ok_or_else(|| format!("unknown segment label `{s}`"))
    }
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Cold,
    Medium,
    Hot,
}

impl Category {
    /// `None` outside the 1..=5 scale.
    pub fn from_temperature(temperature: u8) -> Option<Self> {
        match temperature {
            1 | 2 => Some(Category::Cold),
            3 | 4 => Some(Category::Medium),
            5 => Some(Category::Hot),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Cold => "cold",
            Category::Medium => "medium",
            Category::Hot => "hot",
        }
    }
}

/// A functional span of the song with its energy temperature (1..=5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub label: SegmentLabel,
    pub temperature: u8,
}

impl Segment {
    pub fn new(start: f64, end: f64, label: SegmentLabel, temperature: u8) -> Self {
        Self {
            start,
            end,
            label,
            temperature,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// # Panics
    /// If the temperature is outside 1..=5; validated documents never are.
    pub fn category(&self) -> Category {
        Category::from_temperature(self.temperature)
            .unwrap_or_else(|| panic!("temperature {} outside 1..=5", self.temperature))
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Checks that `spans` (as `(start, end)`) tile `[0, duration)` contiguously
/// within [`TIME_TOLERANCE`]. Returns a description of the first gap/overlap.
pub fn check_partition(spans: &[(f64, f64)], duration: f64) -> Result<(), String> {
    let Some(first) = spans.first() else {
        return Err("no segments".into());
    };
    if first.0.abs() > TIME_TOLERANCE {
        return Err(format!("first segment starts at {:.6}, not 0", first.0));
    }
    for (i, w) in spans.windows(2).enumerate() {
        if (w[0].1 - w[1].0).abs() > TIME_TOLERANCE {
            return Err(format!(
                "segment {} ends at {:.6} but segment {} starts at {:.6}",
                i,
                w[0].1,
                i + 1,
                w[1].0
            ));
        }
    }
    for (i, s) in spans.iter().enumerate() {
        if !(s.0 < s.1) {
            return Err(format!("segment {i} is empty or reversed"));
        }
    }
    let last = spans[spans.len() - 1];
    if (last.1 - duration).abs() > TIME_TOLERANCE {
        return Err(format!(
            "last segment ends at {:.6}, song duration is {:.6}",
            last.1, duration
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BeatGrid {
    pub bpm: f64,
    pub beats: Vec<f64>,
    pub downbeats: Vec<f64>,
}

impl BeatGrid {
    pub fn beat_period(&self) -> f64 {
        60.0 / self.bpm
    }

    /// Beats with `start <= t < end`.
    pub fn beats_in(&self, start: f64, end: f64) -> impl Iterator<Item = f64> + '_ {
        self.beats.iter().copied().filter(move |&b| b >= start && b < end)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PercussiveEvents {
    pub kicks: Vec<f64>,
    pub snares: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisResult {
    pub duration: f64,
    pub beat_grid: BeatGrid,
    pub segments: Vec<Segment>,
    pub events: PercussiveEvents,
    pub per_segment_median_rms: Vec<f64>,
}

impl AnalysisResult {
    /// Structural checks mirroring the documented invariants.
    pub fn check(&self) -> Result<(), String> {
        let spans: Vec<_> = self.segments.iter().map(|s| (s.start, s.end)).collect();
        check_partition(&spans, self.duration)?;
        if self.per_segment_median_rms.len() != self.segments.len() {
            return Err("perSegmentMedianRms length differs from segment count".into());
        }
        if self.per_segment_median_rms.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err("perSegmentMedianRms entry outside [0,1]".into());
        }
        if self.segments.iter().any(|s| !(1..=5).contains(&s.temperature)) {
            return Err("segment temperature outside 1..=5".into());
        }
        let beats = &self.beat_grid.beats;
        if beats.windows(2).any(|w| w[1] <= w[0]) {
            return Err("beats not strictly increasing".into());
        }
        if beats.iter().any(|&b| b < 0.0 || b > self.duration) {
            return Err("beat outside [0, duration]".into());
        }
        for d in &self.beat_grid.downbeats {
            if !beats.iter().any(|b| (b - d).abs() <= TIME_TOLERANCE) {
                return Err(format!("downbeat {d:.6} is not a beat"));
            }
        }
        for list in [&self.events.kicks, &self.events.snares] {
            if list.windows(2).any(|w| w[1] <= w[0]) {
                return Err("percussive events not strictly increasing".into());
            }
        }
        Ok(())
    }
}

/// Attack / hold / release in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub attack: f64,
    pub hold: f64,
    pub release: f64,
}

impl Envelope {
    pub fn new(attack: f64, hold: f64, release: f64) -> Self {
        Self { attack, hold, release }
    }

    pub fn total(&self) -> f64 {
        self.attack + self.hold + self.release
    }

    /// The four implied `(offset, intensity)` keypoints.
    pub fn keypoints(&self) -> [(f64, f64); 4] {
        [
            (0.0, 0.0),
            (self.attack, 1.0),
            (self.attack + self.hold, 1.0),
            (self.total(), 0.0),
        ]
    }

    /// Shrinks release, then hold, then attack so the total fits `max_total`.
    pub fn truncated(&self, max_total: f64) -> Envelope {
        let mut over = (self.total() - max_total).max(0.0);
        let mut take = |x: f64| {
            let cut = over.min(x);
            over -= cut;
            x - cut
        };
        let release = take(self.release);
        let hold = take(self.hold);
        let attack = take(self.attack);
        Envelope::new(attack, hold, release)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    pub t: f64,
    pub params: BTreeMap<String, f64>,
}

pub const PARAM_INTENSITY: &str = "intensity";

impl Keyframe {
    pub fn intensity(t: f64, intensity: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert(PARAM_INTENSITY.to_string(), intensity);
        Self { t, params }
    }
}

/// The five palette slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PaletteRole {
    Primary,
    SoftPrimary,
    Secondary,
    SoftSecondary,
    Background,
}

impl PaletteRole {
    pub const ALL: [PaletteRole; 5] = [
        PaletteRole::Primary,
        PaletteRole::SoftPrimary,
        PaletteRole::Secondary,
        PaletteRole::SoftSecondary,
        PaletteRole::Background,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PaletteRole::Primary => "primary",
            PaletteRole::SoftPrimary => "softPrimary",
            PaletteRole::Secondary => "secondary",
            PaletteRole::SoftSecondary => "softSecondary",
            PaletteRole::Background => "background",
        }
    }
}

impl FromStr for PaletteRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PaletteRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown palette role `{s}`"))
    }
}

impl fmt::Display for PaletteRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorPalette {
    pub primary: Color,
    pub soft_primary: Color,
    pub secondary: Color,
    pub soft_secondary: Color,
    pub background: Color,
}

impl ColorPalette {
    pub fn get(&self, role: PaletteRole) -> Color {
        match role {
            PaletteRole::Primary => self.primary,
            PaletteRole::SoftPrimary => self.soft_primary,
            PaletteRole::Secondary => self.secondary,
            PaletteRole::SoftSecondary => self.soft_secondary,
            PaletteRole::Background => self.background,
        }
    }

    pub fn entries(&self) -> [(PaletteRole, Color); 5] {
        PaletteRole::ALL.map(|r| (r, self.get(r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spatial {
    /// Position on the normalized ring `[0, 1)`.
    pub center: f64,
    /// Extent in `[0, 1]`; 1.0 covers the whole ring.
    pub width: f64,
}

impl Spatial {
    pub const FULL: Spatial = Spatial {
        center: 0.5,
        width: 1.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulationKind {
    None,
    BrightnessSine,
    SpatialSweep,
    BeatPulse,
}

impl ModulationKind {
    pub const ALL: [ModulationKind; 4] = [
        ModulationKind::None,
        ModulationKind::BrightnessSine,
        ModulationKind::SpatialSweep,
        ModulationKind::BeatPulse,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModulationKind::None => "none",
            ModulationKind::BrightnessSine => "brightnessSine",
            ModulationKind::SpatialSweep => "spatialSweep",
            ModulationKind::BeatPulse => "beatPulse",
        }
    }
}

impl FromStr for ModulationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModulationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown modulation kind `{s}`"))
    }
}

/// Periodic modulation applied on top of a layer's keyframed parameters.
///
/// `origin` anchors the phase: a beat pulse peaks at `origin + k * period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub kind: ModulationKind,
    pub period: f64,
    pub depth: f64,
    pub origin: f64,
}

impl Modulation {
    pub const NONE: Modulation = Modulation {
        kind: ModulationKind::None,
        period: 0.0,
        depth: 0.0,
        origin: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectBody {
    Flash {
        envelope: Envelope,
    },
    Layer {
        modulation: Modulation,
        keyframes: Vec<Keyframe>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightObject {
    pub id: String,
    /// A palette role name. Kept as text so documents with an unknown role
    /// still load and surface as `unresolved-color` violations.
    pub color_role: String,
    pub color_override: Option<Color>,
    pub start: f64,
    pub end: f64,
    pub spatial: Spatial,
    pub z_order: i32,
    pub body: ObjectBody,
}

impl LightObject {
    pub fn kind_str(&self) -> &'static str {
        match self.body {
            ObjectBody::Flash { .. } => "flash",
            ObjectBody::Layer { .. } => "layer",
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unresolved color: object `{object}` names unknown role `{role}`")]
pub struct UnresolvedColor {
    pub object: String,
    pub role: String,
}

/// Override first, else the palette entry named by the role.
pub fn resolve_color(obj: &LightObject, palette: &ColorPalette) -> Result<Color, UnresolvedColor> {
    if let Some(c) = obj.color_override {
        return Ok(c);
    }
    obj.color_role
        .parse::<PaletteRole>()
        .map(|role| palette.get(role))
        .map_err(|_| UnresolvedColor {
            object: obj.id.clone(),
            role: obj.color_role.clone(),
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lightscape {
    pub version: String,
    pub song_duration: f64,
    pub palette: ColorPalette,
    pub segments: Vec<Segment>,
    pub objects: Vec<LightObject>,
    pub provenance: BTreeMap<String, String>,
}

impl Lightscape {
    pub fn object(&self, id: &str) -> Option<&LightObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}
