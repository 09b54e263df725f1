//! Virtual renderer: samples a lightscape onto a ring of fixtures.
//!
//! Each active object contributes `color × intensity × falloff` to every
//! fixture inside its spatial extent; contributions add per channel in
//! ascending z-order and the sum is rounded half-up and clamped to 255.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{resolve_color, Color, LightObject, Lightscape, PaletteRole, UnresolvedColor};
use crate::synth::evaluate;

pub const DEFAULT_FPS: f64 = 30.0;
pub const DEFAULT_FIXTURES: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("time {t:.6} s outside [0, {duration:.6}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("invalid fixture config: {0}")]
    Fixtures(String),
    #[error("fps must be finite and > 0, got {0}")]
    Fps(f64),
    #[error(transparent)]
    Unresolved(#[from] UnresolvedColor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub id: String,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    pub fixtures: Vec<Fixture>,
}

impl FixtureConfig {
    /// `n` fixtures evenly spaced around the ring, ids `fx00`, `fx01`, …
    pub fn ring(n: usize) -> Self {
        Self {
            fixtures: (0..n)
                .map(|i| Fixture {
                    id: format!("fx{i:02}"),
                    position: i as f64 / n as f64,
                })
                .collect(),
        }
    }

    pub fn check(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::Fixtures(m));
        if self.fixtures.is_empty() {
            return bad("no fixtures".into());
        }
        let mut seen = HashSet::new();
        for f in &self.fixtures {
            if !seen.insert(f.id.as_str()) {
                return bad(format!("duplicate fixture id `{}`", f.id));
            }
            if !(0.0..1.0).contains(&f.position) {
                return bad(format!("fixture `{}` position {} outside [0, 1)", f.id, f.position));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, RenderError> {
        let cfg: FixtureConfig = serde_json::from_str(text).map_err(|e| RenderError::Fixtures(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n  \"fixtures\": [\n");
        for (i, f) in self.fixtures.iter().enumerate() {
            let sep = if i + 1 < self.fixtures.len() { "," } else { "" };
            let _ = writeln!(
                s,
                "    {{\"id\": {}, \"position\": {:.6}}}{sep}",
                serde_json::to_string(&f.id).expect("string serializes"),
                f.position
            );
        }
        s.push_str("  ]\n}\n");
        s
    }
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self::ring(DEFAULT_FIXTURES)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub t: f64,
    /// One RGB triple per fixture, in fixture order.
    pub colors: Vec<[u8; 3]>,
}

/// Shortest distance between two positions on the unit ring.
pub fn ring_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Raised-cosine weight of a fixture at `position` under an extent centred
/// at `center` with total `width`; `None` outside the extent. Full-width
/// objects light every fixture evenly.
pub fn spatial_falloff(center: f64, width: f64, position: f64) -> Option<f64> {
    if width >= 1.0 {
        return Some(1.0);
    }
    let d = ring_distance(center, position);
    let half = width / 2.0;
    if d > half {
        return None;
    }
    if half <= 0.0 {
        return Some(1.0);
    }
    Some(0.5 * (1.0 + (PI * d / half).cos()))
}

fn channel(x: f64) -> u8 {
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Objects in compositing order with their resolved colors.
struct Prepared<'a> {
    objects: Vec<(&'a LightObject, [f64; 3])>,
    positions: Vec<f64>,
    duration: f64,
}

impl<'a> Prepared<'a> {
    fn new(ls: &'a Lightscape, fixtures: &FixtureConfig) -> Result<Self, RenderError> {
        fixtures.check()?;
        let mut objects = ls
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let c: Color = resolve_color(o, &ls.palette)?;
                Ok((i, o, [c.r as f64, c.g as f64, c.b as f64]))
            })
            .collect::<Result<Vec<_>, UnresolvedColor>>()?;
        objects.sort_by_key(|&(i, o, _)| (o.z_order, i));
        Ok(Self {
            objects: objects.into_iter().map(|(_, o, c)| (o, c)).collect(),
            positions: fixtures.fixtures.iter().map(|f| f.position).collect(),
            duration: ls.song_duration,
        })
    }

    fn frame(&self, t: f64) -> Result<RenderedFrame, RenderError> {
        if !(t >= 0.0 && t <= self.duration) {
            return Err(RenderError::TimeOutOfRange {
                t,
                duration: self.duration,
            });
        }
        let mut acc = vec![[0.0f64; 3]; self.positions.len()];
        for (obj, rgb) in &self.objects {
            let Some(state) = evaluate(obj, t) else { continue };
            if state.intensity <= 0.0 {
                continue;
            }
            for (sum, &pos) in acc.iter_mut().zip(&self.positions) {
                if let Some(w) = spatial_falloff(state.spatial.center, state.spatial.width, pos) {
                    let k = state.intensity * w;
                    for ch in 0..3 {
                        sum[ch] += rgb[ch] * k;
                    }
                }
            }
        }
        Ok(RenderedFrame {
            t,
            colors: acc.iter().map(|c| c.map(channel)).collect(),
        })
    }
}

pub fn render_frame(ls: &Lightscape, fixtures: &FixtureConfig, t: f64) -> Result<RenderedFrame, RenderError> {
    Prepared::new(ls, fixtures)?.frame(t)
}

/// `k / fps` for `k = 0..=floor(duration · fps)`.
pub fn frame_times(duration: f64, fps: f64) -> Vec<f64> {
    let mut n = (duration * fps).floor() as usize;
    // the product can round to either side of an integer
    while n > 0 && n as f64 / fps > duration {
        n -= 1;
    }
    while (n + 1) as f64 / fps <= duration {
        n += 1;
    }
    (0..=n).map(|k| k as f64 / fps).collect()
}

/// Every frame of the song; identical to calling [`render_frame`] per time.
pub fn render_all(ls: &Lightscape, fixtures: &FixtureConfig, fps: f64) -> Result<Vec<RenderedFrame>, RenderError> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(RenderError::Fps(fps));
    }
    let prepared = Prepared::new(ls, fixtures)?;
    frame_times(ls.song_duration, fps)
        .into_par_iter()
        .map(|t| prepared.frame(t))
        .collect()
}

/// Named reference colors used to classify fixture colors.
#[derive(Debug, Clone, PartialEq)]
pub struct PaletteBins {
    pub names: Vec<String>,
    pub colors: Vec<[u8; 3]>,
}

pub const BLACK_BIN: &str = "black";

impl PaletteBins {
    /// The five palette roles followed by black.
    pub fn from_lightscape(ls: &Lightscape) -> Self {
        let mut names: Vec<String> = PaletteRole::ALL.iter().map(|r| r.as_str().to_string()).collect();
        let mut colors: Vec<[u8; 3]> = ls.palette.entries().iter().map(|(_, c)| c.channels()).collect();
        names.push(BLACK_BIN.into());
        colors.push([0, 0, 0]);
        Self { names, colors }
    }

    /// Index of the nearest bin by Euclidean RGB distance. Ties go to the
    /// last bin (black), then to the earlier palette role, so an unlit
    /// fixture always counts as black.
    pub fn nearest(&self, rgb: [u8; 3]) -> usize {
        let dist = |c: &[u8; 3]| -> i64 { (0..3).map(|i| (c[i] as i64 - rgb[i] as i64).pow(2)).sum() };
        let last = self.colors.len() - 1;
        let mut best = last;
        for (i, c) in self.colors[..last].iter().enumerate() {
            if dist(c) < dist(&self.colors[best]) {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRatios {
    pub t: f64,
    /// Share of fixtures per bin, in bin order (every bin listed).
    pub ratios: Vec<f64>,
}

pub fn color_ratios(frames: &[RenderedFrame], bins: &PaletteBins) -> Vec<FrameRatios> {
    frames
        .iter()
        .map(|f| {
            let mut counts = vec![0usize; bins.colors.len()];
            for &c in &f.colors {
                counts[bins.nearest(c)] += 1;
            }
            let n = f.colors.len().max(1) as f64;
            FrameRatios {
                t: f.t,
                ratios: counts.iter().map(|&c| c as f64 / n).collect(),
            }
        })
        .collect()
}

/// CSV `t,fixture_id,r,g,b`, one row per fixture per frame.
pub fn frames_csv(frames: &[RenderedFrame], fixtures: &FixtureConfig) -> String {
    let mut s = String::from("t,fixture_id,r,g,b\n");
    for f in frames {
        for (fx, c) in fixtures.fixtures.iter().zip(&f.colors) {
            let _ = writeln!(s, "{:.6},{},{},{},{}", f.t, fx.id, c[0], c[1], c[2]);
        }
    }
    s
}

/// CSV `t,bin,ratio`.
pub fn ratios_csv(ratios: &[FrameRatios], bins: &PaletteBins) -> String {
    let mut s = String::from("t,bin,ratio\n");
    for r in ratios {
        for (name, v) in bins.names.iter().zip(&r.ratios) {
            let _ = writeln!(s, "{:.6},{name},{v:.6}", r.t);
        }
    }
    s
}

/// Raw RGB stream: header `LUMARAW1 <fixtures> 1 <fps>\n`, then one row of
/// fixture colors per frame.
pub fn frames_raw(frames: &[RenderedFrame], n_fixtures: usize, fps: f64) -> Vec<u8> {
    let mut out = format!("{} {n_fixtures} 1 {fps}\n", crate::video::RAW_MAGIC).into_bytes();
    out.reserve(frames.len() * n_fixtures * 3);
    for f in frames {
        for c in &f.colors {
            out.extend_from_slice(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ColorPalette, Envelope, ObjectBody, Spatial, SCHEMA_VERSION};
    use std::collections::BTreeMap;

    fn ls(objects: Vec<LightObject>) -> Lightscape {
        let red = Color::rgb(255, 0, 0).with_derived_hsv();
        Lightscape {
            version: SCHEMA_VERSION.into(),
            song_duration: 1.0,
            palette: ColorPalette {
                primary: red,
                soft_primary: red,
                secondary: Color::rgb(0, 0, 255).with_derived_hsv(),
                soft_secondary: Color::rgb(0, 0, 255).with_derived_hsv(),
                background: Color::rgb(0, 0, 0).with_derived_hsv(),
            },
            segments: vec![],
            objects,
            provenance: BTreeMap::new(),
        }
    }

    fn flash(id: &str, start: f64, spatial: Spatial) -> LightObject {
        LightObject {
            id: id.into(),
            color_role: "primary".into(),
            color_override: None,
            start,
            end: start + 0.2,
            spatial,
            z_order: 10,
            body: ObjectBody::Flash {
                envelope: Envelope::new(0.02, 0.03, 0.15),
            },
        }
    }

    #[test]
    fn flash_apex_is_full_color() {
        let doc = ls(vec![flash("a", 0.5, Spatial::FULL)]);
        let f = render_frame(&doc, &FixtureConfig::ring(1), 0.53).unwrap();
        assert_eq!(f.colors, vec![[255, 0, 0]]);
    }

    #[test]
    fn empty_composite_is_black() {
        let f = render_frame(&ls(vec![]), &FixtureConfig::ring(4), 0.3).unwrap();
        assert_eq!(f.colors, vec![[0, 0, 0]; 4]);
        assert!(render_frame(&ls(vec![]), &FixtureConfig::ring(4), 1.5).is_err());
    }

    #[test]
    fn frame_count_and_spacing() {
        assert_eq!(frame_times(1.0, 30.0).len(), 31);
        assert_eq!(frame_times(0.29, 100.0).len(), 30);
        let t60 = frame_times(3.7, 60.0);
        let t30 = frame_times(3.7, 30.0);
        assert_eq!(t60.iter().step_by(2).copied().collect::<Vec<_>>(), t30);
    }

    #[test]
    fn falloff_shape() {
        assert_eq!(spatial_falloff(0.25, 0.5, 0.25), Some(1.0));
        assert!(spatial_falloff(0.25, 0.5, 0.5).unwrap().abs() < 1e-12);
        assert_eq!(spatial_falloff(0.25, 0.5, 0.75), None);
        assert!(spatial_falloff(0.95, 0.2, 0.06).is_none());
        assert!((spatial_falloff(0.95, 0.2, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((ring_distance(0.95, 0.05) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ratios_count_nearest_bins() {
        let doc = ls(vec![]);
        let bins = PaletteBins::from_lightscape(&doc);
        let frames = vec![RenderedFrame {
            t: 0.0,
            colors: vec![[250, 5, 0], [0, 0, 250]],
        }];
        let r = color_ratios(&frames, &bins);
        // red matches primary before softPrimary; blue matches secondary
        assert_eq!(r[0].ratios, vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0]);
        let black = color_ratios(
            &[RenderedFrame {
                t: 0.0,
                colors: vec![[0, 0, 0]],
            }],
            &bins,
        );
        // background is black too; the black bin wins the tie
        assert_eq!(black[0].ratios, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn fixture_config_checks() {
        assert!(FixtureConfig::ring(16).check().is_ok());
        let dup = FixtureConfig {
            fixtures: vec![
                Fixture {
                    id: "a".into(),
                    position: 0.0,
                },
                Fixture {
                    id: "a".into(),
                    position: 0.5,
                },
            ],
        };
        assert!(dup.check().is_err());
        let back = FixtureConfig::from_json(&FixtureConfig::ring(16).to_json()).unwrap();
        assert_eq!(back, FixtureConfig::ring(16));
    }
}
