//! RGB colors with optional cached HSV coordinates.
//!
//! Channels are stored as 8-bit integers. The HSV triple, when present, is
//! authoritative for hue comparisons: soft variants keep their source hue
//! exactly even though the rounded RGB channels would decode to a slightly
//! different angle.

use std::fmt;

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl Hsv {
    pub fn new(h: f64, s: f64, v: f64) -> Self {
        Self {
            h: h.rem_euclid(360.0),
            s: s.clamp(0.0, 1.0),
            v: v.clamp(0.0, 1.0),
        }
    }

    /// Continuous RGB in `[0, 1]` per channel.
    pub fn to_rgb_unit(self) -> [f64; 3] {
        let c = self.v * self.s;
        let hp = self.h.rem_euclid(360.0) / 60.0;
        let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
        let (r, g, b) = match hp as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = self.v - c;
        [r + m, g + m, b + m]
    }

    fn quantized(self) -> Self {
        let q = |x: f64| crate::model::quantize(x);
        let h = q(self.h);
        Self {
            h: if h >= 360.0 { 0.0 } else { h },
            s: q(self.s),
            v: q(self.v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    /// Cached HSV coordinates. `None` means "derive from RGB".
    pub hsv: Option<Hsv>,
}

pub const BLACK: Color = Color::rgb(0, 0, 0);

/// Round-half-up of a unit-range channel value onto 0..=255.
pub(crate) fn unit_to_channel(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0 + 0.5).floor().min(255.0) as u8
}

impl Color {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b, hsv: None }
    }

    /// Builds a color from HSV, rounding channels half-up and keeping the
    /// (quantized) HSV triple attached.
    pub fn from_hsv(hsv: Hsv) -> Self {
        let hsv = hsv.quantized();
        let [r, g, b] = hsv.to_rgb_unit();
        Self {
            r: unit_to_channel(r),
            g: unit_to_channel(g),
            b: unit_to_channel(b),
            hsv: Some(hsv),
        }
    }

    /// Same RGB with the derived HSV attached.
    pub fn with_derived_hsv(self) -> Self {
        Self {
            hsv: Some(self.derived_hsv().quantized()),
            ..self
        }
    }

    /// HSV computed from the RGB channels (ignores any cached triple).
    /// Hue is 0 for achromatic colors.
    pub fn derived_hsv(&self) -> Hsv {
        let r = self.r as f64 / 255.0;
        let g = self.g as f64 / 255.0;
        let b = self.b as f64 / 255.0;
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        let h = if delta == 0.0 {
            0.0
        } else if max == r {
            60.0 * ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            60.0 * ((b - r) / delta + 2.0)
        } else {
            60.0 * ((r - g) / delta + 4.0)
        };
        let s = if max == 0.0 { 0.0 } else { delta / max };
        Hsv::new(h, s, max)
    }

    pub fn hsv(&self) -> Hsv {
        self.hsv.unwrap_or_else(|| self.derived_hsv())
    }

    pub fn channels(&self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    /// True when the cached HSV (if any) decodes to within one channel unit
    /// of the stored RGB.
    pub fn hsv_consistent(&self) -> bool {
        match self.hsv {
            None => true,
            Some(hsv) => {
                let unit = hsv.to_rgb_unit();
                self.channels()
                    .iter()
                    .zip(unit)
                    .all(|(&c, u)| (c as f64 - u * 255.0).abs() <= 1.0)
            }
        }
    }

    /// Equality on channels only.
    pub fn same_rgb(&self, other: &Color) -> bool {
        self.channels() == other.channels()
    }

    pub fn distance_sq(&self, other: &Color) -> f64 {
        self.channels()
            .iter()
            .zip(other.channels())
            .map(|(&a, b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum()
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primaries_round_trip_through_hsv() {
        for c in [
            Color::rgb(255, 0, 0),
            Color::rgb(0, 255, 0),
            Color::rgb(0, 0, 255),
            Color::rgb(128, 128, 128),
            Color::rgb(0, 0, 0),
            Color::rgb(12, 200, 77),
        ] {
            let back = Color::from_hsv(c.derived_hsv());
            assert!(back.same_rgb(&c), "{c} -> {back}");
            assert!(back.hsv_consistent());
        }
    }

    #[test]
    fn known_hues() {
        assert_eq!(Color::rgb(255, 0, 0).derived_hsv().h, 0.0);
        assert_eq!(Color::rgb(0, 255, 0).derived_hsv().h, 120.0);
        assert_eq!(Color::rgb(0, 0, 255).derived_hsv().h, 240.0);
        assert_eq!(Color::rgb(255, 0, 255).derived_hsv().h, 300.0);
    }

    #[test]
    fn round_half_up() {
        assert_eq!(unit_to_channel(0.5 / 255.0), 1);
        assert_eq!(unit_to_channel(159.5 / 255.0), 160);
        assert_eq!(unit_to_channel(1.2), 255);
    }

    #[test]
    fn stale_hsv_is_inconsistent() {
        let mut c = Color::rgb(255, 0, 0).with_derived_hsv();
        assert!(c.hsv_consistent());
        c.hsv = Some(Hsv::new(240.0, 1.0, 1.0));
        assert!(!c.hsv_consistent());
    }
}
