//! Dominant colors by seeded k-means, role assignment and soft variants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::frames::FrameSet;
use crate::model::{Color, ColorPalette, Hsv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaletteConfig {
    pub k: usize,
    pub sample_cap: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop when no centroid moves further than this, in channel units.
    pub tolerance: f64,
    pub color_space: ColorSpace,
    /// Mean saturation separating colorful clusters from background ones.
    pub saturation_threshold: f64,
    pub soft_saturation_scale: f64,
    pub soft_value_lift: f64,
}

impl Default for PaletteConfig {
    fn default() -> Self {
        Self {
            k: 5,
            sample_cap: 50_000,
            seed: 0xC0FFEE,
            max_iterations: 50,
            tolerance: 0.5,
            color_space: ColorSpace::Rgb,
            saturation_threshold: 0.25,
            soft_saturation_scale: 0.4,
            soft_value_lift: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorCluster {
    pub centroid: Color,
    pub weight: f64,
    pub mean_saturation: f64,
}

/// Pixels taken at indices `floor(i * total / cap)` across all frames.
pub fn sample_pixels(frames: &FrameSet, cap: usize) -> Vec<[u8; 3]> {
    let all: Vec<[u8; 3]> = frames
        .frames
        .iter()
        .flat_map(|f| f.pixels.chunks_exact(3).map(|p| [p[0], p[1], p[2]]))
        .collect();
    if all.len() <= cap {
        return all;
    }
    (0..cap).map(|i| all[i * all.len() / cap]).collect()
}

fn dist2(p: [u8; 3], c: [f64; 3]) -> f64 {
    (0..3).map(|i| (p[i] as f64 - c[i]).powi(2)).sum()
}

fn nearest(p: [u8; 3], centers: &[[f64; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, *c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding. Stops early once every point coincides with a center.
fn seed_centers(points: &[[u8; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let as_f = |p: [u8; 3]| [p[0] as f64, p[1] as f64, p[2] as f64];
    let mut centers = vec![as_f(points[rng.random_range(0..points.len())])];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random_range(0.0..total);
        let mut acc = 0.0;
        let mut chosen = points.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            acc += d;
            if acc > target {
                chosen = i;
                break;
            }
        }
        let c = as_f(points[chosen]);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
        centers.push(c);
    }
    centers
}

fn pixel_saturation(p: [u8; 3]) -> f64 {
    Color::rgb(p[0], p[1], p[2]).derived_hsv().s
}

/// Dominant colors of the frames, heaviest first. Empty clusters are dropped.
pub fn extract_colors(frames: &FrameSet, cfg: &PaletteConfig) -> Vec<ColorCluster> {
    let points = sample_pixels(frames, cfg.sample_cap.max(1));
    if points.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers = seed_centers(&points, cfg.k.max(1), &mut rng);
    let k = centers.len();

    let mut assignment = vec![0usize; points.len()];
    for _ in 0..cfg.max_iterations.max(1) {
        assignment = points.par_iter().map(|&p| nearest(p, &centers)).collect();
        // integer sums are exact, so the reduction order does not matter
        let mut sums = vec![[0u64; 3]; k];
        let mut counts = vec![0u64; k];
        for (&a, p) in assignment.iter().zip(&points) {
            for c in 0..3 {
                sums[a][c] += p[c] as u64;
            }
            counts[a] += 1;
        }
        let mut shift: f64 = 0.0;
        for i in 0..k {
            if counts[i] == 0 {
                continue;
            }
            let mean = [
                sums[i][0] as f64 / counts[i] as f64,
                sums[i][1] as f64 / counts[i] as f64,
                sums[i][2] as f64 / counts[i] as f64,
            ];
            shift = shift.max((0..3).map(|c| (mean[c] - centers[i][c]).powi(2)).sum::<f64>().sqrt());
            centers[i] = mean;
        }
        if shift < cfg.tolerance {
            break;
        }
    }

    let n = points.len() as f64;
    let mut counts = vec![0usize; k];
    let mut sat = vec![0.0; k];
    for (&a, &p) in assignment.iter().zip(&points) {
        counts[a] += 1;
        sat[a] += pixel_saturation(p);
    }
    let channel = |x: f64| (x + 0.5).floor().clamp(0.0, 255.0) as u8;
    let mut clusters: Vec<ColorCluster> = (0..k)
        .filter(|&i| counts[i] > 0)
        .map(|i| ColorCluster {
            centroid: Color::rgb(channel(centers[i][0]), channel(centers[i][1]), channel(centers[i][2]))
                .with_derived_hsv(),
            weight: counts[i] as f64 / n,
            mean_saturation: sat[i] / counts[i] as f64,
        })
        .collect();
    clusters.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    clusters
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roles {
    pub primary: Color,
    pub secondary: Color,
    pub background: Color,
}

/// Primary and secondary from the heaviest colorful clusters, background from
/// the heaviest muted one, with hue-rotation and desaturation fallbacks.
///
/// # Panics
/// If `clusters` is empty.
pub fn assign_roles(clusters: &[ColorCluster], cfg: &PaletteConfig) -> Roles {
    assert!(!clusters.is_empty(), "assign_roles needs at least one cluster");
    let mut sorted: Vec<&ColorCluster> = clusters.iter().collect();
    sorted.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    let colorful: Vec<&ColorCluster> = sorted
        .iter()
        .copied()
        .filter(|c| c.mean_saturation >= cfg.saturation_threshold)
        .collect();
    let muted = sorted.iter().find(|c| c.mean_saturation < cfg.saturation_threshold);

    let primary = colorful.first().unwrap_or(&sorted[0]).centroid.with_derived_hsv();
    let p = primary.hsv();
    let secondary = match colorful.get(1) {
        Some(c) => c.centroid.with_derived_hsv(),
        None => Color::from_hsv(Hsv::new(p.h + 120.0, p.s, p.v)),
    };
    let background = match muted {
        Some(c) => c.centroid.with_derived_hsv(),
        None => Color::from_hsv(Hsv::new(p.h, 0.1, 0.9)),
    };
    Roles {
        primary,
        secondary,
        background,
    }
}

/// Desaturated, lightened variant with the same hue.
pub fn derive_soft_color(c: &Color, cfg: &PaletteConfig) -> Color {
    let hsv = c.hsv();
    Color::from_hsv(Hsv::new(
        hsv.h,
        cfg.soft_saturation_scale * hsv.s,
        hsv.v + cfg.soft_value_lift * (1.0 - hsv.v),
    ))
}

pub fn build_palette(roles: &Roles, cfg: &PaletteConfig) -> ColorPalette {
    let primary = with_hsv(roles.primary);
    let secondary = with_hsv(roles.secondary);
    ColorPalette {
        soft_primary: derive_soft_color(&primary, cfg),
        soft_secondary: derive_soft_color(&secondary, cfg),
        primary,
        secondary,
        background: with_hsv(roles.background),
    }
}

/// Attaches derived HSV only when none is cached.
fn with_hsv(c: Color) -> Color {
    if c.hsv.is_some() {
        c
    } else {
        c.with_derived_hsv()
    }
}

/// Clusters, roles and palette for a frame set.
pub fn palette_from_frames(frames: &FrameSet, cfg: &PaletteConfig) -> Option<(ColorPalette, Vec<ColorCluster>)> {
    let clusters = extract_colors(frames, cfg);
    if clusters.is_empty() {
        return None;
    }
    let roles = assign_roles(&clusters, cfg);
    Some((build_palette(&roles, cfg), clusters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::banded_frames;

    fn cfg() -> PaletteConfig {
        PaletteConfig::default()
    }

    #[test]
    fn soft_color_examples() {
        let soft = |r, g, b| derive_soft_color(&Color::rgb(r, g, b), &cfg()).channels();
        assert_eq!(soft(255, 0, 0), [255, 153, 153]);
        assert_eq!(soft(128, 128, 128), [160, 160, 160]);
        assert_eq!(soft(0, 0, 0), [64, 64, 64]);
        assert_eq!(soft(0, 0, 255), [153, 153, 255]);
    }

    #[test]
    fn black_frames_give_one_cluster() {
        let frames = banded_frames(&[([0, 0, 0], 1.0)], 8, 8, 3, 1.0);
        let c = extract_colors(&frames, &cfg());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].centroid.channels(), [0, 0, 0]);
        assert_eq!(c[0].weight, 1.0);
    }

    #[test]
    fn single_green_cluster_fallbacks() {
        let clusters = vec![ColorCluster {
            centroid: Color::rgb(0, 200, 0),
            weight: 1.0,
            mean_saturation: 1.0,
        }];
        let roles = assign_roles(&clusters, &cfg());
        let sh = roles.secondary.hsv();
        assert!((sh.h - 240.0).abs() < 1e-9);
        let bh = roles.background.hsv();
        assert!((bh.h - 120.0).abs() < 1e-9 && bh.s == 0.1 && bh.v == 0.9);
    }

    #[test]
    fn all_gray_uses_hue_zero() {
        let clusters = vec![ColorCluster {
            centroid: Color::rgb(128, 128, 128),
            weight: 1.0,
            mean_saturation: 0.0,
        }];
        let roles = assign_roles(&clusters, &cfg());
        assert_eq!(roles.primary.channels(), [128, 128, 128]);
        assert_eq!(roles.secondary.channels(), [128, 128, 128]);
        assert_eq!(roles.background.channels(), [128, 128, 128]);
    }

    #[test]
    fn identical_inputs_still_give_five_entries() {
        let red = Color::rgb(255, 0, 0);
        let p = build_palette(
            &Roles {
                primary: red,
                secondary: red,
                background: red,
            },
            &cfg(),
        );
        assert_eq!(p.entries().len(), 5);
        assert!(p.primary.same_rgb(&p.secondary));
    }
}
