//! Video-side cues: the hottest segment's frames and their color palette.

mod frames;
mod palette;

pub use frames::{
    box_downscale, fit_width, ingest_frames, read_raw_header, subsample_indices, write_png_sequence, write_raw_stream,
    Frame, FrameConfig, FrameSet, MANIFEST, RAW_MAGIC,
};
pub use palette::{
    assign_roles, build_palette, derive_soft_color, extract_colors, palette_from_frames, sample_pixels, ColorCluster,
    ColorSpace, PaletteConfig, Roles,
};

use crate::model::Segment;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VideoError {
    #[error("io error: {0}")]
    Io(String),
    #[error("bad frame data: {0}")]
    Format(String),
    #[error("bad frame manifest: {0}")]
    Manifest(String),
    #[error("unreadable image {path}: {message}")]
    UnreadableImage { path: String, message: String },
    #[error("no frames between {start:.6} s and {end:.6} s")]
    NoFramesInSegment { start: f64, end: f64 },
}

/// Index of the hottest segment; ties go to the longer, then the earlier one.
pub fn select_salient_segment(segments: &[Segment]) -> Option<usize> {
    (0..segments.len()).reduce(|best, i| {
        let (a, b) = (&segments[best], &segments[i]);
        let better = b.temperature > a.temperature
            || (b.temperature == a.temperature
                && (b.duration() > a.duration() || (b.duration() == a.duration() && b.start < a.start)));
        if better {
            i
        } else {
            best
        }
    })
}
