//! Analysis, synthesis and rendering of object-based ambient lightscapes for
//! music videos.
//!
//! The pipeline runs in three stages:
//!
//! ```text
//! audio ──► audio::analyze ──► AnalysisResult ─┐
//!                                              ├─► synth::synthesize ──► Lightscape ──► render
//! frames ─► video::palette_from_frames ────────┘
//! ```
//!
//! [`stats`] holds the paired-rating statistics used to compare generated
//! and hand-authored lightscapes.

pub mod audio;
pub mod model;
pub mod pipeline;
pub mod render;
pub mod stats;
pub mod synth;
pub mod testkit;
pub mod video;

pub use model::{
    AnalysisResult, BeatGrid, Category, Color, ColorPalette, Envelope, Keyframe, LightObject, Lightscape, Modulation,
    ModulationKind, ObjectBody, PaletteRole, PercussiveEvents, Segment, SegmentLabel, Spatial,
};
