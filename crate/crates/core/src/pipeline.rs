//! End-to-end orchestration shared by the command-line tool and the
//! service: configuration, provenance and the analyze → synthesize →
//! render stages.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::{
    analyze, ingest_audio, AnalysisConfig, AudioError, ExternalSegments, ExternalStems, SegmentProvider, StemProvider,
};
use crate::model::{quantize_analysis, validate, AnalysisResult, ColorPalette, Lightscape, Violation};
use crate::render::{
    color_ratios, frames_csv, ratios_csv, render_all, FixtureConfig, PaletteBins, RenderError, RenderedFrame,
    DEFAULT_FPS,
};
use crate::synth::{synthesize, SynthError, SynthesisConfig};
use crate::video::{
    ingest_frames, palette_from_frames, select_salient_segment, ColorCluster, FrameConfig, PaletteConfig, VideoError,
};

pub const TOOL: &str = concat!("lumascape ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Input(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("document failed validation with {} violation(s)", .0.len())]
    Validation(Vec<Violation>),
}

impl PipelineError {
    /// Process exit code: 3 for invariant violations, 2 for everything
    /// caused by inputs or configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 3,
            _ => 2,
        }
    }
}

/// Optional input and output locations; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub audio: Option<PathBuf>,
    pub frames: Option<PathBuf>,
    /// Pre-separated drum stem; needs `rest_stem` too.
    pub drum_stem: Option<PathBuf>,
    pub rest_stem: Option<PathBuf>,
    /// Tab-separated `start end label` file replacing automatic segmentation.
    pub segments: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoConfig {
    pub frames: FrameConfig,
    pub palette: PaletteConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub fps: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { fps: DEFAULT_FPS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds the color clustering; overrides `video.palette.seed`.
    pub seed: u64,
    pub paths: Paths,
    pub analysis: AnalysisConfig,
    pub video: VideoConfig,
    pub synthesis: SynthesisConfig,
    pub render: RenderConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            paths: Paths::default(),
            analysis: AnalysisConfig::default(),
            video: VideoConfig::default(),
            synthesis: SynthesisConfig::default(),
            render: RenderConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn palette_config(&self) -> PaletteConfig {
        PaletteConfig {
            seed: self.seed,
            ..self.video.palette
        }
    }

    /// Parameters that determine outputs, as JSON with sorted keys. Paths
    /// are left out so relocating inputs does not change the digest.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("paths");
        }
        if let Some(palette) = value.pointer_mut("/video/palette") {
            palette.as_object_mut().map(|m| m.remove("seed"));
        }
        serde_json::to_string(&value).expect("json value serializes")
    }

    /// Hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn require_file(path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::Input(format!("no such file: {}", path.display())))
    }
}

/// Audio analysis of the file at `audio_path`, quantized so it equals its
/// own canonical document.
pub fn run_analysis(audio_path: &Path, cfg: &PipelineConfig) -> Result<AnalysisResult, PipelineError> {
    require_file(audio_path)?;
    let audio = ingest_audio(audio_path, cfg.analysis.sample_rate)?;
    let stems: Box<dyn StemProvider> = match (&cfg.paths.drum_stem, &cfg.paths.rest_stem) {
        (Some(d), Some(r)) => {
            require_file(d)?;
            require_file(r)?;
            Box::new(ExternalStems {
                drums: d.clone(),
                rest: r.clone(),
            })
        }
        (None, None) => Box::new(cfg.analysis.default_stems()),
        _ => {
            return Err(PipelineError::Config(
                "drum_stem and rest_stem must be given together".into(),
            ))
        }
    };
    let segmenter: Box<dyn SegmentProvider> = match &cfg.paths.segments {
        Some(p) => {
            require_file(p)?;
            Box::new(ExternalSegments { path: p.clone() })
        }
        None => Box::new(cfg.analysis.default_segmenter()),
    };
    let result = analyze(&audio, stems.as_ref(), segmenter.as_ref(), &cfg.analysis)?;
    Ok(quantize_analysis(&result))
}

/// Palette from the frames of the hottest segment.
pub fn extract_palette(
    analysis: &AnalysisResult,
    frames_path: &Path,
    cfg: &PipelineConfig,
) -> Result<(ColorPalette, Vec<ColorCluster>, usize), PipelineError> {
    require_file(frames_path)?;
    let idx = select_salient_segment(&analysis.segments)
        .ok_or_else(|| PipelineError::Input("analysis has no segments".into()))?;
    let seg = &analysis.segments[idx];
    let frames = ingest_frames(frames_path, seg.start, seg.end, &cfg.video.frames)?;
    let (palette, clusters) =
        palette_from_frames(&frames, &cfg.palette_config()).ok_or(VideoError::NoFramesInSegment {
            start: seg.start,
            end: seg.end,
        })?;
    Ok((palette, clusters, idx))
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub lightscape: Lightscape,
    pub clusters: Vec<ColorCluster>,
    pub warnings: Vec<String>,
}

/// Palette extraction plus synthesis; the result is validated before it is
/// returned.
pub fn run_synthesis(
    analysis: &AnalysisResult,
    frames_path: &Path,
    cfg: &PipelineConfig,
) -> Result<Synthesized, PipelineError> {
    let (palette, clusters, salient) = extract_palette(analysis, frames_path, cfg)?;
    let timeline = synthesize(analysis, &palette, &cfg.synthesis)?;
    let mut ls = timeline.lightscape;
    ls.provenance = provenance(cfg, salient);
    let violations = validate(&ls);
    if !violations.is_empty() {
        return Err(PipelineError::Validation(violations));
    }
    Ok(Synthesized {
        lightscape: ls,
        clusters,
        warnings: timeline.warnings,
    })
}

pub fn provenance(cfg: &PipelineConfig, salient_segment: usize) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("tool".to_string(), TOOL.to_string()),
        ("configDigest".to_string(), cfg.digest()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("paletteSegment".to_string(), salient_segment.to_string()),
    ])
}

pub fn load_fixtures(path: Option<&Path>) -> Result<FixtureConfig, PipelineError> {
    match path {
        None => Ok(FixtureConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::Input(format!("{}: {e}", p.display())))?;
            Ok(FixtureConfig::from_json(&text)?)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutputs {
    pub frames: Vec<RenderedFrame>,
    pub frames_csv: String,
    pub ratios_csv: String,
}

pub fn run_render(ls: &Lightscape, fixtures: &FixtureConfig, fps: f64) -> Result<RenderOutputs, PipelineError> {
    let violations = validate(ls);
    if !violations.is_empty() {
        return Err(PipelineError::Validation(violations));
    }
    let frames = render_all(ls, fixtures, fps)?;
    let bins = PaletteBins::from_lightscape(ls);
    let ratios = color_ratios(&frames, &bins);
    Ok(RenderOutputs {
        frames_csv: frames_csv(&frames, fixtures),
        ratios_csv: ratios_csv(&ratios, &bins),
        frames,
    })
}
