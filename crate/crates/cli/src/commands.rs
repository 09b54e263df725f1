//! One function per subcommand. Each returns the text it produced so the
//! binary decides between stdout and `--out`.

use std::path::{Path, PathBuf};

use lumascape_core::model::{deserialize, deserialize_analysis, serialize, serialize_analysis, AnalysisResult};
use lumascape_core::pipeline::{load_fixtures, run_analysis, run_render, run_synthesis, PipelineConfig};
use lumascape_core::stats::{holm_correct, markdown_report, results_csv, run_evaluation, Level, RatingsTable};
use lumascape_core::Lightscape;

use crate::{CmdResult, Failure};

/// Loads `--config` (or the defaults) and applies `--seed`.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> CmdResult<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn read(path: &Path) -> CmdResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn read_lightscape(path: &Path) -> CmdResult<Lightscape> {
    deserialize(&read(path)?).map_err(|e| Failure::document(path, e))
}

pub fn read_analysis(path: &Path) -> CmdResult<AnalysisResult> {
    deserialize_analysis(&read(path)?).map_err(|e| Failure::document(path, e))
}

pub fn write(path: &Path, contents: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// The flag if given, else the config entry, else an error naming both.
pub fn required(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> CmdResult<PathBuf> {
    flag.or_else(|| configured.clone()).ok_or_else(|| {
        Failure::input(format!(
            "no {what}: pass --{what} or set paths.{} in the config",
            what.replace('-', "_")
        ))
    })
}

#[derive(Debug, Default)]
pub struct AnalyzeArgs {
    pub audio: Option<PathBuf>,
    pub drum_stem: Option<PathBuf>,
    pub rest_stem: Option<PathBuf>,
    pub segments: Option<PathBuf>,
}

pub fn analyze(cfg: &mut PipelineConfig, args: AnalyzeArgs) -> CmdResult<String> {
    let audio = required(args.audio, &cfg.paths.audio, "audio")?;
    if args.drum_stem.is_some() {
        cfg.paths.drum_stem = args.drum_stem;
    }
    if args.rest_stem.is_some() {
        cfg.paths.rest_stem = args.rest_stem;
    }
    if args.segments.is_some() {
        cfg.paths.segments = args.segments;
    }
    let analysis = run_analysis(&audio, cfg)?;
    log::info!(
        "{}: {:.1} s, {:.1} bpm, {} segment(s), {} kick(s), {} snare(s)",
        audio.display(),
        analysis.duration,
        analysis.beat_grid.bpm,
        analysis.segments.len(),
        analysis.events.kicks.len(),
        analysis.events.snares.len()
    );
    Ok(serialize_analysis(&analysis))
}

pub fn synthesize(cfg: &PipelineConfig, analysis: &Path, frames: &Path) -> CmdResult<String> {
    let analysis = read_analysis(analysis)?;
    let out = run_synthesis(&analysis, frames, cfg)?;
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(serialize(&out.lightscape))
}

/// Frame and ratio CSVs, written as `frames.csv` and `ratios.csv`.
pub fn render(ls: &Lightscape, fixtures: Option<&Path>, fps: f64, out_dir: &Path) -> CmdResult {
    let fixtures = load_fixtures(fixtures)?;
    let out = run_render(ls, &fixtures, fps)?;
    write(&out_dir.join("frames.csv"), out.frames_csv.as_bytes())?;
    write(&out_dir.join("ratios.csv"), out.ratios_csv.as_bytes())?;
    log::info!(
        "{} frame(s) × {} fixture(s) at {fps} fps",
        out.frames.len(),
        fixtures.fixtures.len()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelChoice {
    Context,
    Rater,
    Both,
}

impl LevelChoice {
    fn levels(self) -> &'static [Level] {
        match self {
            LevelChoice::Context => &[Level::Context],
            LevelChoice::Rater => &[Level::Rater],
            LevelChoice::Both => &[Level::Context, Level::Rater],
        }
    }
}

pub struct StatsReport {
    pub markdown: String,
    pub csv: String,
}

pub fn stats(ratings: &Path, level: LevelChoice) -> CmdResult<StatsReport> {
    let text = String::from_utf8(read(ratings)?)
        .map_err(|_| Failure::input(format!("{}: not UTF-8 text", ratings.display())))?;
    let table = RatingsTable::from_csv(&text).map_err(|e| Failure::input(format!("{}: {e}", ratings.display())))?;
    let mut markdown = String::new();
    let mut csv = String::new();
    for &lvl in level.levels() {
        let eval = run_evaluation(&table, lvl)?;
        if !markdown.is_empty() {
            markdown.push('\n');
        }
        markdown.push_str(&markdown_report(&eval));
        let rows = results_csv(&eval);
        if csv.is_empty() {
            csv = rows;
        } else {
            csv.extend(rows.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    Ok(StatsReport { markdown, csv })
}

/// Holm-adjusted p-values, one per line with four decimals, in input order.
pub fn holm(p_values: &[f64]) -> CmdResult<String> {
    let adjusted = holm_correct(p_values)?;
    Ok(p_values
        .iter()
        .zip(adjusted)
        .map(|(p, a)| format!("{p}\t{a:.4}\n"))
        .collect())
}

#[derive(Debug, Default)]
pub struct PipelineArgs {
    pub analyze: AnalyzeArgs,
    pub frames: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub fps: Option<f64>,
    pub out: Option<PathBuf>,
}

/// analyze → synthesize → render into one directory.
pub fn pipeline(cfg: &mut PipelineConfig, args: PipelineArgs) -> CmdResult<PathBuf> {
    let frames = required(args.frames, &cfg.paths.frames, "frames")?;
    let out_dir = required(args.out, &cfg.paths.out, "out")?;
    let fixtures = args.fixtures.or_else(|| cfg.paths.fixtures.clone());
    let fps = args.fps.unwrap_or(cfg.render.fps);

    let analysis_text = analyze(cfg, args.analyze)?;
    let analysis_path = out_dir.join("analysis.json");
    write(&analysis_path, analysis_text.as_bytes())?;

    let ls_text = synthesize(cfg, &analysis_path, &frames)?;
    let ls_path = out_dir.join("lightscape.json");
    write(&ls_path, ls_text.as_bytes())?;

    let ls = deserialize(ls_text.as_bytes()).map_err(|e| Failure::document(&ls_path, e))?;
    render(&ls, fixtures.as_deref(), fps, &out_dir)?;
    Ok(out_dir)
}
