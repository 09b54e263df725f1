use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lumascape_cli::commands::{self, AnalyzeArgs, LevelChoice, PipelineArgs};
use lumascape_cli::server::{self, AppState, ServeArgs};
use lumascape_cli::{CmdResult, Failure, EXIT_INPUT};

/// Generate, render and serve object-based lightscapes for music videos.
#[derive(Parser)]
#[command(name = "lumascape", version)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every randomized step; overrides the config file.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze an audio file into beats, segments, temperatures and drum hits.
    Analyze {
        #[command(flatten)]
        audio: AudioFlags,
        /// Where to write the analysis document (default: stdout).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Build a lightscape from an analysis document and video frames.
    Synthesize {
        /// Analysis document produced by `analyze`.
        #[arg(long, value_name = "FILE")]
        analysis: PathBuf,
        /// Video frames: a PNG directory or a raw frame stream.
        #[arg(long, value_name = "PATH")]
        frames: Option<PathBuf>,
        /// Where to write the lightscape document (default: stdout).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Render a lightscape on virtual fixtures to frames.csv and ratios.csv.
    Render {
        /// Lightscape document.
        #[arg(long, value_name = "FILE")]
        lightscape: PathBuf,
        #[command(flatten)]
        render: RenderFlags,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Paired Wilcoxon tests on human vs generated ratings.
    Stats {
        /// Ratings CSV: participant,context,version,attribute,score.
        #[arg(long, value_name = "FILE", required_unless_present = "holm")]
        ratings: Option<PathBuf>,
        /// Aggregation level of the paired samples.
        #[arg(long, value_enum, default_value_t = LevelArg::Both)]
        level: LevelArg,
        /// Only Holm-adjust these p-values and print them.
        #[arg(long, value_name = "P", num_args = 1.., conflicts_with = "ratings")]
        holm: Option<Vec<f64>>,
        /// Directory for report.md and results.csv (default: report on stdout).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run analyze, synthesize and render into one directory.
    Pipeline {
        #[command(flatten)]
        audio: AudioFlags,
        /// Video frames: a PNG directory or a raw frame stream.
        #[arg(long, value_name = "PATH")]
        frames: Option<PathBuf>,
        #[command(flatten)]
        render: RenderFlags,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Serve a lightscape for interactive editing over HTTP.
    Serve {
        /// Lightscape document; saved edits replace this file.
        #[arg(long, value_name = "FILE")]
        lightscape: PathBuf,
        /// Song audio (WAV) served to the editor.
        #[arg(long, value_name = "FILE")]
        audio: Option<PathBuf>,
        /// Analysis document served to the editor.
        #[arg(long, value_name = "FILE")]
        analysis: Option<PathBuf>,
        /// Virtual fixture layout (JSON) for /api/frames.
        #[arg(long, value_name = "FILE")]
        fixtures: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
struct AudioFlags {
    /// Song audio (WAV).
    #[arg(long, value_name = "FILE")]
    audio: Option<PathBuf>,
    /// Pre-separated drum stem; requires --rest-stem.
    #[arg(long, value_name = "FILE", requires = "rest_stem")]
    drum_stem: Option<PathBuf>,
    /// Pre-separated non-drum stem; requires --drum-stem.
    #[arg(long, value_name = "FILE", requires = "drum_stem")]
    rest_stem: Option<PathBuf>,
    /// Tab-separated `start end label` lines replacing automatic segmentation.
    #[arg(long, value_name = "FILE")]
    segments: Option<PathBuf>,
}

impl From<AudioFlags> for AnalyzeArgs {
    fn from(a: AudioFlags) -> Self {
        AnalyzeArgs {
            audio: a.audio,
            drum_stem: a.drum_stem,
            rest_stem: a.rest_stem,
            segments: a.segments,
        }
    }
}

#[derive(Args)]
struct RenderFlags {
    /// Virtual fixture layout (JSON); default is 16 fixtures on a ring.
    #[arg(long, value_name = "FILE")]
    fixtures: Option<PathBuf>,
    /// Frames per second.
    #[arg(long)]
    fps: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Context,
    Rater,
    Both,
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => commands::write(p, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(e.to_string())),
    }
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = commands::load_config(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::Analyze { audio, out } => {
            let text = commands::analyze(&mut cfg, audio.into())?;
            emit(out.or(cfg.paths.out.clone()).as_deref(), &text)
        }
        Command::Synthesize { analysis, frames, out } => {
            let frames = commands::required(frames, &cfg.paths.frames, "frames")?;
            let text = commands::synthesize(&cfg, &analysis, &frames)?;
            emit(out.as_deref(), &text)
        }
        Command::Render {
            lightscape,
            render,
            out,
        } => {
            let out = commands::required(out, &cfg.paths.out, "out")?;
            let ls = commands::read_lightscape(&lightscape)?;
            let fixtures = render.fixtures.or(cfg.paths.fixtures.clone());
            commands::render(&ls, fixtures.as_deref(), render.fps.unwrap_or(cfg.render.fps), &out)
        }
        Command::Stats {
            ratings,
            level,
            holm,
            out,
        } => {
            if let Some(p) = holm {
                return emit(out.map(|d| d.join("holm.tsv")).as_deref(), &commands::holm(&p)?);
            }
            let ratings = ratings.expect("clap requires --ratings without --holm");
            let level = match level {
                LevelArg::Context => LevelChoice::Context,
                LevelArg::Rater => LevelChoice::Rater,
                LevelArg::Both => LevelChoice::Both,
            };
            let report = commands::stats(&ratings, level)?;
            match out {
                Some(dir) => {
                    commands::write(&dir.join("report.md"), report.markdown.as_bytes())?;
                    commands::write(&dir.join("results.csv"), report.csv.as_bytes())
                }
                None => emit(None, &report.markdown),
            }
        }
        Command::Pipeline {
            audio,
            frames,
            render,
            out,
        } => {
            let dir = commands::pipeline(
                &mut cfg,
                PipelineArgs {
                    analyze: audio.into(),
                    frames,
                    fixtures: render.fixtures,
                    fps: render.fps,
                    out,
                },
            )?;
            log::info!("wrote {}", dir.display());
            Ok(())
        }
        Command::Serve {
            lightscape,
            audio,
            analysis,
            fixtures,
            host,
            port,
        } => {
            let args = ServeArgs {
                lightscape,
                audio: commands::required(audio, &cfg.paths.audio, "audio")?,
                analysis,
                fixtures: fixtures.or(cfg.paths.fixtures.clone()),
            };
            let state = AppState::load(&args)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::input(e.to_string()))?;
            runtime.block_on(server::serve(state, &host, port))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
