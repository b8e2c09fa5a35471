//! `vizent`: entropy-scaled uncertainty glyphs from the command line.
//!
//! Exit status is 0 on success, 2 when a numerical procedure cannot produce
//! a value (non-convergence, undefined entropy, singular design, ...), and 1
//! for every other error.

mod commands;
mod config;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vizent_core::analysis::{Correction, TTestKind};
use vizent_core::scale::VarianceBinning;

#[derive(Debug, Parser)]
#[command(name = "vizent", version, about = "Entropy-scaled uncertainty glyphs and perceptual analysis")]
pub struct Cli {
    /// Seed for manifest shuffles.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with optional `scale`, `proportions`, `color_map` and `display` sections.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample entropy of a sinusoid message or of a series read from a file.
    Entropy(EntropyArgs),
    /// Generate an uncertainty scale and write it as JSON.
    GenScale(GenScaleArgs),
    /// Render a single glyph as SVG.
    GenGlyph(GenGlyphArgs),
    /// Summarize sensor readings over one time window.
    Summarize(SummarizeArgs),
    /// Render a scene of sensor glyphs as SVG.
    RenderScene(RenderSceneArgs),
    /// Build a paired-comparison ranking manifest.
    ManifestRanking(ManifestRankingArgs),
    /// Build a visual-search manifest from four scene buckets.
    ManifestSearch(ManifestSearchArgs),
    /// Merge participants' result files.
    Merge(MergeArgs),
    /// Fit a Bradley-Terry model to a comparison table.
    BtFit(BtFitArgs),
    /// Regress abilities on glyph entropy, or fit a polynomial to x,y data.
    Regress(RegressArgs),
    /// Signal-detection indices from confusion counts.
    Sdt(SdtArgs),
    /// Two-sample t test.
    Ttest(TtestArgs),
    /// Serve trial assets and collect posted results (no authentication).
    ServeTrial(ServeTrialArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// Cycles per revolution of the generated message.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub frequency: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 360)]
    pub samples: usize,
    /// Series file: a JSON array, or numbers separated by whitespace or commas.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Template length.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Tolerance as a fraction of the population standard deviation.
    #[arg(long, default_value_t = 0.2)]
    pub r_frac: f64,
}

#[derive(Debug, Args)]
pub struct GenScaleArgs {
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub base_frequency: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, requires = "v_max")]
    pub v_min: Option<f64>,
    #[arg(long, requires = "v_min")]
    pub v_max: Option<f64>,
    #[arg(long, value_enum)]
    pub binning: Option<Binning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Binning {
    Linear,
    Log,
}

impl From<Binning> for VarianceBinning {
    fn from(b: Binning) -> Self {
        match b {
            Binning::Linear => VarianceBinning::Linear,
            Binning::Log => VarianceBinning::Log,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenGlyphArgs {
    /// Scale JSON; built from the configuration when absent.
    #[arg(long, value_name = "FILE")]
    pub scale: Option<PathBuf>,
    /// Scale level to draw.
    #[arg(long, conflicts_with = "null", required_unless_present = "null")]
    pub level: Option<usize>,
    /// Draw the glyph for a value with unknown uncertainty.
    #[arg(long)]
    pub null: bool,
    /// Value disc color, `#rrggbb`.
    #[arg(long, conflicts_with = "value")]
    pub color: Option<String>,
    /// Data value; the disc takes its color from the color map.
    #[arg(long)]
    pub value: Option<f64>,
    #[arg(long)]
    pub label: Option<String>,
    /// Output width and height in pixels.
    #[arg(long, default_value_t = 200.0)]
    pub size: f64,
}

#[derive(Debug, Args)]
pub struct ReadingsInput {
    /// Sensor readings file.
    #[arg(long, value_name = "FILE")]
    pub readings: PathBuf,
    /// `csv` or `json`; guessed from the extension when absent.
    #[arg(long)]
    pub format: Option<String>,
    /// Window start (RFC 3339); defaults to the hour of the earliest reading.
    #[arg(long)]
    pub window_start: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub window_minutes: i64,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub input: ReadingsInput,
    /// JSON object mapping sensor id to `[x, y]`.
    #[arg(long, value_name = "FILE")]
    pub locations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderSceneArgs {
    /// Complete scene description; other inputs are ignored when given.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["readings", "locations"])]
    pub spec: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "locations")]
    pub readings: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub window_start: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub window_minutes: i64,
    /// JSON object mapping sensor id to a canvas position `[x, y]` in pixels.
    #[arg(long, value_name = "FILE", requires = "readings")]
    pub locations: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub scale: Option<PathBuf>,
    #[arg(long, default_value_t = 800.0)]
    pub width: f64,
    #[arg(long, default_value_t = 600.0)]
    pub height: f64,
    /// Glyph diameter in pixels.
    #[arg(long, default_value_t = 40.0)]
    pub diameter: f64,
    /// Image reference drawn beneath the glyphs.
    #[arg(long)]
    pub background: Option<String>,
    /// Print each sensor's mean under its glyph.
    #[arg(long)]
    pub labels: bool,
}

#[derive(Debug, Args)]
pub struct ManifestRankingArgs {
    #[arg(long)]
    pub participant: String,
    /// Glyph asset references, one per glyph; ids are the file stems.
    #[arg(required = true, num_args = 2..)]
    pub glyphs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ManifestSearchArgs {
    #[arg(long)]
    pub participant: String,
    /// JSON with `low_present`, `low_absent`, `high_present`, `high_absent` lists.
    #[arg(long, value_name = "FILE")]
    pub buckets: PathBuf,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Manifest files; each result file is matched by participant id.
    #[arg(long = "manifest", value_name = "FILE", required = true)]
    pub manifests: Vec<PathBuf>,
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub report: Format,
}

#[derive(Debug, Args)]
pub struct BtFitArgs {
    /// Comparison table or merged ranking results, JSON.
    pub table: PathBuf,
    /// Glyph pinned at ability 0; defaults to the first id in sort order.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub report: Format,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// `bt-fit` JSON report.
    #[arg(long, value_name = "FILE", required_unless_present = "data", conflicts_with = "data")]
    pub bt: Option<PathBuf>,
    /// Scale JSON; built from the configuration when absent.
    #[arg(long, value_name = "FILE")]
    pub scale: Option<PathBuf>,
    /// Glyph id for each scale level, in level order; defaults to sorted ids.
    #[arg(long, value_delimiter = ',')]
    pub ids: Option<Vec<String>>,
    /// `x,y` rows for a plain polynomial fit.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    #[arg(long, value_enum, default_value_t)]
    pub report: Format,
}

#[derive(Debug, Args)]
pub struct SdtArgs {
    /// Counts JSON: one table, or merged search results keyed by target.
    #[arg(conflicts_with_all = ["hits", "misses", "false_alarms", "correct_rejections"])]
    pub counts: Option<PathBuf>,
    #[arg(long, requires_all = ["misses", "false_alarms", "correct_rejections"])]
    pub hits: Option<u64>,
    #[arg(long)]
    pub misses: Option<u64>,
    #[arg(long)]
    pub false_alarms: Option<u64>,
    #[arg(long)]
    pub correct_rejections: Option<u64>,
    #[arg(long, value_enum, default_value_t = CorrectionArg::HalfCount)]
    pub correction: CorrectionArg,
    #[arg(long, value_enum, default_value_t)]
    pub report: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionArg {
    None,
    HalfCount,
    Loglinear,
    HalfTrial,
    Psycho,
}

impl From<CorrectionArg> for Correction {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::None => Correction::None,
            CorrectionArg::HalfCount => Correction::HalfCount,
            CorrectionArg::Loglinear => Correction::LogLinear,
            CorrectionArg::HalfTrial => Correction::HalfTrial,
            CorrectionArg::Psycho => Correction::Psycho,
        }
    }
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    /// First sample: JSON array, or numbers separated by whitespace or commas.
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Paired)]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value_t)]
    pub report: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Paired,
    Pooled,
    Welch,
}

impl From<KindArg> for TTestKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Paired => TTestKind::Paired,
            KindArg::Pooled => TTestKind::Pooled,
            KindArg::Welch => TTestKind::Welch,
        }
    }
}

#[derive(Debug, Args)]
pub struct ServeTrialArgs {
    /// Directory of UI and stimulus files.
    #[arg(long, value_name = "DIR")]
    pub root: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Address to listen on; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8000")]
    pub addr: String,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<vizent_core::Error>())
        .any(vizent_core::Error::is_numerical);
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
