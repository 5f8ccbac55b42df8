//! `enfgrid`: extract grid-frequency series from recordings, correlate
//! location signatures across anchor sites, and locate queries on a
//! raster; plus a synthetic-grid simulator and sweep harnesses.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input file,
//! 3 inconsistent configuration or data too thin for the computation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use enfgrid_core::extract::EstimatorMethod;
use enfgrid_core::Error;

/// Command-level failure, classed by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unusable flag combinations, malformed flag values,
    /// empty sweep ranges.
    Usage(String),
    /// Everything the core distinguishes for us: input-format errors
    /// (exit 2) versus configuration/data errors (exit 3).
    Core(Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                Error::Format(_) | Error::Io(_) | Error::Json(_) | Error::Wav(_) => 2,
                _ => 3,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Five continental sites, M = 3, 1 s frames, 600-frame segments,
    /// built-in reference scheme.
    FiveCity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Subspace,
    Spectral,
}

impl From<Estimator> for EstimatorMethod {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Subspace => EstimatorMethod::Subspace,
            Estimator::Spectral => EstimatorMethod::Spectral,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "enfgrid",
    version,
    about = "Power-grid frequency forensics: extract, correlate, locate, simulate"
)]
struct Cli {
    /// Output directory (default: $ENFGRID_OUT, else the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML or JSON pipeline config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named parameter bundle, applied on top of the config file.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// High-pass moving-average order M (odd, >= 3).
    #[arg(long, global = true)]
    filter_order: Option<usize>,
    /// Correlation window length N in frames.
    #[arg(long, global = true)]
    segment_frames: Option<usize>,
    /// Half-plane tolerance list (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    /// Anchor index JSON.
    #[arg(long, global = true)]
    anchors: Option<PathBuf>,
    /// Quantization scheme: "reference", "fit", or a scheme JSON path.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Raster cell size in miles.
    #[arg(long, global = true)]
    cell_size: Option<f64>,
    /// Fractional margin around the anchor bounding box.
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Per-frame frequency estimator.
    #[arg(long, global = true, value_enum)]
    estimator: Option<Estimator>,
    /// Extraction frame length in seconds.
    #[arg(long, global = true)]
    frame_seconds: Option<f64>,
    /// Nominal mains frequency in Hz (50 or 60).
    #[arg(long, global = true)]
    nominal: Option<f64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract a frequency series from a WAV or CSV recording.
    Extract(commands::extract::ExtractArgs),
    /// Find the integer-frame lag that best aligns two frequency series.
    Align(commands::align::AlignArgs),
    /// Pairwise signature correlations per segment across the anchors.
    Correlate(commands::correlate::CorrelateArgs),
    /// Locate a query series (or each anchor, leave-one-out) on the raster.
    Locate(commands::locate::LocateArgs),
    /// Generate a synthetic multi-site frequency/recording bundle.
    Simulate(commands::simulate::SimulateArgs),
    /// Parameter sweeps over built-in simulated scenarios.
    Sweep(commands::sweep::SweepArgs),
    /// Fit a correlation-to-distance quantization scheme from the anchors.
    FitScheme(commands::fit_scheme::FitSchemeArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("ENFGRID_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Core(e.into()))?;

    let five_city = cli.preset == Some(Preset::FiveCity);
    let cfg = config::assemble(
        five_city,
        cli.config.as_deref(),
        config::Overrides {
            filter_order: cli.filter_order,
            segment_frames: cli.segment_frames,
            epsilon: cli.epsilon.clone(),
            anchors: cli.anchors.clone(),
            scheme: cli.scheme.clone(),
            cell_size: cli.cell_size,
            margin: cli.margin,
            estimator: cli.estimator.map(EstimatorMethod::from),
            frame_seconds: cli.frame_seconds,
            nominal: cli.nominal,
        },
    )?;

    match &cli.command {
        Cmd::Extract(args) => commands::extract::run(args, &cfg, &out_dir),
        Cmd::Align(args) => commands::align::run(args, &out_dir),
        Cmd::Correlate(args) => commands::correlate::run(args, &cfg, &out_dir),
        Cmd::Locate(args) => commands::locate::run(args, &cfg, &out_dir),
        Cmd::Simulate(args) => commands::simulate::run(args, five_city, &out_dir),
        Cmd::Sweep(args) => commands::sweep::run(args, &cfg, &out_dir),
        Cmd::FitScheme(args) => commands::fit_scheme::run(args, &cfg, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; keep their exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
