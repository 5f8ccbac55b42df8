//! `enfgrid align`: best integer-frame lag between two frequency series.

use std::path::{Path, PathBuf};

use clap::Args;
use enfgrid_core::io;
use enfgrid_core::signature::align;
use serde::Serialize;

use crate::CliResult;

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Reference frequency-series CSV.
    pub series_a: PathBuf,
    /// Series to align against the reference.
    pub series_b: PathBuf,
    /// Largest lag searched, in frames either way.
    #[arg(long, default_value_t = 120)]
    pub max_lag: usize,
    /// Output JSON (default: `align.json` in the output directory).
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct AlignOutput {
    series_a: String,
    series_b: String,
    max_lag: usize,
    /// b's frame n matches a's frame n + lag_frames.
    lag_frames: i64,
    lag_seconds: f64,
    peak_correlation: f64,
}

pub fn run(args: &AlignArgs, out_dir: &Path) -> CliResult<()> {
    let a = io::read_enf_csv(&args.series_a)?;
    let b = io::read_enf_csv(&args.series_b)?;
    let result = align(&a, &b, args.max_lag)?;
    let out = AlignOutput {
        series_a: args.series_a.display().to_string(),
        series_b: args.series_b.display().to_string(),
        max_lag: args.max_lag,
        lag_frames: result.lag_frames,
        lag_seconds: result.lag_frames as f64 * a.frame_period(),
        peak_correlation: result.peak_correlation,
    };
    let path = args.out_file.clone().unwrap_or_else(|| out_dir.join("align.json"));
    super::write_json_pretty(&path, &out)?;
    println!(
        "align: lag {} frames, peak correlation {:.4} -> {}",
        out.lag_frames,
        out.peak_correlation,
        path.display()
    );
    Ok(())
}
