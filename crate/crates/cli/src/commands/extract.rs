//! `enfgrid extract`: recording in, frequency-series CSV out.

use std::path::{Path, PathBuf};

use clap::Args;
use enfgrid_core::extract::extract_enf;
use enfgrid_core::io;

use crate::config::PipelineConfig;
use crate::CliResult;

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Input recording: 16-bit mono WAV or two-column time,value CSV.
    pub recording: PathBuf,
    /// Output CSV (default: `<stem>.enf.csv` in the output directory).
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

pub fn run(args: &ExtractArgs, cfg: &PipelineConfig, out_dir: &Path) -> CliResult<()> {
    let rec = io::read_recording(&args.recording)?;
    let extraction = extract_enf(&rec, &cfg.extraction)?;
    let stem = args
        .recording
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("recording");
    let out = args
        .out_file
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("{stem}.enf.csv")));
    io::write_enf_csv(&out, &extraction.enf)?;
    let flagged = extraction.flags.iter().filter(|f| !f.clean()).count();
    if flagged > 0 {
        eprintln!(
            "warning: {flagged} of {} frames flagged (band edge or weak subspace split)",
            extraction.flags.len()
        );
    }
    println!("extract: {} frames -> {}", extraction.enf.len(), out.display());
    Ok(())
}
