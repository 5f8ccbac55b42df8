//! `enfgrid fit-scheme`: fit a correlation-to-distance quantization
//! scheme from the anchor bundle's pairwise (distance, correlation)
//! samples, with explicit or quantile-derived bin edges.

use std::path::{Path, PathBuf};

use clap::Args;
use enfgrid_core::geolocate::{fit_quantization, quantile_edges};

use crate::config::PipelineConfig;
use crate::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct FitSchemeArgs {
    /// Interior correlation bin edges, ascending, e.g. "0.55,0.83,0.9".
    #[arg(long)]
    pub edges: Option<String>,
    /// Fit this many bins at sample quantiles instead of explicit edges.
    #[arg(long)]
    pub auto_bins: Option<usize>,
    /// Output JSON (default: `scheme.json` in the output directory).
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

pub fn run(args: &FitSchemeArgs, cfg: &PipelineConfig, out_dir: &Path) -> CliResult<()> {
    if args.edges.is_some() && args.auto_bins.is_some() {
        return Err(CliError::Usage(
            "pass --edges or --auto-bins, not both".into(),
        ));
    }
    let anchors = super::load_anchors(cfg)?;
    let details = super::details_for(&anchors, cfg.filter_order)?;
    let samples = super::pair_samples(&anchors, &details, cfg.segment_frames)?;
    let edges = match &args.edges {
        Some(text) => super::parse_f64_list(text, "--edges")?,
        None => quantile_edges(&samples, args.auto_bins.unwrap_or(4))?,
    };
    let fit = fit_quantization(&samples, &edges)?;
    if fit.clipped_bins > 0 {
        eprintln!(
            "warning: {} fitted bin(s) clipped to restore inverse ordering",
            fit.clipped_bins
        );
    }
    let path = args.out_file.clone().unwrap_or_else(|| out_dir.join("scheme.json"));
    super::write_json_pretty(&path, &fit.scheme)?;
    println!(
        "fit-scheme: {} bins from {} samples ({} clipped) -> {}",
        fit.scheme.bins().len(),
        samples.len(),
        fit.clipped_bins,
        path.display()
    );
    Ok(())
}
