//! `enfgrid correlate`: per-segment pairwise signature correlations
//! across the anchor bundle, as tidy CSV and as full tables in JSON.

use std::path::Path;

use clap::Args;
use enfgrid_core::signature::pairwise_table;
use enfgrid_core::types::CorrelationTable;
use enfgrid_core::{io, Error};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::CliResult;

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// First frame of the first segment.
    #[arg(long, default_value_t = 0)]
    pub start_frame: usize,
}

#[derive(Serialize)]
struct SegmentTable {
    segment_index: usize,
    start_frame: usize,
    table: CorrelationTable,
}

pub fn run(args: &CorrelateArgs, cfg: &PipelineConfig, out_dir: &Path) -> CliResult<()> {
    let anchors = super::load_anchors(cfg)?;
    let details = super::details_for(&anchors, cfg.filter_order)?;
    let n = cfg.segment_frames;
    let n_seg = super::segment_count(&details, n, args.start_frame);
    if n_seg == 0 {
        return Err(Error::InsufficientData(format!(
            "no whole {n}-frame segment after frame {}",
            args.start_frame
        ))
        .into());
    }

    let mut csv = String::from("segment_index,site_a,site_b,rho\n");
    let mut tables = Vec::with_capacity(n_seg);
    for s in 0..n_seg {
        let start = args.start_frame + s * n;
        let table = pairwise_table(&details, start, n)?;
        for i in 0..anchors.len() {
            for j in (i + 1)..anchors.len() {
                csv.push_str(&format!(
                    "{s},{},{},{:.9}\n",
                    anchors[i].name,
                    anchors[j].name,
                    table.rho(i, j)
                ));
            }
        }
        tables.push(SegmentTable { segment_index: s, start_frame: start, table });
    }

    let csv_path = out_dir.join("correlations.csv");
    io::atomic_write(&csv_path, csv.as_bytes())?;
    super::write_json_pretty(&out_dir.join("correlations.json"), &tables)?;
    let pairs = anchors.len() * (anchors.len() - 1) / 2;
    println!(
        "correlate: {n_seg} segment(s) x {pairs} pair(s) -> {}",
        csv_path.display()
    );
    Ok(())
}
