//! `enfgrid locate`: place a query series on the raster, or score every
//! anchor against the others (leave-one-out) and emit tolerance metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use enfgrid_core::geolocate::{
    combined_locate, halfplane_locate, localization_metrics, quantization_locate,
    LocalizationMetrics, LocalizationQuery, LocalizationReport,
};
use enfgrid_core::signature::{corrcoef, highpass_detail};
use enfgrid_core::types::{
    AnchorSite, DetailSignal, FeasibleRegion, GridDomain, Point, QuantizationScheme,
};
use enfgrid_core::{io, Error};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Halfplane,
    Quantization,
    Combined,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Halfplane => "halfplane",
            MethodArg::Quantization => "quantization",
            MethodArg::Combined => "combined",
        }
    }
}

#[derive(Debug, Args)]
pub struct LocateArgs {
    /// Query frequency-series CSV (mutually exclusive with --leave-one-out).
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Rotate each anchor in as the query and aggregate metrics over every
    /// segment and tolerance in the config.
    #[arg(long)]
    pub leave_one_out: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Halfplane)]
    pub method: MethodArg,
    /// Segment index to correlate over (single-query mode).
    #[arg(long, default_value_t = 0)]
    pub segment: usize,
    /// True position "x,y" in miles; adds hit/metrics output.
    #[arg(long)]
    pub truth: Option<String>,
    /// Also write the feasible region as GeoJSON.
    #[arg(long)]
    pub geojson: bool,
}

/// Single-query report: the core's region plus everything needed to read
/// it without re-deriving context.
#[derive(Serialize)]
struct LocateOutput<'a> {
    method: &'static str,
    epsilon: f64,
    segment_index: usize,
    constraints_applied: usize,
    constraints_skipped: usize,
    area_fraction: f64,
    /// Present only when --truth was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    hit: Option<bool>,
    rho_query: &'a BTreeMap<String, f64>,
    region: &'a FeasibleRegion,
}

pub fn run(args: &LocateArgs, cfg: &PipelineConfig, out_dir: &Path) -> CliResult<()> {
    if args.query.is_some() == args.leave_one_out {
        return Err(CliError::Usage(
            "pass exactly one of --query <csv> or --leave-one-out".into(),
        ));
    }
    let anchors = super::load_anchors(cfg)?;
    let details = super::details_for(&anchors, cfg.filter_order)?;
    let positions: Vec<Point> = anchors.iter().map(|a| a.position).collect();
    let domain = cfg.domain.resolve(&positions)?;
    let scheme = match args.method {
        MethodArg::Halfplane => None,
        _ => Some(super::resolve_scheme(cfg, &anchors, &details)?),
    };

    if let Some(query) = &args.query {
        single_query(args, cfg, out_dir, query, &anchors, &details, domain, scheme)
    } else {
        leave_one_out(args, cfg, out_dir, &anchors, &details, domain, scheme)
    }
}

fn dispatch(
    method: MethodArg,
    query: &LocalizationQuery,
    scheme: Option<&QuantizationScheme>,
) -> CliResult<LocalizationReport> {
    // A scheme is always resolved before quantization/combined dispatch.
    Ok(match method {
        MethodArg::Halfplane => halfplane_locate(query)?,
        MethodArg::Quantization => quantization_locate(query, scheme.unwrap())?,
        MethodArg::Combined => combined_locate(query, scheme.unwrap())?,
    })
}

#[allow(clippy::too_many_arguments)]
fn single_query(
    args: &LocateArgs,
    cfg: &PipelineConfig,
    out_dir: &Path,
    query_path: &Path,
    anchors: &[AnchorSite],
    details: &[(String, DetailSignal)],
    domain: GridDomain,
    scheme: Option<QuantizationScheme>,
) -> CliResult<()> {
    let q_enf = io::read_enf_csv(query_path)?;
    let q_detail = highpass_detail(&q_enf, cfg.filter_order)?;
    let start = args.segment * cfg.segment_frames;
    let mut rho_query = BTreeMap::new();
    for (name, d) in details {
        rho_query.insert(
            name.clone(),
            corrcoef(&q_detail, d, start, cfg.segment_frames)?,
        );
    }
    let epsilon = cfg.epsilon[0];
    let lq = LocalizationQuery {
        anchors: anchors.to_vec(),
        rho_query,
        epsilon,
        domain,
    };
    let report = dispatch(args.method, &lq, scheme.as_ref())?;

    let truth = args.truth.as_deref().map(parse_point).transpose()?;
    let hit = match truth {
        // Truth outside the raster counts as a miss rather than an error.
        Some(p) => Some(report.region.contains(p).unwrap_or(false)),
        None => None,
    };
    let area_fraction = report.region.area_fraction();

    let method = args.method.name();
    let out = LocateOutput {
        method,
        epsilon,
        segment_index: args.segment,
        constraints_applied: report.constraints_applied,
        constraints_skipped: report.constraints_skipped,
        area_fraction,
        hit,
        rho_query: &lq.rho_query,
        region: &report.region,
    };
    let report_path = out_dir.join(format!("report_{method}.json"));
    super::write_json_pretty(&report_path, &out)?;
    if args.geojson {
        io::write_region_geojson(
            &out_dir.join(format!("region_{method}.geojson")),
            &report.region,
        )?;
    }
    if let Some(hit) = hit {
        let m = LocalizationMetrics {
            queries: 1,
            hits: hit as usize,
            p_loc: hit as usize as f64,
            a_loc: if hit { area_fraction } else { 0.0 },
            a_loc_hits: if hit { area_fraction } else { 0.0 },
        };
        super::write_metrics_csv(
            &out_dir.join(format!("metrics_{method}.csv")),
            &[(epsilon, m)],
        )?;
    }
    println!(
        "locate({method}): area fraction {:.6}, {} applied, {} skipped{} -> {}",
        area_fraction,
        report.constraints_applied,
        report.constraints_skipped,
        match hit {
            Some(h) => format!(", hit={h}"),
            None => String::new(),
        },
        report_path.display()
    );
    Ok(())
}

fn leave_one_out(
    args: &LocateArgs,
    cfg: &PipelineConfig,
    out_dir: &Path,
    anchors: &[AnchorSite],
    details: &[(String, DetailSignal)],
    domain: GridDomain,
    scheme: Option<QuantizationScheme>,
) -> CliResult<()> {
    let n = cfg.segment_frames;
    let n_seg = super::segment_count(details, n, 0);
    if n_seg == 0 {
        return Err(Error::InsufficientData(format!(
            "anchor series are shorter than one {n}-frame segment"
        ))
        .into());
    }
    let method = args.method.name();
    let mut rows: Vec<(f64, LocalizationMetrics)> = Vec::with_capacity(cfg.epsilon.len());
    for &epsilon in &cfg.epsilon {
        let mut outcomes: Vec<(FeasibleRegion, Point)> = Vec::new();
        for s in 0..n_seg {
            for q in 0..anchors.len() {
                let mut rho_query = BTreeMap::new();
                for (j, (name, d)) in details.iter().enumerate() {
                    if j != q {
                        rho_query
                            .insert(name.clone(), corrcoef(&details[q].1, d, s * n, n)?);
                    }
                }
                let lq = LocalizationQuery {
                    anchors: anchors
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != q)
                        .map(|(_, a)| a.clone())
                        .collect(),
                    rho_query,
                    epsilon,
                    domain: domain.clone(),
                };
                let report = dispatch(args.method, &lq, scheme.as_ref())?;
                outcomes.push((report.region, anchors[q].position));
            }
        }
        let refs: Vec<(&FeasibleRegion, Point)> =
            outcomes.iter().map(|(r, p)| (r, *p)).collect();
        let metrics = localization_metrics(&refs)?;
        println!(
            "locate({method}) leave-one-out eps={epsilon}: p_loc {:.3}, a_loc {:.4} \
             over {} queries",
            metrics.p_loc, metrics.a_loc, metrics.queries
        );
        rows.push((epsilon, metrics));
    }
    let path = out_dir.join(format!("metrics_{method}.csv"));
    super::write_metrics_csv(&path, &rows)?;
    println!(
        "locate({method}) leave-one-out: {n_seg} segment(s) x {} anchors -> {}",
        anchors.len(),
        path.display()
    );
    Ok(())
}

fn parse_point(text: &str) -> CliResult<Point> {
    let parts = super::parse_f64_list(text, "--truth")?;
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "--truth needs exactly \"x,y\", got {text:?}"
        )));
    }
    Ok(Point::new(parts[0], parts[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_strings_parse_to_points() {
        let p = parse_point("12.5,-3").unwrap();
        assert_eq!((p.x, p.y), (12.5, -3.0));
        assert!(matches!(parse_point("1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_point("1,2,3"), Err(CliError::Usage(_))));
    }
}
