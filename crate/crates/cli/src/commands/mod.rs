//! Subcommand implementations and the helpers they share.

pub mod align;
pub mod correlate;
pub mod extract;
pub mod fit_scheme;
pub mod locate;
pub mod simulate;
pub mod sweep;

use std::path::Path;

use enfgrid_core::geolocate::{fit_quantization, quantile_edges, LocalizationMetrics};
use enfgrid_core::signature::{highpass_detail, pairwise_table};
use enfgrid_core::types::{AnchorSite, DetailSignal, QuantizationScheme};
use enfgrid_core::{io, Error, Result};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::{CliError, CliResult};

/// Read the configured anchor bundle; a missing setting is a
/// configuration error, a missing or malformed file an input error.
pub(crate) fn load_anchors(cfg: &PipelineConfig) -> CliResult<Vec<AnchorSite>> {
    let path = cfg.anchors.as_ref().ok_or_else(|| {
        CliError::Core(Error::Config(
            "no anchor index configured; pass --anchors or set `anchors`".into(),
        ))
    })?;
    Ok(io::read_anchor_bundle(path)?)
}

/// High-pass signatures for every anchor, in index order.
pub(crate) fn details_for(
    anchors: &[AnchorSite],
    order: usize,
) -> Result<Vec<(String, DetailSignal)>> {
    anchors
        .iter()
        .map(|a| Ok((a.name.clone(), highpass_detail(&a.enf, order)?)))
        .collect()
}

/// Number of whole correlation windows available from `start_frame`.
pub(crate) fn segment_count(
    details: &[(String, DetailSignal)],
    n: usize,
    start_frame: usize,
) -> usize {
    let min_len = details.iter().map(|(_, d)| d.len()).min().unwrap_or(0);
    min_len.saturating_sub(start_frame) / n
}

/// All (distance, correlation) samples across anchor pairs and segments —
/// the training set for scheme fitting.
pub(crate) fn pair_samples(
    anchors: &[AnchorSite],
    details: &[(String, DetailSignal)],
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    let n_seg = segment_count(details, n, 0);
    if n_seg == 0 {
        return Err(Error::InsufficientData(format!(
            "anchor series are shorter than one {n}-frame segment"
        )));
    }
    let mut samples = Vec::new();
    for s in 0..n_seg {
        let table = pairwise_table(details, s * n, n)?;
        for i in 0..anchors.len() {
            for j in (i + 1)..anchors.len() {
                let d = anchors[i].position.distance(anchors[j].position);
                samples.push((d, table.rho(i, j)));
            }
        }
    }
    Ok(samples)
}

/// Resolve the configured scheme: the built-in reference, a quantile fit
/// over the anchors, or a JSON file.
pub(crate) fn resolve_scheme(
    cfg: &PipelineConfig,
    anchors: &[AnchorSite],
    details: &[(String, DetailSignal)],
) -> CliResult<QuantizationScheme> {
    let spec = cfg.scheme.as_deref().ok_or_else(|| {
        CliError::Core(Error::Config(
            "this method needs a quantization scheme; pass --scheme \
             reference|fit|<path> or set `scheme`"
                .into(),
        ))
    })?;
    match spec {
        "reference" => Ok(QuantizationScheme::builtin_reference()),
        "fit" => {
            let samples = pair_samples(anchors, details, cfg.segment_frames)?;
            let edges = quantile_edges(&samples, 4)?;
            let fit = fit_quantization(&samples, &edges)?;
            if fit.clipped_bins > 0 {
                eprintln!(
                    "warning: {} fitted bin(s) clipped to restore inverse ordering",
                    fit.clipped_bins
                );
            }
            Ok(fit.scheme)
        }
        path => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Core(Error::Format(format!("{path}: {e}"))))
        }
    }
}

/// Serialize as pretty JSON with a trailing newline, atomically.
pub(crate) fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    io::atomic_write(path, text.as_bytes())
}

/// One `epsilon,p_loc,a_loc,a_loc_hits` row per tolerance.
pub(crate) fn write_metrics_csv(
    path: &Path,
    rows: &[(f64, LocalizationMetrics)],
) -> Result<()> {
    let mut text = String::from("epsilon,p_loc,a_loc,a_loc_hits\n");
    for (eps, m) in rows {
        text.push_str(&format!(
            "{eps},{:.9},{:.9},{:.9}\n",
            m.p_loc, m.a_loc, m.a_loc_hits
        ));
    }
    io::atomic_write(path, text.as_bytes())
}

/// Parse a comma-separated list of numbers ("inf" allowed).
pub(crate) fn parse_f64_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            return Err(CliError::Usage(format!("{what}: empty entry in {text:?}")));
        }
        out.push(tok.parse::<f64>().map_err(|_| {
            CliError::Usage(format!("{what}: {tok:?} is not a number"))
        })?);
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{what}: empty list")));
    }
    Ok(out)
}

/// Sample mean and (n-1)-normalized standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run `f` once per trial index, in parallel when built with the
/// `parallel` feature. Results keep trial order, so aggregation is
/// independent of thread count.
#[cfg(feature = "parallel")]
pub(crate) fn map_trials<T: Send>(
    trials: usize,
    f: impl Fn(usize) -> CliResult<T> + Sync + Send,
) -> CliResult<Vec<T>> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_trials<T: Send>(
    trials: usize,
    f: impl Fn(usize) -> CliResult<T> + Sync + Send,
) -> CliResult<Vec<T>> {
    (0..trials).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_lists_parse_including_inf() {
        assert_eq!(parse_f64_list("3,5,7", "m").unwrap(), vec![3.0, 5.0, 7.0]);
        let v = parse_f64_list("10, 20, inf", "snr").unwrap();
        assert_eq!(v[..2], [10.0, 20.0]);
        assert!(v[2].is_infinite());
        assert!(matches!(parse_f64_list("", "x"), Err(CliError::Usage(_))));
        assert!(matches!(parse_f64_list("1,,2", "x"), Err(CliError::Usage(_))));
        assert!(matches!(parse_f64_list("1,two", "x"), Err(CliError::Usage(_))));
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let (m, s) = mean_std(&[7.0]);
        assert_eq!((m, s), (7.0, 0.0));
    }

    #[test]
    fn trial_mapping_preserves_order() {
        let out = map_trials(8, |t| Ok(t * t)).unwrap();
        assert_eq!(out, vec![0, 1, 4, 9, 16, 25, 36, 49]);
    }
}
