//! Location signature extraction and comparison.
//!
//! The grid frequency at every site in an interconnect follows the same
//! slow wander, so the raw series are all but identical everywhere. What
//! differs from city to city is the fast residual riding on top of that
//! wander. This module aligns series in time, strips the shared wander with
//! a moving-average high-pass filter, and correlates the residuals; the
//! correlation falls off with distance between the recording sites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::types::{CorrelationTable, DetailSignal, EnfSignal};

/// How correlation coefficients are computed. The default leaves the
/// windows as-is (a raw inner-product coefficient); `Centered` subtracts
/// window means first (classic Pearson). Centering is off by default
/// because high-pass residuals are already mean-free at the scales that
/// matter, and the raw form is the one the rest of the pipeline is
/// calibrated against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMode {
    #[default]
    Uncentered,
    Centered,
}

/// Outcome of [`align`]: the lag (in frames) at which the two series match
/// best, and the normalized cross-correlation at that lag.
///
/// A value recorded at `b`'s frame `n` corresponds to `a`'s frame
/// `n + lag_frames`. Peaks below ~0.5 mean the series probably do not
/// overlap in time at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub lag_frames: i64,
    pub peak_correlation: f64,
}

/// Minimum number of overlapping frames required at every candidate lag.
const MIN_ALIGN_OVERLAP: usize = 10;

/// Find the integer lag within `±max_lag` frames that best aligns `a` and
/// `b`, by normalized cross-correlation of the mean-removed series. Exact
/// ties go to the smaller `|lag|`, then to the negative lag.
pub fn align(a: &EnfSignal, b: &EnfSignal, max_lag: usize) -> Result<AlignmentResult> {
    if (a.frame_period() - b.frame_period()).abs()
        > 1e-9 * a.frame_period().max(b.frame_period())
    {
        return Err(Error::Config(format!(
            "cannot align series with different frame periods ({} vs {})",
            a.frame_period(),
            b.frame_period()
        )));
    }
    let lag = max_lag as i64;
    let (la, lb) = (a.len() as i64, b.len() as i64);

    let center = |s: &EnfSignal| -> Vec<f64> {
        let mean = s.values().iter().sum::<f64>() / s.len().max(1) as f64;
        s.values().iter().map(|v| v - mean).collect()
    };
    let ac = center(a);
    let bc = center(b);

    let mut best: Option<(f64, i64)> = None;
    for ell in -lag..=lag {
        // Overlap window: pairs (a[n + ell], b[n]).
        let n0 = 0.max(-ell);
        let n1 = lb.min(la - ell);
        let count = n1 - n0;
        if count < MIN_ALIGN_OVERLAP as i64 {
            return Err(Error::InsufficientData(format!(
                "only {} overlapping frames at lag {ell}; need at least {MIN_ALIGN_OVERLAP}",
                count.max(0)
            )));
        }
        let (mut num, mut ea, mut eb) = (0.0, 0.0, 0.0);
        for n in n0..n1 {
            let x = ac[(n + ell) as usize];
            let y = bc[n as usize];
            num += x * y;
            ea += x * x;
            eb += y * y;
        }
        if ea == 0.0 || eb == 0.0 {
            continue; // No structure in this window; nothing to rank.
        }
        let r = (num / (ea.sqrt() * eb.sqrt())).clamp(-1.0, 1.0);
        let better = match best {
            None => true,
            Some((br, bl)) => {
                r > br || (r == br && (ell.abs() < bl.abs() || (ell.abs() == bl.abs() && ell < bl)))
            }
        };
        if better {
            best = Some((r, ell));
        }
    }
    match best {
        Some((peak_correlation, lag_frames)) => Ok(AlignmentResult { lag_frames, peak_correlation }),
        None => Err(Error::ZeroEnergyWindow),
    }
}

/// Subtract a centered length-`order` moving average from each frame,
/// keeping only fully covered frames (the output is shorter by
/// `order - 1`). `order` must be odd so the window is symmetric.
///
/// This is the workhorse that turns a frequency series into its
/// location-bearing residual.
pub fn highpass_detail(enf: &EnfSignal, order: usize) -> Result<DetailSignal> {
    if order < 3 || order % 2 == 0 {
        return Err(Error::Config(format!(
            "moving-average order must be odd and >= 3, got {order}"
        )));
    }
    if order >= enf.len() {
        return Err(Error::Config(format!(
            "moving-average order {order} must be shorter than the series ({} frames)",
            enf.len()
        )));
    }
    let x = enf.values();
    let half = (order - 1) / 2;
    let inv = 1.0 / order as f64;
    let out: Vec<f64> = (0..x.len() - order + 1)
        .map(|k| {
            let window_sum: f64 = x[k..k + order].iter().sum();
            x[k + half] - window_sum * inv
        })
        .collect();
    DetailSignal::new(out, enf.frame_period(), order)
}

/// Correlation coefficient of two residual windows of length `n` starting
/// at `start`, per [`CorrelationMode::Uncentered`] (raw inner product over
/// the product of window norms).
pub fn corrcoef(a: &DetailSignal, b: &DetailSignal, start: usize, n: usize) -> Result<f64> {
    corrcoef_with_mode(a, b, start, n, CorrelationMode::Uncentered)
}

/// [`corrcoef`] with an explicit centering mode.
pub fn corrcoef_with_mode(
    a: &DetailSignal,
    b: &DetailSignal,
    start: usize,
    n: usize,
    mode: CorrelationMode,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::Config(format!("correlation window must span >= 2 frames, got {n}")));
    }
    let end = start
        .checked_add(n)
        .ok_or_else(|| Error::Config("correlation window overflows".into()))?;
    if a.len() < end || b.len() < end {
        return Err(Error::InsufficientData(format!(
            "correlation window [{start}, {end}) exceeds series of {} and {} frames",
            a.len(),
            b.len()
        )));
    }
    let wa = &a.values()[start..end];
    let wb = &b.values()[start..end];
    let (ma, mb) = match mode {
        CorrelationMode::Uncentered => (0.0, 0.0),
        CorrelationMode::Centered => (
            wa.iter().sum::<f64>() / n as f64,
            wb.iter().sum::<f64>() / n as f64,
        ),
    };
    let (mut num, mut ea, mut eb) = (0.0, 0.0, 0.0);
    for p in 0..n {
        let x = wa[p] - ma;
        let y = wb[p] - mb;
        num += x * y;
        ea += x * x;
        eb += y * y;
    }
    if ea == 0.0 || eb == 0.0 {
        return Err(Error::ZeroEnergyWindow);
    }
    Ok((num / (ea.sqrt() * eb.sqrt())).clamp(-1.0, 1.0))
}

/// All pairwise correlations between named residual series over a common
/// window. The result has an exact unit diagonal and is bit-exactly
/// symmetric (each pair is computed once). Pairs are evaluated in parallel
/// when the `parallel` feature is on; the result does not depend on thread
/// count.
pub fn pairwise_table(
    sites: &[(String, DetailSignal)],
    start: usize,
    n: usize,
) -> Result<CorrelationTable> {
    pairwise_table_with_mode(sites, start, n, CorrelationMode::Uncentered)
}

/// [`pairwise_table`] with an explicit centering mode.
pub fn pairwise_table_with_mode(
    sites: &[(String, DetailSignal)],
    start: usize,
    n: usize,
    mode: CorrelationMode,
) -> Result<CorrelationTable> {
    let k = sites.len();
    if k < 2 {
        return Err(Error::Config("pairwise table needs at least two sites".into()));
    }
    for (name, d) in sites {
        if d.len() < start + n {
            return Err(Error::InsufficientData(format!(
                "site {name} has {} frames; window [{start}, {}) needs more",
                d.len(),
                start + n
            )));
        }
    }
    let pairs: Vec<(usize, usize)> =
        (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let results = par::map_slice(&pairs, |&(i, j)| {
        corrcoef_with_mode(&sites[i].1, &sites[j].1, start, n, mode)
    });

    let mut values = vec![0.0; k * k];
    for i in 0..k {
        values[i * k + i] = 1.0;
    }
    for (&(i, j), r) in pairs.iter().zip(results) {
        let rho = r.map_err(|e| match e {
            Error::ZeroEnergyWindow => Error::DegenerateSegment {
                start,
                a: sites[i].0.clone(),
                b: sites[j].0.clone(),
            },
            other => other,
        })?;
        values[i * k + j] = rho;
        values[j * k + i] = rho;
    }
    CorrelationTable::new(sites.iter().map(|(n, _)| n.clone()).collect(), values)
}

/// Small rank/statistics helpers shared by the evaluation harnesses.
pub mod stats {
    /// Spearman rank correlation with average ranks for ties. Returns NaN
    /// for series shorter than 2 or with zero rank variance.
    pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), y.len(), "spearman needs paired samples");
        let rx = ranks(x);
        let ry = ranks(y);
        pearson(&rx, &ry)
    }

    /// Plain Pearson correlation (centered), for evaluation code.
    pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), y.len());
        let n = x.len();
        if n < 2 {
            return f64::NAN;
        }
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let (mut num, mut ex, mut ey) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let a = x[i] - mx;
            let b = y[i] - my;
            num += a * b;
            ex += a * a;
            ey += b * b;
        }
        if ex == 0.0 || ey == 0.0 {
            return f64::NAN;
        }
        num / (ex.sqrt() * ey.sqrt())
    }

    /// Average ranks (1-based), ties share the mean of their rank run.
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let mut out = vec![0.0; x.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i + 1;
            while j < idx.len() && x[idx[j]] == x[idx[i]] {
                j += 1;
            }
            let avg = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
            for &k in &idx[i..j] {
                out[k] = avg;
            }
            i = j;
        }
        out
    }

    /// Sample mean and standard deviation (n-1 denominator; stddev is 0
    /// for a single sample).
    pub fn mean_std(xs: &[f64]) -> (f64, f64) {
        let n = xs.len();
        assert!(n > 0, "mean_std of empty slice");
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return (mean, 0.0);
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (mean, var.sqrt())
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn spearman_is_sign_of_monotone_relations() {
            let x = [1.0, 2.0, 3.0, 4.0, 5.0];
            let y = [2.0, 4.0, 9.0, 16.0, 25.0];
            assert!((spearman(&x, &y) - 1.0).abs() < 1e-12);
            let y_desc: Vec<f64> = y.iter().map(|v| -v).collect();
            assert!((spearman(&x, &y_desc) + 1.0).abs() < 1e-12);
        }

        #[test]
        fn spearman_handles_ties_with_average_ranks() {
            let x = [1.0, 1.0, 2.0, 3.0];
            let y = [5.0, 5.0, 6.0, 7.0];
            assert!((spearman(&x, &y) - 1.0).abs() < 1e-12);
        }
    }
}
