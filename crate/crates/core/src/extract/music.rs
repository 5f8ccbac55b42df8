//! Subspace frame-frequency estimator.
//!
//! Per frame: decimate the band-passed samples to a few hundred hertz,
//! build a forward-backward averaged autocorrelation matrix, split its
//! eigenvectors into signal and noise subspaces, and scan the band for
//! the frequency whose complex steering vector is most orthogonal to the
//! noise subspace. A real tone occupies a two-dimensional subspace
//! (sine and cosine), hence the default signal order of 2.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Target sample rate after decimation, Hz. The band of interest is a few
/// hertz wide, so a few hundred hertz keeps plenty of margin while making
/// the covariance dimension meaningful.
const DECIMATED_RATE_HZ: f64 = 500.0;

/// Signal subspace is considered trustworthy when the last signal
/// eigenvalue exceeds the first noise eigenvalue by this factor.
const SUBSPACE_GAP_MIN: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct SubspaceEstimate {
    pub freq: f64,
    /// Scan maximum sat on the search-band boundary.
    pub at_band_edge: bool,
    /// Signal/noise eigenvalue gap below [`SUBSPACE_GAP_MIN`]: the frame
    /// may contain no tone at all, only shaped noise.
    pub weak_subspace: bool,
    /// The gap itself, for diagnostics.
    #[allow(dead_code)]
    pub eigen_ratio: f64,
}

pub(crate) struct SubspaceParams {
    pub order: usize,
    pub covariance_dim: usize,
    pub scan_resolution: f64,
}

/// Estimate the dominant frequency of `frame` inside `[f_lo, f_hi]`.
/// The frame should already be band-passed; decimation here does not
/// re-filter.
pub(crate) fn estimate_peak(
    frame: &[f64],
    fs: f64,
    f_lo: f64,
    f_hi: f64,
    params: &SubspaceParams,
) -> Result<SubspaceEstimate> {
    let m = params.covariance_dim;
    if params.order == 0 || params.order >= m {
        return Err(Error::Config(format!(
            "signal order {} must be in 1..covariance dim {m}",
            params.order
        )));
    }
    if !(params.scan_resolution.is_finite() && params.scan_resolution > 0.0) {
        return Err(Error::Config(format!(
            "scan resolution must be positive, got {}",
            params.scan_resolution
        )));
    }
    if !(f_lo < f_hi && f_lo >= 0.0 && f_hi < fs / 2.0) {
        return Err(Error::Config(format!(
            "search band [{f_lo}, {f_hi}] is not inside (0, {})",
            fs / 2.0
        )));
    }

    let factor = ((fs / DECIMATED_RATE_HZ).floor() as usize).max(1);
    let fs_d = fs / factor as f64;
    if f_hi >= fs_d / 2.0 {
        return Err(Error::Config(format!(
            "band edge {f_hi} Hz reaches the decimated Nyquist frequency {} Hz",
            fs_d / 2.0
        )));
    }
    let x: Vec<f64> = frame.iter().step_by(factor).copied().collect();
    let n = x.len();
    if n < 2 * m {
        return Err(Error::Config(format!(
            "frame too short for the covariance dimension: {n} decimated \
             samples for dimension {m} (need at least {})",
            2 * m
        )));
    }

    // Forward-backward averaged autocorrelation estimate. Backward windows
    // are the forward ones reversed, which for a real process just doubles
    // the effective snapshot count and symmetrizes the estimate.
    let snapshots = n - m + 1;
    let mut r = DMatrix::<f64>::zeros(m, m);
    for l in 0..snapshots {
        let w = &x[l..l + m];
        for i in 0..m {
            for j in i..m {
                r[(i, j)] += w[i] * w[j] + w[m - 1 - i] * w[m - 1 - j];
            }
        }
    }
    let norm = 1.0 / (2.0 * snapshots as f64);
    for i in 0..m {
        for j in i..m {
            let v = r[(i, j)] * norm;
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(r);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lam_sig = eig.eigenvalues[idx[params.order - 1]].max(0.0);
    let lam_noise = eig.eigenvalues[idx[params.order]].max(0.0);
    let eigen_ratio = if lam_noise > lam_sig * 1e-15 {
        lam_sig / lam_noise
    } else {
        f64::INFINITY
    };
    let weak_subspace = eigen_ratio < SUBSPACE_GAP_MIN;

    let sig: Vec<Vec<f64>> = idx[..params.order]
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();

    // Scan the band minimizing the null spectrum
    //   null(f) = 1 - (1/m) * sum_s |e(f)^H v_s|^2,
    // where e(f) is the unit-step complex steering vector. The projection
    // onto the full orthonormal basis is m, so null is in [0, 1] and its
    // zeros are the subspace frequencies. cos/sin of n*theta come from a
    // rotation recurrence instead of a table.
    let steps = ((f_hi - f_lo) / params.scan_resolution).round() as usize;
    let steps = steps.max(2);
    let res = (f_hi - f_lo) / steps as f64;
    let mut best_k = 0usize;
    let mut best_null = f64::INFINITY;
    let mut nulls = vec![0.0f64; steps + 1];
    let mut acc = vec![0.0f64; 2 * sig.len()]; // re/im projection per signal vector
    for (k, null) in nulls.iter_mut().enumerate() {
        let f = f_lo + k as f64 * res;
        let theta = std::f64::consts::TAU * f / fs_d;
        let (dsin, dcos) = theta.sin_cos();
        let (mut c, mut s) = (1.0f64, 0.0f64);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for i in 0..m {
            for (si, v) in sig.iter().enumerate() {
                acc[2 * si] += c * v[i];
                acc[2 * si + 1] += s * v[i];
            }
            let c2 = c * dcos - s * dsin;
            s = c * dsin + s * dcos;
            c = c2;
        }
        let mut proj = 0.0;
        for si in 0..sig.len() {
            proj += acc[2 * si] * acc[2 * si] + acc[2 * si + 1] * acc[2 * si + 1];
        }
        *null = (1.0 - proj / m as f64).max(f64::MIN_POSITIVE);
        if *null < best_null {
            best_null = *null;
            best_k = k;
        }
    }

    if best_k == 0 || best_k == steps {
        return Ok(SubspaceEstimate {
            freq: f_lo + best_k as f64 * res,
            at_band_edge: true,
            weak_subspace,
            eigen_ratio,
        });
    }

    // Parabolic refinement on the log null spectrum around the minimum.
    let lm = nulls[best_k - 1].ln();
    let l0 = nulls[best_k].ln();
    let lp = nulls[best_k + 1].ln();
    let denom = lm - 2.0 * l0 + lp;
    let delta = if denom > 0.0 { 0.5 * (lm - lp) / denom } else { 0.0 };
    let delta = delta.clamp(-0.5, 0.5);
    Ok(SubspaceEstimate {
        freq: f_lo + (best_k as f64 + delta) * res,
        at_band_edge: false,
        weak_subspace,
        eigen_ratio,
    })
}
