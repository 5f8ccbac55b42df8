//! Periodogram frame-frequency estimator: Hann window, heavily
//! zero-padded FFT, and parabolic interpolation of the log-magnitude
//! peak. Simple, unbiased for a single tone, and independent enough from
//! the subspace estimator to serve as its cross-check.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Zero-padding factor before rounding up to a power of two.
const PAD_FACTOR: usize = 32;
/// FFT size ceiling; beyond this, interpolation has long since taken over.
const MAX_NFFT: usize = 1 << 20;

thread_local! {
    static FFT_CACHE: RefCell<HashMap<usize, Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan_fft(n: usize) -> Arc<dyn Fft<f64>> {
    FFT_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| FftPlanner::new().plan_fft_forward(n))
            .clone()
    })
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Peak frequency estimate for one frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SpectralPeak {
    pub freq: f64,
    /// The maximum sat on the boundary of the search band, so the value
    /// is a clamp, not a located peak.
    pub at_band_edge: bool,
}

/// Estimate the dominant frequency of `frame` within `[f_lo, f_hi]`.
/// The frame is assumed non-degenerate (the caller screens for that).
pub(crate) fn estimate_peak(frame: &[f64], fs: f64, f_lo: f64, f_hi: f64) -> Result<SpectralPeak> {
    let n = frame.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!(
            "spectral estimate needs at least 16 samples per frame, got {n}"
        )));
    }
    if !(f_lo < f_hi && f_lo >= 0.0 && f_hi < fs / 2.0) {
        return Err(Error::Config(format!(
            "search band [{f_lo}, {f_hi}] is not inside (0, {})",
            fs / 2.0
        )));
    }

    let nfft = next_pow2(n.saturating_mul(PAD_FACTOR)).clamp(next_pow2(n), MAX_NFFT);
    let mean = frame.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(nfft);
    for (i, &v) in frame.iter().enumerate() {
        // Symmetric Hann window.
        let w = 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos());
        buf.push(Complex::new((v - mean) * w, 0.0));
    }
    buf.resize(nfft, Complex::new(0.0, 0.0));
    plan_fft(nfft).process(&mut buf);

    let bin_hz = fs / nfft as f64;
    let k_lo = (f_lo / bin_hz).ceil() as usize;
    let k_hi = ((f_hi / bin_hz).floor() as usize).min(nfft / 2);
    if k_lo >= k_hi {
        return Err(Error::Config(format!(
            "search band [{f_lo}, {f_hi}] narrower than one bin ({bin_hz} Hz)"
        )));
    }

    let mut k_peak = k_lo;
    let mut best = f64::NEG_INFINITY;
    for k in k_lo..=k_hi {
        let p = buf[k].norm_sqr();
        if p > best {
            best = p;
            k_peak = k;
        }
    }
    if best <= 0.0 {
        return Err(Error::InsufficientData(
            "frame has no energy in the search band".into(),
        ));
    }

    if k_peak == k_lo || k_peak == k_hi {
        return Ok(SpectralPeak { freq: k_peak as f64 * bin_hz, at_band_edge: true });
    }

    // Parabolic refinement on the log magnitude; with a Hann window the
    // log spectrum is close to quadratic around the peak.
    let lm = buf[k_peak - 1].norm_sqr().ln();
    let l0 = buf[k_peak].norm_sqr().ln();
    let lp = buf[k_peak + 1].norm_sqr().ln();
    let denom = lm - 2.0 * l0 + lp;
    let delta = if denom < 0.0 { 0.5 * (lm - lp) / denom } else { 0.0 };
    let delta = delta.clamp(-0.5, 0.5);
    Ok(SpectralPeak { freq: (k_peak as f64 + delta) * bin_hz, at_band_edge: false })
}
