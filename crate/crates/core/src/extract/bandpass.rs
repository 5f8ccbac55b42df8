//! Zero-phase band-pass filtering around the nominal grid frequency.
//!
//! A cascade of two resonant band-pass biquads is run forward and then
//! backward over the record (squaring the magnitude response and
//! cancelling phase). The record is padded on both sides before
//! filtering; with a near-sinusoidal signal, plain reflection padding
//! would splice in a time-reversed tone and ring the resonator, so each
//! side is instead extended with a tone fitted to that end of the record
//! (frequency from the periodogram estimator, amplitude and phase by
//! least squares), falling back to odd reflection when no tone can be
//! fitted. A detuned extension would drag the first and last frames, so
//! the fit has to be this careful.

use super::spectral;
use crate::error::{Error, Result};

/// Number of cascaded biquad sections (per pass).
const SECTIONS: usize = 2;

/// One direct-form-II-transposed biquad, coefficients normalized so
/// `a0 = 1`.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Constant-peak-gain resonant band-pass centered on `f0` with quality
    /// factor `q` (audio-EQ-cookbook form).
    fn bandpass(fs: f64, f0: f64, q: f64) -> Self {
        let omega = std::f64::consts::TAU * f0 / fs;
        let alpha = omega.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b0: alpha / a0,
            b1: 0.0,
            b2: -alpha / a0,
            a1: -2.0 * omega.cos() / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    /// Steady-state filter state for a constant input `x0`, so filtering a
    /// flat-extended signal starts with no transient.
    fn steady_state(&self, x0: f64) -> (f64, f64) {
        // Solve s1 = b1 x - a1 y + s2, s2 = b2 x - a2 y, y = b0 x + s1.
        let denom = 1.0 + self.a1 + self.a2;
        let s1 = (self.b1 + self.b2 - (self.a1 + self.a2) * self.b0) * x0 / denom;
        let s2 = (self.b2 - self.a2 * self.b0) * x0 - self.a2 * s1;
        (s1, s2)
    }

    fn filter_in_place(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = match x.first() {
            Some(&x0) => self.steady_state(x0),
            None => return,
        };
        for v in x.iter_mut() {
            let xi = *v;
            let y = self.b0 * xi + s1;
            s1 = self.b1 * xi - self.a1 * y + s2;
            s2 = self.b2 * xi - self.a2 * y;
            *v = y;
        }
    }
}

/// Transient length to pad on each side, in ring-down time constants of
/// the resonator (`2Q / omega0` seconds each). Twelve constants knock the
/// startup transient below 1e-5 before it can reach the real samples.
const PAD_TIME_CONSTANTS: f64 = 12.0;

fn pad_len(fs: f64, f0: f64, q: f64, n: usize) -> usize {
    let tau_seconds = 2.0 * q / (std::f64::consts::TAU * f0);
    let want = (PAD_TIME_CONSTANTS * tau_seconds * fs).ceil() as usize;
    want.min(n.saturating_sub(1))
}

/// A tone plus baseline, `mean + a sin(2 pi f k) + b cos(2 pi f k)`,
/// indexed by global sample number `k` and fitted to one end of the
/// record. The baseline matters: without it a DC offset in the recording
/// would step to zero at the splice and ring the resonator.
struct EdgeTone {
    freq_cycles: f64,
    a: f64,
    b: f64,
    mean: f64,
}

impl EdgeTone {
    /// Fit to `w`, whose first sample has global index `start`. Frequency
    /// comes from the periodogram peak inside the pass band; amplitude and
    /// phase from least squares at that frequency. `None` when the window
    /// has no locatable in-band tone.
    fn fit(w: &[f64], fs: f64, f_lo: f64, f_hi: f64, start: i64) -> Option<Self> {
        let peak = spectral::estimate_peak(w, fs, f_lo, f_hi).ok()?;
        if peak.at_band_edge {
            return None;
        }
        let freq_cycles = peak.freq / fs;
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let (mut sss, mut ssc, mut scc, mut sxs, mut sxc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (k, &x) in w.iter().enumerate() {
            let phase = std::f64::consts::TAU * freq_cycles * (start + k as i64) as f64;
            let (s, c) = phase.sin_cos();
            sss += s * s;
            ssc += s * c;
            scc += c * c;
            sxs += (x - mean) * s;
            sxc += (x - mean) * c;
        }
        let det = sss * scc - ssc * ssc;
        if !(det > 1e-9 * (sss + scc).powi(2)) {
            return None;
        }
        let a = (sxs * scc - sxc * ssc) / det;
        let b = (sxc * sss - sxs * ssc) / det;
        if !(a.is_finite() && b.is_finite()) {
            return None;
        }
        Some(Self { freq_cycles, a, b, mean })
    }

    fn sample(&self, k: i64) -> f64 {
        let phase = std::f64::consts::TAU * self.freq_cycles * k as f64;
        let (s, c) = phase.sin_cos();
        self.mean + self.a * s + self.b * c
    }
}

/// Odd reflection about the endpoint: continuous in value and slope, used
/// when no edge tone can be fitted.
fn odd_reflect_tail(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    (0..pad).map(|i| 2.0 * x[n - 1] - x[n - 2 - i]).collect()
}

/// Band-pass `x` to `center ± halfwidth` Hz with zero phase shift: two
/// resonator sections applied forward and backward. Attenuation far from
/// the band (harmonics, DC) exceeds 40 dB by a wide margin.
pub(crate) fn bandpass_zero_phase(
    x: &[f64],
    fs: f64,
    center: f64,
    halfwidth: f64,
) -> Result<Vec<f64>> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::Config(format!("sample rate must be positive, got {fs}")));
    }
    if !(center.is_finite() && center > 0.0 && halfwidth.is_finite() && halfwidth > 0.0) {
        return Err(Error::Config(format!(
            "band center {center} and halfwidth {halfwidth} must be positive"
        )));
    }
    if center + halfwidth >= fs / 2.0 {
        return Err(Error::Config(format!(
            "band edge {} Hz reaches the Nyquist frequency {} Hz",
            center + halfwidth,
            fs / 2.0
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "band-pass needs at least 2 samples, got {}",
            x.len()
        )));
    }

    let q = center / (2.0 * halfwidth);
    let biquad = Biquad::bandpass(fs, center, q);
    let pad = pad_len(fs, center, q, x.len());
    let n = x.len();

    // Extend each end with its locally fitted tone. A one-second window
    // pins the fitted frequency to well under a millihertz, which keeps
    // the extension from dragging the edge frames.
    let fit_window = (fs.round() as usize).clamp(16, n);
    let f_lo = center - halfwidth;
    let f_hi = center + halfwidth;
    let pre = match EdgeTone::fit(&x[..fit_window], fs, f_lo, f_hi, 0) {
        Some(t) => (0..pad).map(|i| t.sample(i as i64 - pad as i64)).collect(),
        None => {
            let reversed: Vec<f64> = x.iter().rev().copied().collect();
            let mut p = odd_reflect_tail(&reversed, pad);
            p.reverse();
            p
        }
    };
    let post = match EdgeTone::fit(&x[n - fit_window..], fs, f_lo, f_hi, (n - fit_window) as i64) {
        Some(t) => (0..pad).map(|i| t.sample((n + i) as i64)).collect(),
        None => odd_reflect_tail(x, pad),
    };

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend_from_slice(&pre);
    ext.extend_from_slice(x);
    ext.extend_from_slice(&post);

    for _ in 0..SECTIONS {
        biquad.filter_in_place(&mut ext);
    }
    ext.reverse();
    for _ in 0..SECTIONS {
        biquad.filter_in_place(&mut ext);
    }
    ext.reverse();

    Ok(ext[pad..pad + n].to_vec())
}
