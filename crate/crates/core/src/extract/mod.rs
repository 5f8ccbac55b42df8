//! Grid-frequency extraction from power-tone recordings.
//!
//! The pipeline band-passes the whole recording around the nominal
//! frequency with zero phase shift, splits it into fixed, non-overlapping
//! frames (a trailing partial frame is dropped), and estimates one
//! frequency per frame — by default with the subspace estimator, with a
//! periodogram estimator available as an independent cross-check.

mod bandpass;
mod music;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::types::{EnfSignal, RawRecording};

pub(crate) use bandpass::bandpass_zero_phase;

/// Which per-frame frequency estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMethod {
    /// Eigendecomposition of the frame autocorrelation and a null-spectrum
    /// scan. Slower, much finer resolution at short frames.
    #[default]
    Subspace,
    /// Hann-windowed zero-padded periodogram with parabolic peak
    /// interpolation. Fast, and independent enough to cross-check the
    /// subspace path.
    Spectral,
}

/// Extraction parameters. Defaults are tuned for mains recordings:
/// 60 Hz nominal, ±1 Hz search band, one-second frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    #[serde(default = "default_nominal")]
    pub nominal: f64,
    /// Half-width of the band-pass and search band, Hz.
    #[serde(default = "default_halfwidth")]
    pub band_halfwidth: f64,
    /// Frame length in seconds; one frequency value per frame.
    #[serde(default = "default_frame_seconds")]
    pub frame_seconds: f64,
    #[serde(default)]
    pub method: EstimatorMethod,
    /// Signal-subspace dimension (2 for one real tone).
    #[serde(default = "default_order")]
    pub subspace_order: usize,
    /// Autocorrelation matrix dimension for the subspace method.
    #[serde(default = "default_cov_dim")]
    pub covariance_dim: usize,
    /// Null-spectrum scan step, Hz.
    #[serde(default = "default_scan_resolution")]
    pub scan_resolution: f64,
}

fn default_nominal() -> f64 {
    60.0
}
fn default_halfwidth() -> f64 {
    1.0
}
fn default_frame_seconds() -> f64 {
    1.0
}
fn default_order() -> usize {
    2
}
fn default_cov_dim() -> usize {
    64
}
fn default_scan_resolution() -> f64 {
    1e-4
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            nominal: default_nominal(),
            band_halfwidth: default_halfwidth(),
            frame_seconds: default_frame_seconds(),
            method: EstimatorMethod::default(),
            subspace_order: default_order(),
            covariance_dim: default_cov_dim(),
            scan_resolution: default_scan_resolution(),
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nominal != 50.0 && self.nominal != 60.0 {
            return Err(Error::Config(format!(
                "nominal frequency must be 50 or 60 Hz, got {}",
                self.nominal
            )));
        }
        if !(self.band_halfwidth.is_finite()
            && self.band_halfwidth > 0.0
            && self.band_halfwidth <= 1.0)
        {
            return Err(Error::Config(format!(
                "band halfwidth must be in (0, 1] Hz, got {}",
                self.band_halfwidth
            )));
        }
        if !(self.frame_seconds.is_finite() && self.frame_seconds > 0.0) {
            return Err(Error::Config(format!(
                "frame length must be positive, got {} s",
                self.frame_seconds
            )));
        }
        if self.subspace_order == 0 || self.subspace_order >= self.covariance_dim {
            return Err(Error::Config(format!(
                "subspace order {} must be in 1..covariance dim {}",
                self.subspace_order, self.covariance_dim
            )));
        }
        if !(self.scan_resolution.is_finite() && self.scan_resolution > 0.0) {
            return Err(Error::Config(format!(
                "scan resolution must be positive, got {}",
                self.scan_resolution
            )));
        }
        Ok(())
    }
}

/// Per-frame estimator diagnostics. Flagged values are still reported —
/// downstream stages decide whether to trust them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameFlags {
    /// Peak sat on the search-band boundary (clamped, not located).
    pub at_band_edge: bool,
    /// Signal/noise eigenvalue gap too small; the frame may hold no tone.
    pub weak_subspace: bool,
}

impl FrameFlags {
    pub fn clean(self) -> bool {
        !self.at_band_edge && !self.weak_subspace
    }
}

/// Extraction output: the frequency series plus one flag set per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub enf: EnfSignal,
    pub flags: Vec<FrameFlags>,
}

/// Frame layout for a recording: `(samples_per_frame, frame_count)`.
/// The trailing partial frame is dropped.
pub fn frame_layout(n_samples: usize, fs: f64, frame_seconds: f64) -> Result<(usize, usize)> {
    let frame_len = (frame_seconds * fs).round() as usize;
    if frame_len < 16 {
        return Err(Error::Config(format!(
            "frames of {frame_seconds} s at {fs} Hz are only {frame_len} samples"
        )));
    }
    let n_frames = n_samples / frame_len;
    if n_frames == 0 {
        return Err(Error::InsufficientData(format!(
            "recording has {n_samples} samples, shorter than one {frame_len}-sample frame"
        )));
    }
    Ok((frame_len, n_frames))
}

/// Frame mean power below this is treated as silence rather than signal.
const DEGENERATE_POWER: f64 = 1e-20;

/// Extract the per-frame grid frequency from a recording.
///
/// Frames are estimated independently (in parallel when the `parallel`
/// feature is on; results are positionally collected, so thread count
/// never changes the output). If several frames fail, the error for the
/// earliest one is reported.
pub fn extract_enf(rec: &RawRecording, config: &ExtractionConfig) -> Result<Extraction> {
    config.validate()?;
    let fs = rec.sample_rate();
    let f_lo = config.nominal - config.band_halfwidth;
    let f_hi = config.nominal + config.band_halfwidth;
    if f_hi >= fs / 2.0 {
        return Err(Error::Config(format!(
            "sample rate {fs} Hz cannot represent the {f_hi} Hz band edge"
        )));
    }

    let filtered = bandpass_zero_phase(rec.samples(), fs, config.nominal, config.band_halfwidth)?;
    let (frame_len, n_frames) = frame_layout(filtered.len(), fs, config.frame_seconds)?;

    let per_frame: Vec<Result<(f64, FrameFlags)>> = par::map_indices(n_frames, |i| {
        let frame = &filtered[i * frame_len..(i + 1) * frame_len];
        let power = frame.iter().map(|v| v * v).sum::<f64>() / frame_len as f64;
        if power < DEGENERATE_POWER {
            return Err(Error::DegenerateFrame {
                index: i,
                reason: "no in-band energy (silent or constant input)".into(),
            });
        }
        match config.method {
            EstimatorMethod::Subspace => {
                let params = music::SubspaceParams {
                    order: config.subspace_order,
                    covariance_dim: config.covariance_dim,
                    scan_resolution: config.scan_resolution,
                };
                let e = music::estimate_peak(frame, fs, f_lo, f_hi, &params)?;
                Ok((
                    e.freq,
                    FrameFlags { at_band_edge: e.at_band_edge, weak_subspace: e.weak_subspace },
                ))
            }
            EstimatorMethod::Spectral => {
                let p = spectral::estimate_peak(frame, fs, f_lo, f_hi)?;
                Ok((p.freq, FrameFlags { at_band_edge: p.at_band_edge, weak_subspace: false }))
            }
        }
    });

    let mut values = Vec::with_capacity(n_frames);
    let mut flags = Vec::with_capacity(n_frames);
    for r in per_frame {
        let (freq, flag) = r?;
        values.push(freq);
        flags.push(flag);
    }
    let enf = EnfSignal::new(values, config.frame_seconds, rec.start_time(), config.nominal)?;
    Ok(Extraction { enf, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridsim::synthesize_waveform;

    fn recording_of(values: &[f64], fs: f64, snr_db: f64, seed: u64) -> RawRecording {
        let enf = EnfSignal::new(values.to_vec(), 1.0, 0.0, 60.0).unwrap();
        synthesize_waveform(&enf, fs, 1.0, snr_db, seed).unwrap()
    }

    #[test]
    fn frame_layout_floors_partial_frames() {
        assert_eq!(frame_layout(2500, 1000.0, 1.0).unwrap(), (1000, 2));
        assert_eq!(frame_layout(2000, 1000.0, 1.0).unwrap(), (1000, 2));
        assert!(matches!(
            frame_layout(999, 1000.0, 1.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(frame_layout(100, 1000.0, 0.001).is_err());
    }

    /// A grid-like series: small frame-to-frame wander around nominal.
    fn grid_like_series(frames: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
        let mut f = 60.0;
        (0..frames)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let u = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                f = (f + 2e-3 * u - 0.02 * (f - 60.0)).clamp(59.9, 60.1);
                f
            })
            .collect()
    }

    #[test]
    fn recovers_a_wandering_series_within_two_millihertz() {
        let truth = grid_like_series(20, 4);
        let rec = recording_of(&truth, 1000.0, 40.0, 0);
        let out = extract_enf(&rec, &ExtractionConfig::default()).unwrap();
        assert_eq!(out.enf.len(), truth.len());
        let (worst, err) = out
            .enf
            .values()
            .iter()
            .zip(&truth)
            .map(|(est, t)| (est - t).abs())
            .enumerate()
            .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
        assert!(err < 2e-3, "frame {worst} off by {err} Hz");
        assert!(out.flags.iter().all(|f| f.clean()));
        assert_eq!(out.enf.frame_period(), 1.0);
    }

    #[test]
    fn large_frequency_steps_smear_into_neighboring_frames() {
        // A 40 mHz jump between frames is far outside grid behavior; the
        // narrow filter legitimately smears it across the boundary. Keep
        // this documented: per-frame accuracy claims hold for grid-like
        // wander, not arbitrary staircases.
        let truth = [59.98, 60.02, 60.0, 59.99, 60.01];
        let rec = recording_of(&truth, 1000.0, f64::INFINITY, 0);
        let out = extract_enf(&rec, &ExtractionConfig::default()).unwrap();
        for (est, t) in out.enf.values().iter().zip(truth) {
            assert!((est - t).abs() < 8e-3, "estimated {est} for {t}");
        }
    }

    #[test]
    fn subspace_and_spectral_paths_agree_on_clean_input() {
        let truth = grid_like_series(8, 9);
        let rec = recording_of(&truth, 1000.0, f64::INFINITY, 1);
        let sub = extract_enf(&rec, &ExtractionConfig::default()).unwrap();
        let spec = extract_enf(
            &rec,
            &ExtractionConfig { method: EstimatorMethod::Spectral, ..Default::default() },
        )
        .unwrap();
        for (a, b) in sub.enf.values().iter().zip(spec.enf.values()) {
            assert!((a - b).abs() < 2e-3, "methods disagree: {a} vs {b}");
        }
    }

    #[test]
    fn tracks_a_constant_tone_through_noise_at_30_db() {
        let truth = [60.017; 6];
        let rec = recording_of(&truth, 1000.0, 30.0, 5);
        let out = extract_enf(&rec, &ExtractionConfig::default()).unwrap();
        for (est, t) in out.enf.values().iter().zip(truth) {
            assert!((est - t).abs() < 1e-3, "estimated {est} for {t}");
        }
    }

    #[test]
    fn silent_recordings_report_the_earliest_degenerate_frame() {
        let rec = RawRecording::new(vec![0.0; 3000], 1000.0, 0.0).unwrap();
        match extract_enf(&rec, &ExtractionConfig::default()) {
            Err(Error::DegenerateFrame { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected a degenerate-frame error, got {other:?}"),
        }
    }

    #[test]
    fn start_time_propagates_from_the_recording() {
        let enf = EnfSignal::new(vec![60.0, 60.0], 1.0, 0.0, 60.0).unwrap();
        let mut rec = synthesize_waveform(&enf, 1000.0, 1.0, f64::INFINITY, 3).unwrap();
        rec = RawRecording::new(rec.samples().to_vec(), 1000.0, 17.5).unwrap();
        let out = extract_enf(&rec, &ExtractionConfig::default()).unwrap();
        assert_eq!(out.enf.start_time(), 17.5);
    }

    #[test]
    fn config_validation_rejects_wide_bands_and_bad_orders() {
        let cfg = ExtractionConfig { band_halfwidth: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExtractionConfig { subspace_order: 64, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExtractionConfig { nominal: 55.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}


