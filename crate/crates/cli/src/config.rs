//! Pipeline configuration: defaults, the named preset, TOML/JSON config
//! files, and command-line overrides, applied in that order (flags win).

use std::path::{Path, PathBuf};

use enfgrid_core::extract::{EstimatorMethod, ExtractionConfig};
use enfgrid_core::types::{GridDomain, Point, DEFAULT_DOMAIN_MARGIN};
use enfgrid_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Raster bounds for localization. Explicit bounds need a cell size;
/// otherwise the raster is derived from the anchor bounding box.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSpec {
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    /// Cell edge in miles. When absent the longer domain side is split
    /// into a default number of cells.
    pub cell_size: Option<f64>,
    /// Fractional padding around the anchor bounding box; ignored when
    /// explicit bounds are given.
    pub margin: Option<f64>,
}

impl DomainSpec {
    pub fn resolve(&self, anchor_positions: &[Point]) -> Result<GridDomain> {
        match (self.x_range, self.y_range) {
            (Some(x), Some(y)) => {
                let cell = self.cell_size.ok_or_else(|| {
                    Error::Config("explicit domain bounds need cell_size".into())
                })?;
                GridDomain::new(x, y, cell)
            }
            (None, None) => GridDomain::from_anchor_positions(
                anchor_positions,
                self.margin.unwrap_or(DEFAULT_DOMAIN_MARGIN),
                self.cell_size,
            ),
            _ => Err(Error::Config(
                "domain needs both x_range and y_range, or neither".into(),
            )),
        }
    }
}

/// Everything a pipeline run needs beyond its input files. Loadable from
/// a TOML or JSON file; any field may be omitted and defaults apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub extraction: ExtractionConfig,
    /// Moving-average order M of the location-signature high-pass filter
    /// (odd, >= 3).
    pub filter_order: usize,
    /// Correlation window length N in frames.
    pub segment_frames: usize,
    /// Half-plane tolerances. Single-query locate and the SNR sweep use
    /// the first entry; leave-one-out and the epsilon sweep use the list.
    pub epsilon: Vec<f64>,
    pub domain: DomainSpec,
    /// Anchor index: JSON list of {name, x_miles, y_miles, enf_csv}.
    pub anchors: Option<PathBuf>,
    /// "reference" for the built-in scheme, "fit" to fit quantile bins
    /// from the anchors, or a path to a scheme JSON file.
    pub scheme: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            extraction: ExtractionConfig::default(),
            filter_order: 3,
            segment_frames: 600,
            epsilon: vec![0.02],
            domain: DomainSpec::default(),
            anchors: None,
            scheme: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        if self.filter_order < 3 || self.filter_order % 2 == 0 {
            return Err(Error::Config(format!(
                "filter_order must be odd and >= 3, got {}",
                self.filter_order
            )));
        }
        if self.segment_frames < 2 {
            return Err(Error::Config(format!(
                "segment_frames must be >= 2, got {}",
                self.segment_frames
            )));
        }
        if self.epsilon.is_empty() {
            return Err(Error::Config("epsilon list must not be empty".into()));
        }
        for &e in &self.epsilon {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::Config(format!("epsilon must be >= 0, got {e}")));
            }
        }
        Ok(())
    }
}

/// The `five-city` preset: the continental five-site layout with the
/// defaults used throughout the test suite — M = 3, one-second frames,
/// ten-minute segments, and the built-in reference scheme. `simulate`
/// additionally takes its site geometry from this preset.
pub fn apply_five_city(cfg: &mut PipelineConfig) {
    cfg.filter_order = 3;
    cfg.segment_frames = 600;
    cfg.extraction.nominal = 60.0;
    cfg.extraction.frame_seconds = 1.0;
    cfg.scheme = Some("reference".into());
}

/// Command-line overrides; `None` means "keep the configured value".
#[derive(Debug, Default)]
pub struct Overrides {
    pub filter_order: Option<usize>,
    pub segment_frames: Option<usize>,
    pub epsilon: Option<Vec<f64>>,
    pub anchors: Option<PathBuf>,
    pub scheme: Option<String>,
    pub cell_size: Option<f64>,
    pub margin: Option<f64>,
    pub estimator: Option<EstimatorMethod>,
    pub frame_seconds: Option<f64>,
    pub nominal: Option<f64>,
}

/// Parse a config file by extension. Parse failures are input-format
/// errors: the file exists but cannot be understood.
pub fn load_file(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display()))),
        Some("json") => serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display()))),
        _ => Err(Error::Format(format!(
            "{}: config files must end in .toml or .json",
            path.display()
        ))),
    }
}

/// Build the effective config: defaults, then the config file, then the
/// preset bundle, then individual flag overrides.
pub fn assemble(
    five_city: bool,
    config_path: Option<&Path>,
    ov: Overrides,
) -> Result<PipelineConfig> {
    let mut cfg = match config_path {
        Some(p) => load_file(p)?,
        None => PipelineConfig::default(),
    };
    if five_city {
        apply_five_city(&mut cfg);
    }
    if let Some(m) = ov.filter_order {
        cfg.filter_order = m;
    }
    if let Some(n) = ov.segment_frames {
        cfg.segment_frames = n;
    }
    if let Some(e) = ov.epsilon {
        cfg.epsilon = e;
    }
    if let Some(a) = ov.anchors {
        cfg.anchors = Some(a);
    }
    if let Some(s) = ov.scheme {
        cfg.scheme = Some(s);
    }
    if let Some(c) = ov.cell_size {
        cfg.domain.cell_size = Some(c);
    }
    if let Some(m) = ov.margin {
        cfg.domain.margin = Some(m);
    }
    if let Some(m) = ov.estimator {
        cfg.extraction.method = m;
    }
    if let Some(f) = ov.frame_seconds {
        cfg.extraction.frame_seconds = f;
    }
    if let Some(n) = ov.nominal {
        cfg.extraction.nominal = n;
    }
    cfg.validate()?;
    Ok(cfg)
}
