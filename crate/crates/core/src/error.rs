//! Crate-wide error type. The CLI maps these onto exit codes, so variants
//! distinguish "your input file is malformed" from "your parameters are
//! inconsistent" from "the data cannot support this computation".

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters are out of range or mutually inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input file could not be parsed.
    #[error("input format: {0}")]
    Format(String),

    /// The data is too short (or otherwise too thin) for the requested
    /// computation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A frame handed to a frequency estimator carries no usable signal.
    #[error("frame {index} is degenerate: {reason}")]
    DegenerateFrame { index: usize, reason: String },

    /// A correlation window has zero energy on one side; the coefficient is
    /// undefined there and we refuse to fabricate one.
    #[error("zero-energy window: correlation undefined")]
    ZeroEnergyWindow,

    /// Like [`Error::ZeroEnergyWindow`] but annotated with the pair and
    /// segment that triggered it.
    #[error("segment starting at frame {start} is degenerate for pair ({a}, {b})")]
    DegenerateSegment { start: usize, a: String, b: String },

    /// Distance interpolation needs two reference pairs with different
    /// correlations; equal correlations give an undefined slope.
    #[error("distance interpolation is degenerate: zero correlation spread between references")]
    DegenerateSlope,

    /// Two anchors share a position, so their bisector is undefined.
    #[error("anchors {a} and {b} are coincident")]
    CoincidentAnchors { a: String, b: String },

    /// A point query landed outside the raster domain.
    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    /// Set operations on regions require the exact same raster.
    #[error("domains differ; regions can only be combined over the same raster")]
    DomainMismatch,

    /// A correlation value fell outside every bin of a quantization scheme.
    #[error("correlation {rho} falls in no quantization bin")]
    SchemeCoverage { rho: f64 },

    /// Fitting a quantization scheme requires at least one sample per bin.
    #[error("quantization bin ({lo}, {hi}] received no samples")]
    EmptyBin { lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("WAV: {0}")]
    Wav(#[from] hound::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
