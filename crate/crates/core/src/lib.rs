//! Grid-frequency forensics toolkit: extract the instantaneous power-grid
//! frequency from recordings, distill the location-bearing high-pass
//! residual, correlate residuals between sites, and intersect
//! correlation-derived constraints into a coarse location region. A
//! synthetic grid simulator provides ground truth for evaluation.

pub mod error;
pub mod extract;
pub mod geolocate;
pub mod gridsim;
pub mod io;
pub mod signature;
pub mod types;

pub(crate) mod par;

pub use error::{Error, Result};
