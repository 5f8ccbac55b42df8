//! Shared data types: recordings, frequency series, raster domains, feasible
//! regions, correlation tables, and correlation-to-distance quantization
//! schemes.
//!
//! Everything here is plain data with validated constructors. Types that are
//! serialized re-validate on deserialization, so a hand-edited JSON file
//! cannot smuggle in a state the constructors would reject.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar position in miles. The toolkit works in a local projected frame,
/// not in geographic coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Point) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

/// A mono time-domain recording at a fixed sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecordingRepr", into = "RawRecordingRepr")]
pub struct RawRecording {
    samples: Vec<f64>,
    sample_rate: f64,
    start_time: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRecordingRepr {
    samples: Vec<f64>,
    sample_rate: f64,
    start_time: f64,
}

impl RawRecording {
    pub fn new(samples: Vec<f64>, sample_rate: f64, start_time: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Config(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::Config("start time must be finite".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Format("recording contains NaN or Inf samples".into()));
        }
        Ok(Self { samples, sample_rate, start_time })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

impl TryFrom<RawRecordingRepr> for RawRecording {
    type Error = Error;
    fn try_from(r: RawRecordingRepr) -> Result<Self> {
        Self::new(r.samples, r.sample_rate, r.start_time)
    }
}

impl From<RawRecording> for RawRecordingRepr {
    fn from(r: RawRecording) -> Self {
        Self { samples: r.samples, sample_rate: r.sample_rate, start_time: r.start_time }
    }
}

/// Per-frame instantaneous grid frequency, one value per frame.
///
/// Values are constrained to ±1 Hz around the nominal frequency: anything
/// outside that band is not a plausible grid frequency and is rejected at
/// construction rather than carried along silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnfSignalRepr", into = "EnfSignalRepr")]
pub struct EnfSignal {
    values: Vec<f64>,
    frame_period: f64,
    start_time: f64,
    nominal: f64,
}

#[derive(Serialize, Deserialize)]
struct EnfSignalRepr {
    values: Vec<f64>,
    frame_period: f64,
    start_time: f64,
    nominal: f64,
}

impl EnfSignal {
    pub fn new(values: Vec<f64>, frame_period: f64, start_time: f64, nominal: f64) -> Result<Self> {
        if nominal != 50.0 && nominal != 60.0 {
            return Err(Error::Config(format!(
                "nominal frequency must be 50 or 60 Hz, got {nominal}"
            )));
        }
        if !(frame_period.is_finite() && frame_period > 0.0) {
            return Err(Error::Config(format!(
                "frame period must be positive, got {frame_period}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::Config("start time must be finite".into()));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || (**v - nominal).abs() > 1.0)
        {
            return Err(Error::Format(format!(
                "frequency value {v} outside [{}, {}]",
                nominal - 1.0,
                nominal + 1.0
            )));
        }
        Ok(Self { values, frame_period, start_time, nominal })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn nominal(&self) -> f64 {
        self.nominal
    }

    /// Timestamp of frame `n` (frame start).
    pub fn frame_time(&self, n: usize) -> f64 {
        self.start_time + n as f64 * self.frame_period
    }
}

impl TryFrom<EnfSignalRepr> for EnfSignal {
    type Error = Error;
    fn try_from(r: EnfSignalRepr) -> Result<Self> {
        Self::new(r.values, r.frame_period, r.start_time, r.nominal)
    }
}

impl From<EnfSignal> for EnfSignalRepr {
    fn from(s: EnfSignal) -> Self {
        Self { values: s.values, frame_period: s.frame_period, start_time: s.start_time, nominal: s.nominal }
    }
}

/// High-pass residual of a frequency series: what remains after the slow
/// shared wander is filtered out. This is the location-bearing component.
///
/// The residual is mean-free up to sampling error; that property is enforced
/// statistically in the test suite (short outputs can legitimately hold a
/// constant nonzero value, so a hard constructor check would misfire).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DetailSignalRepr", into = "DetailSignalRepr")]
pub struct DetailSignal {
    values: Vec<f64>,
    frame_period: f64,
    origin_filter_order: usize,
}

#[derive(Serialize, Deserialize)]
struct DetailSignalRepr {
    values: Vec<f64>,
    frame_period: f64,
    origin_filter_order: usize,
}

impl DetailSignal {
    pub fn new(values: Vec<f64>, frame_period: f64, origin_filter_order: usize) -> Result<Self> {
        if !(frame_period.is_finite() && frame_period > 0.0) {
            return Err(Error::Config(format!(
                "frame period must be positive, got {frame_period}"
            )));
        }
        if origin_filter_order < 3 || origin_filter_order % 2 == 0 {
            return Err(Error::Config(format!(
                "filter order must be odd and >= 3, got {origin_filter_order}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("detail signal contains NaN or Inf".into()));
        }
        Ok(Self { values, frame_period, origin_filter_order })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn origin_filter_order(&self) -> usize {
        self.origin_filter_order
    }
}

impl TryFrom<DetailSignalRepr> for DetailSignal {
    type Error = Error;
    fn try_from(r: DetailSignalRepr) -> Result<Self> {
        Self::new(r.values, r.frame_period, r.origin_filter_order)
    }
}

impl From<DetailSignal> for DetailSignalRepr {
    fn from(s: DetailSignal) -> Self {
        Self { values: s.values, frame_period: s.frame_period, origin_filter_order: s.origin_filter_order }
    }
}

/// A reference site: a named position with the frequency series recorded
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSite {
    pub name: String,
    pub position: Point,
    pub enf: EnfSignal,
}

impl AnchorSite {
    pub fn new(name: impl Into<String>, position: Point, enf: EnfSignal) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Config("anchor name must be non-empty".into()));
        }
        if !(position.x.is_finite() && position.y.is_finite()) {
            return Err(Error::Config(format!("anchor {name} has a non-finite position")));
        }
        Ok(Self { name, position, enf })
    }
}

/// Axis-aligned raster over a rectangular search area.
///
/// The requested max bounds are snapped *up* to the next multiple of
/// `cell_size`, so cells always tile the domain exactly. That makes the area
/// fraction of a region exactly `true_cells / total_cells` with no partial
/// cells at the edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDomainRepr", into = "GridDomainRepr")]
pub struct GridDomain {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    cell_size: f64,
    nx: usize,
    ny: usize,
}

#[derive(Serialize, Deserialize)]
struct GridDomainRepr {
    x_range: (f64, f64),
    y_range: (f64, f64),
    cell_size: f64,
}

/// Default raster resolution: the longer domain side divided by this many
/// cells.
pub const DEFAULT_CELLS_PER_SIDE: usize = 200;

/// Default margin when deriving a domain from an anchor bounding box: each
/// side is expanded by this fraction of its extent.
pub const DEFAULT_DOMAIN_MARGIN: f64 = 0.25;

impl GridDomain {
    /// Build a raster covering at least `x_range` × `y_range` with square
    /// cells of side `cell_size` (miles). Needs at least 2 cells per axis.
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), cell_size: f64) -> Result<Self> {
        let (x_min, x_max_req) = x_range;
        let (y_min, y_max_req) = y_range;
        for v in [x_min, x_max_req, y_min, y_max_req, cell_size] {
            if !v.is_finite() {
                return Err(Error::Config("domain bounds and cell size must be finite".into()));
            }
        }
        if !(cell_size > 0.0) {
            return Err(Error::Config(format!("cell size must be positive, got {cell_size}")));
        }
        if !(x_max_req > x_min) || !(y_max_req > y_min) {
            return Err(Error::Config("domain ranges must have positive extent".into()));
        }
        // Snap up: tolerate ~1e-9 of float noise so an already-snapped bound
        // round-trips to the same cell count.
        let cells = |lo: f64, hi: f64| ((hi - lo) / cell_size - 1e-9).ceil().max(1.0) as usize;
        let nx = cells(x_min, x_max_req);
        let ny = cells(y_min, y_max_req);
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!(
                "domain must span at least 2 cells per axis, got {nx} x {ny}"
            )));
        }
        Ok(Self {
            x_min,
            x_max: x_min + nx as f64 * cell_size,
            y_min,
            y_max: y_min + ny as f64 * cell_size,
            cell_size,
            nx,
            ny,
        })
    }

    /// Derive a search domain from anchor positions: their bounding box
    /// expanded by `margin` of each side's extent (a degenerate side borrows
    /// the other side's extent), rasterized at `cell_size` when given,
    /// otherwise at the longer side / [`DEFAULT_CELLS_PER_SIDE`].
    pub fn from_anchor_positions(
        positions: &[Point],
        margin: f64,
        cell_size: Option<f64>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Config("cannot derive a domain from zero anchors".into()));
        }
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(Error::Config(format!("domain margin must be >= 0, got {margin}")));
        }
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for p in positions {
            x_min = x_min.min(p.x);
            x_max = x_max.max(p.x);
            y_min = y_min.min(p.y);
            y_max = y_max.max(p.y);
        }
        let (w, h) = (x_max - x_min, y_max - y_min);
        if w == 0.0 && h == 0.0 {
            return Err(Error::Config(
                "cannot derive a domain from a single distinct anchor position".into(),
            ));
        }
        let pad_x = margin * if w > 0.0 { w } else { h };
        let pad_y = margin * if h > 0.0 { h } else { w };
        let x_range = (x_min - pad_x, x_max + pad_x);
        let y_range = (y_min - pad_y, y_max + pad_y);
        let cell = cell_size.unwrap_or_else(|| {
            let longer = (x_range.1 - x_range.0).max(y_range.1 - y_range.0);
            longer / DEFAULT_CELLS_PER_SIDE as f64
        });
        Self::new(x_range, y_range, cell)
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    /// Center of the cell at column `ix`, row `iy`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> Point {
        debug_assert!(ix < self.nx && iy < self.ny);
        Point::new(
            self.x_min + (ix as f64 + 0.5) * self.cell_size,
            self.y_min + (iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Map a point to its (column, row) cell. A point on a shared cell edge
    /// belongs to the cell with the smaller row-major index (left/below);
    /// points on the outer domain boundary belong to the adjacent interior
    /// cell.
    pub fn cell_of(&self, p: Point) -> Result<(usize, usize)> {
        if !self.contains_point(p) {
            return Err(Error::OutOfDomain { x: p.x, y: p.y });
        }
        let axis = |v: f64, lo: f64, n: usize| -> usize {
            let t = (v - lo) / self.cell_size;
            // ceil - 1 sends exact edges to the lower cell; clamp handles the
            // two outer boundaries.
            let i = t.ceil() - 1.0;
            (i.max(0.0) as usize).min(n - 1)
        };
        Ok((axis(p.x, self.x_min, self.nx), axis(p.y, self.y_min, self.ny)))
    }

    /// Row-major index of a cell: `row * nx + column`.
    pub fn cell_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }
}

impl TryFrom<GridDomainRepr> for GridDomain {
    type Error = Error;
    fn try_from(r: GridDomainRepr) -> Result<Self> {
        Self::new(r.x_range, r.y_range, r.cell_size)
    }
}

impl From<GridDomain> for GridDomainRepr {
    fn from(d: GridDomain) -> Self {
        Self { x_range: (d.x_min, d.x_max), y_range: (d.y_min, d.y_max), cell_size: d.cell_size }
    }
}

/// Subset of a raster domain: one boolean per cell, row-major from the
/// bottom-left cell. Serialized as a run-length-encoded bit string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeasibleRegionRepr", into = "FeasibleRegionRepr")]
pub struct FeasibleRegion {
    domain: GridDomain,
    mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct FeasibleRegionRepr {
    domain: GridDomain,
    mask_rle: String,
}

impl FeasibleRegion {
    pub fn from_mask(domain: GridDomain, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != domain.cell_count() {
            return Err(Error::Config(format!(
                "mask has {} cells but the domain rasterizes to {}",
                mask.len(),
                domain.cell_count()
            )));
        }
        Ok(Self { domain, mask })
    }

    pub fn full(domain: GridDomain) -> Self {
        let mask = vec![true; domain.cell_count()];
        Self { domain, mask }
    }

    pub fn empty(domain: GridDomain) -> Self {
        let mask = vec![false; domain.cell_count()];
        Self { domain, mask }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count_true(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    /// Feasible area over domain area. Cells tile the domain exactly, so
    /// this equals (true cells × cell area) / domain area.
    pub fn area_fraction(&self) -> f64 {
        self.count_true() as f64 / self.mask.len() as f64
    }

    /// Does the region contain `p`? Errors when `p` is outside the domain.
    pub fn contains(&self, p: Point) -> Result<bool> {
        let (ix, iy) = self.domain.cell_of(p)?;
        Ok(self.mask[self.domain.cell_index(ix, iy)])
    }

    /// Cell-wise AND. Both regions must share the exact same raster.
    pub fn intersect(&self, other: &FeasibleRegion) -> Result<FeasibleRegion> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(a, b)| *a && *b)
            .collect();
        Ok(FeasibleRegion { domain: self.domain.clone(), mask })
    }

    /// True when `other` contains every cell of `self`.
    pub fn is_subset_of(&self, other: &FeasibleRegion) -> bool {
        self.domain == other.domain
            && self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }
}

impl TryFrom<FeasibleRegionRepr> for FeasibleRegion {
    type Error = Error;
    fn try_from(r: FeasibleRegionRepr) -> Result<Self> {
        let mask = rle::decode(&r.mask_rle, r.domain.cell_count())?;
        Self::from_mask(r.domain, mask)
    }
}

impl From<FeasibleRegion> for FeasibleRegionRepr {
    fn from(region: FeasibleRegion) -> Self {
        Self { domain: region.domain, mask_rle: rle::encode(&region.mask) }
    }
}

/// Run-length encoding of bit masks: comma-separated `<count>x<bit>` tokens,
/// e.g. `"5x0,3x1"`. Compact for the blocky masks that half-plane and
/// annulus constraints produce.
pub(crate) mod rle {
    use crate::error::{Error, Result};

    pub fn encode(mask: &[bool]) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < mask.len() {
            let bit = mask[i];
            let mut j = i + 1;
            while j < mask.len() && mask[j] == bit {
                j += 1;
            }
            if !out.is_empty() {
                out.push(',');
            }
            out.push_str(&format!("{}x{}", j - i, u8::from(bit)));
            i = j;
        }
        out
    }

    pub fn decode(s: &str, expected_len: usize) -> Result<Vec<bool>> {
        let mut out = Vec::with_capacity(expected_len);
        if !s.is_empty() {
            for token in s.split(',') {
                let (count, bit) = token
                    .split_once('x')
                    .ok_or_else(|| Error::Format(format!("bad RLE token {token:?}")))?;
                let count: usize = count
                    .parse()
                    .map_err(|_| Error::Format(format!("bad RLE count {count:?}")))?;
                let bit = match bit {
                    "0" => false,
                    "1" => true,
                    other => return Err(Error::Format(format!("bad RLE bit {other:?}"))),
                };
                out.extend(std::iter::repeat_n(bit, count));
            }
        }
        if out.len() != expected_len {
            return Err(Error::Format(format!(
                "RLE mask has {} cells, expected {expected_len}",
                out.len()
            )));
        }
        Ok(out)
    }
}

/// Symmetric matrix of pairwise correlation coefficients between named
/// sites, unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationTableRepr", into = "CorrelationTableRepr")]
pub struct CorrelationTable {
    site_names: Vec<String>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CorrelationTableRepr {
    site_names: Vec<String>,
    values: Vec<f64>,
}

impl CorrelationTable {
    /// `values` is row-major K×K and must be symmetric with an exact unit
    /// diagonal and entries in [-1, 1].
    pub fn new(site_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let k = site_names.len();
        if k == 0 {
            return Err(Error::Config("correlation table needs at least one site".into()));
        }
        for (i, a) in site_names.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::Config("site names must be non-empty".into()));
            }
            if site_names[..i].contains(a) {
                return Err(Error::Config(format!("duplicate site name {a:?}")));
            }
        }
        if values.len() != k * k {
            return Err(Error::Config(format!(
                "correlation table for {k} sites needs {} values, got {}",
                k * k,
                values.len()
            )));
        }
        for i in 0..k {
            if values[i * k + i] != 1.0 {
                return Err(Error::Config(format!(
                    "diagonal entry for {} must be exactly 1.0",
                    site_names[i]
                )));
            }
            for j in 0..i {
                let (a, b) = (values[i * k + j], values[j * k + i]);
                if a != b {
                    return Err(Error::Config(format!(
                        "correlation table is not symmetric at ({}, {})",
                        site_names[i], site_names[j]
                    )));
                }
                if !a.is_finite() || a.abs() > 1.0 {
                    return Err(Error::Config(format!(
                        "correlation {a} at ({}, {}) outside [-1, 1]",
                        site_names[i], site_names[j]
                    )));
                }
            }
        }
        Ok(Self { site_names, values })
    }

    pub fn len(&self) -> usize {
        self.site_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_names.is_empty()
    }

    pub fn site_names(&self) -> &[String] {
        &self.site_names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.site_names.iter().position(|n| n == name)
    }

    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.site_names.len() + j]
    }

    pub fn rho_by_name(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.rho(self.index_of(a)?, self.index_of(b)?))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<CorrelationTableRepr> for CorrelationTable {
    type Error = Error;
    fn try_from(r: CorrelationTableRepr) -> Result<Self> {
        Self::new(r.site_names, r.values)
    }
}

impl From<CorrelationTable> for CorrelationTableRepr {
    fn from(t: CorrelationTable) -> Self {
        Self { site_names: t.site_names, values: t.values }
    }
}

/// One bin of a quantization scheme: correlations in `(rho_min, rho_max]`
/// map to distances in `[d_min, d_max)` miles (`d_max = None` means
/// unbounded above).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationBin {
    pub rho_min: f64,
    pub rho_max: f64,
    pub d_min: f64,
    pub d_max: Option<f64>,
}

/// Piecewise-constant map from correlation to a distance interval. Bins
/// partition the correlation range (-1, 1]; higher correlation means
/// smaller distance, so distance intervals run inversely to the bins and
/// must not overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantizationSchemeRepr", into = "QuantizationSchemeRepr")]
pub struct QuantizationScheme {
    bins: Vec<QuantizationBin>,
}

#[derive(Serialize, Deserialize)]
struct QuantizationSchemeRepr {
    bins: Vec<QuantizationBin>,
}

impl QuantizationScheme {
    /// `bins` in ascending correlation order, jointly covering (-1, 1].
    pub fn new(bins: Vec<QuantizationBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::Config("quantization scheme needs at least one bin".into()));
        }
        if bins[0].rho_min != -1.0 || bins[bins.len() - 1].rho_max != 1.0 {
            return Err(Error::Config(
                "quantization bins must jointly cover the correlation range (-1, 1]".into(),
            ));
        }
        for (i, b) in bins.iter().enumerate() {
            if !(b.rho_min < b.rho_max) {
                return Err(Error::Config(format!(
                    "bin {i} has an empty correlation interval ({}, {}]",
                    b.rho_min, b.rho_max
                )));
            }
            if i > 0 && bins[i - 1].rho_max != b.rho_min {
                return Err(Error::Config(format!(
                    "bins {} and {i} do not tile the correlation range",
                    i - 1
                )));
            }
            if !(b.d_min.is_finite() && b.d_min >= 0.0) {
                return Err(Error::Config(format!("bin {i} has invalid distance lower bound")));
            }
            if let Some(hi) = b.d_max {
                if !(hi.is_finite() && hi > b.d_min) {
                    return Err(Error::Config(format!(
                        "bin {i} has an empty distance interval [{}, {hi})",
                        b.d_min
                    )));
                }
            } else if i != 0 {
                return Err(Error::Config(
                    "only the lowest-correlation bin may be unbounded in distance".into(),
                ));
            }
            // Higher correlation (later bin) must mean strictly nearer:
            // this bin's distances must all sit below the previous bin's.
            if i > 0 {
                match b.d_max {
                    Some(hi) if hi <= bins[i - 1].d_min => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "distance intervals of bins {} and {i} overlap or are not \
                             inversely ordered",
                            i - 1
                        )));
                    }
                }
            }
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[QuantizationBin] {
        &self.bins
    }

    /// The bin whose correlation interval contains `rho`, or a coverage
    /// error (only `rho == -1` exactly can miss, since bins tile (-1, 1]).
    pub fn bin_for(&self, rho: f64) -> Result<&QuantizationBin> {
        self.bins
            .iter()
            .find(|b| rho > b.rho_min && rho <= b.rho_max)
            .ok_or(Error::SchemeCoverage { rho })
    }

    /// Built-in reference scheme for hour-scale 60 Hz recordings across an
    /// eastern-interconnect-sized grid: four bins from "very similar,
    /// within a couple hundred miles" down to "barely correlated, 900+
    /// miles", with the far bin unbounded.
    pub fn builtin_reference() -> Self {
        Self::new(vec![
            QuantizationBin { rho_min: -1.0, rho_max: 0.55, d_min: 900.0, d_max: None },
            QuantizationBin { rho_min: 0.55, rho_max: 0.83, d_min: 450.0, d_max: Some(900.0) },
            QuantizationBin { rho_min: 0.83, rho_max: 0.9, d_min: 220.0, d_max: Some(450.0) },
            QuantizationBin { rho_min: 0.9, rho_max: 1.0, d_min: 100.0, d_max: Some(220.0) },
        ])
        .expect("built-in scheme is valid")
    }
}

impl TryFrom<QuantizationSchemeRepr> for QuantizationScheme {
    type Error = Error;
    fn try_from(r: QuantizationSchemeRepr) -> Result<Self> {
        Self::new(r.bins)
    }
}

impl From<QuantizationScheme> for QuantizationSchemeRepr {
    fn from(s: QuantizationScheme) -> Self {
        Self { bins: s.bins }
    }
}
