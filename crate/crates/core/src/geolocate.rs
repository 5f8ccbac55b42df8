//! Coarse geolocation from correlation signatures.
//!
//! Correlation between high-pass residuals falls off with distance, which
//! supports two complementary constraint families over a raster search
//! domain:
//!
//! * **Half-plane**: for an anchor pair, whichever anchor correlates better
//!   with the query is the nearer one, so the query must lie on that
//!   anchor's side of the pair's perpendicular bisector. A tolerance
//!   `epsilon` skips pairs whose correlation difference is too small to
//!   trust.
//! * **Annulus**: a quantization scheme maps a query-to-anchor correlation
//!   to a distance interval, so the query must lie in a ring around that
//!   anchor.
//!
//! Constraints are intersected cell-wise; the result is a feasible region,
//! not a point estimate. There is also a linear interpolator that turns two
//! reference (correlation, distance) pairs into a distance estimate for a
//! third correlation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::types::{
    AnchorSite, FeasibleRegion, GridDomain, Point, QuantizationBin, QuantizationScheme,
};

/// A distance obtained by linear interpolation on the correlation axis.
/// `plausible` is false when the interpolation extrapolated to a negative
/// distance; the value is kept as-is so callers can see how far off it was.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub miles: f64,
    pub plausible: bool,
}

/// Interpolate/extrapolate a distance for correlation `rho_13` given two
/// reference pairs `(rho_12, d_12)` and `(rho_23, d_23)`:
///
/// `d_13 = d_12 + (d_12 - d_23) / (rho_12 - rho_23) * (rho_13 - rho_12)`
///
/// Equal reference correlations leave the slope undefined and error out.
pub fn estimate_distance_linear(
    rho_12: f64,
    d_12: f64,
    rho_23: f64,
    d_23: f64,
    rho_13: f64,
) -> Result<DistanceEstimate> {
    for (name, rho) in [("rho_12", rho_12), ("rho_23", rho_23), ("rho_13", rho_13)] {
        if !rho.is_finite() || rho.abs() > 1.0 {
            return Err(Error::Config(format!("{name} = {rho} outside [-1, 1]")));
        }
    }
    for (name, d) in [("d_12", d_12), ("d_23", d_23)] {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Config(format!("reference distance {name} = {d} must be >= 0")));
        }
    }
    if rho_12 == rho_23 {
        return Err(Error::DegenerateSlope);
    }
    let miles = d_12 + (d_12 - d_23) / (rho_12 - rho_23) * (rho_13 - rho_12);
    Ok(DistanceEstimate { miles, plausible: miles >= 0.0 })
}

/// Mean absolute error over a batch of (estimated, true) distances.
pub fn mean_distance_error(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no distance pairs to average".into()));
    }
    Ok(pairs.iter().map(|(e, t)| (e - t).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Which constraint family produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocateMethod {
    Halfplane,
    Quantization,
    Combined,
}

/// Inputs to a localization: the anchor sites, the query's correlation
/// against each anchor (keyed by anchor name), the half-plane tolerance,
/// and the raster to search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationQuery {
    pub anchors: Vec<AnchorSite>,
    pub rho_query: BTreeMap<String, f64>,
    pub epsilon: f64,
    pub domain: GridDomain,
}

impl LocalizationQuery {
    /// Shared validation: unique anchor names, a correlation for every
    /// anchor (and none left over), correlations in [-1, 1], epsilon >= 0.
    fn validate(&self, min_anchors: usize, what: &str) -> Result<()> {
        if self.anchors.len() < min_anchors {
            return Err(Error::Config(format!(
                "{what} needs at least {min_anchors} anchors, got {}",
                self.anchors.len()
            )));
        }
        for (i, a) in self.anchors.iter().enumerate() {
            if self.anchors[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Config(format!("duplicate anchor name {:?}", a.name)));
            }
        }
        if self.rho_query.len() != self.anchors.len() {
            return Err(Error::Config(format!(
                "rho_query has {} entries for {} anchors",
                self.rho_query.len(),
                self.anchors.len()
            )));
        }
        for a in &self.anchors {
            match self.rho_query.get(&a.name) {
                None => {
                    return Err(Error::Config(format!(
                        "rho_query is missing anchor {:?}",
                        a.name
                    )))
                }
                Some(r) if !r.is_finite() || r.abs() > 1.0 => {
                    return Err(Error::Config(format!(
                        "correlation {r} for anchor {:?} outside [-1, 1]",
                        a.name
                    )))
                }
                _ => {}
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }

    fn rho(&self, name: &str) -> f64 {
        self.rho_query[name]
    }
}

/// A feasible region plus the constraint bookkeeping that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub method: LocateMethod,
    pub region: FeasibleRegion,
    pub constraints_applied: usize,
    pub constraints_skipped: usize,
}

/// Rasterize one half-plane constraint for the anchor pair `(p_i, p_j)`
/// given `delta_rho = rho(j, query) - rho(i, query)`:
///
/// * `delta_rho >= epsilon`: the query correlates better with `j`, keep
///   cells strictly farther from `i` than from `j`;
/// * `delta_rho <= -epsilon`: keep cells at most as far from `i` as from
///   `j`;
/// * `|delta_rho| < epsilon`: too close to call, constraint skipped
///   (`None`).
///
/// With `epsilon = 0` nothing is skipped; an exact tie `delta_rho = 0`
/// falls in the first branch. Membership is evaluated at cell centers with
/// squared distances, so no rounding of square roots is involved.
pub fn halfplane_region(
    domain: &GridDomain,
    p_i: Point,
    p_j: Point,
    delta_rho: f64,
    epsilon: f64,
) -> Result<Option<FeasibleRegion>> {
    if !delta_rho.is_finite() {
        return Err(Error::Config("delta_rho must be finite".into()));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if p_i.distance_sq(p_j) == 0.0 {
        return Err(Error::CoincidentAnchors {
            a: format!("({}, {})", p_i.x, p_i.y),
            b: format!("({}, {})", p_j.x, p_j.y),
        });
    }
    if delta_rho.abs() < epsilon {
        return Ok(None);
    }
    let farther_from_i = delta_rho >= epsilon;
    let nx = domain.nx();
    let mut mask = vec![false; domain.cell_count()];
    par::fill_rows(&mut mask, nx, |iy, row| {
        for (ix, cell) in row.iter_mut().enumerate() {
            let c = domain.cell_center(ix, iy);
            let di = c.distance_sq(p_i);
            let dj = c.distance_sq(p_j);
            *cell = if farther_from_i { di > dj } else { di <= dj };
        }
    });
    Ok(Some(FeasibleRegion::from_mask(domain.clone(), mask)?))
}

/// Intersect the half-plane constraints of every unordered anchor pair.
/// At most C(K,2) constraints are applied; pairs within `epsilon` are
/// counted as skipped.
pub fn halfplane_locate(query: &LocalizationQuery) -> Result<LocalizationReport> {
    query.validate(2, "half-plane localization")?;
    let k = query.anchors.len();
    let mut region = FeasibleRegion::full(query.domain.clone());
    let mut applied = 0;
    let mut skipped = 0;
    for i in 0..k {
        for j in i + 1..k {
            let (ai, aj) = (&query.anchors[i], &query.anchors[j]);
            if ai.position.distance_sq(aj.position) == 0.0 {
                return Err(Error::CoincidentAnchors { a: ai.name.clone(), b: aj.name.clone() });
            }
            let delta = query.rho(&aj.name) - query.rho(&ai.name);
            match halfplane_region(&query.domain, ai.position, aj.position, delta, query.epsilon)? {
                Some(half) => {
                    region = region.intersect(&half)?;
                    applied += 1;
                }
                None => skipped += 1,
            }
        }
    }
    debug_assert_eq!(applied + skipped, k * (k - 1) / 2);
    Ok(LocalizationReport {
        method: LocateMethod::Halfplane,
        region,
        constraints_applied: applied,
        constraints_skipped: skipped,
    })
}

/// Rasterize the ring of distances a quantization scheme allows around one
/// anchor for correlation `rho`: cells whose center distance `d` satisfies
/// `d_min <= d < d_max` (no upper bound for the scheme's far bin).
pub fn annulus_region(
    domain: &GridDomain,
    center: Point,
    rho: f64,
    scheme: &QuantizationScheme,
) -> Result<FeasibleRegion> {
    if !rho.is_finite() || rho.abs() > 1.0 {
        return Err(Error::Config(format!("correlation {rho} outside [-1, 1]")));
    }
    let bin = scheme.bin_for(rho)?;
    let lo_sq = bin.d_min * bin.d_min;
    let hi_sq = bin.d_max.map(|d| d * d);
    let nx = domain.nx();
    let mut mask = vec![false; domain.cell_count()];
    par::fill_rows(&mut mask, nx, |iy, row| {
        for (ix, cell) in row.iter_mut().enumerate() {
            let d2 = domain.cell_center(ix, iy).distance_sq(center);
            *cell = d2 >= lo_sq && hi_sq.map_or(true, |hi| d2 < hi);
        }
    });
    FeasibleRegion::from_mask(domain.clone(), mask)
}

/// Intersect one annulus constraint per anchor: exactly K constraints,
/// none skipped. Errors if any correlation falls outside the scheme.
pub fn quantization_locate(
    query: &LocalizationQuery,
    scheme: &QuantizationScheme,
) -> Result<LocalizationReport> {
    query.validate(1, "quantization localization")?;
    let mut region = FeasibleRegion::full(query.domain.clone());
    for a in &query.anchors {
        let ring = annulus_region(&query.domain, a.position, query.rho(&a.name), scheme)?;
        region = region.intersect(&ring)?;
    }
    Ok(LocalizationReport {
        method: LocateMethod::Quantization,
        region,
        constraints_applied: query.anchors.len(),
        constraints_skipped: 0,
    })
}

/// Intersect the half-plane and quantization regions. The result is by
/// construction a subset of both; constraint counts add up.
pub fn combined_locate(
    query: &LocalizationQuery,
    scheme: &QuantizationScheme,
) -> Result<LocalizationReport> {
    let hp = halfplane_locate(query)?;
    let q = quantization_locate(query, scheme)?;
    Ok(LocalizationReport {
        method: LocateMethod::Combined,
        region: hp.region.intersect(&q.region)?,
        constraints_applied: hp.constraints_applied + q.constraints_applied,
        constraints_skipped: hp.constraints_skipped,
    })
}

/// Aggregate localization quality over a batch of (region, true position)
/// outcomes:
///
/// * `p_loc`: fraction of queries whose region contains the truth;
/// * `a_loc`: mean of (region area fraction × hit indicator) — a miss
///   contributes 0, so this rewards regions that are both small and right;
/// * `a_loc_hits`: mean area fraction over hits only (0 when nothing hit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationMetrics {
    pub queries: usize,
    pub hits: usize,
    pub p_loc: f64,
    pub a_loc: f64,
    pub a_loc_hits: f64,
}

/// Compute [`LocalizationMetrics`]. A truth outside the region's domain
/// counts as a miss.
pub fn localization_metrics(outcomes: &[(&FeasibleRegion, Point)]) -> Result<LocalizationMetrics> {
    if outcomes.is_empty() {
        return Err(Error::InsufficientData("no localization outcomes to score".into()));
    }
    let mut hits = 0usize;
    let mut area_sum = 0.0;
    for (region, truth) in outcomes {
        let hit = region.contains(*truth).unwrap_or(false);
        if hit {
            hits += 1;
            area_sum += region.area_fraction();
        }
    }
    let q = outcomes.len();
    Ok(LocalizationMetrics {
        queries: q,
        hits,
        p_loc: hits as f64 / q as f64,
        a_loc: area_sum / q as f64,
        a_loc_hits: if hits > 0 { area_sum / hits as f64 } else { 0.0 },
    })
}

/// Result of [`fit_quantization`]: the scheme plus how many bins had to be
/// clipped to restore monotonicity (0 means the data was already cleanly
/// ordered).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationFit {
    pub scheme: QuantizationScheme,
    pub clipped_bins: usize,
}

/// Fit a quantization scheme from observed `(distance_miles, rho)` samples.
///
/// `bin_edges` are ascending interior correlation thresholds; they carve
/// (-1, 1] into `edges + 1` bins. Each bin's distance interval is
/// `[min, max)` over its samples (a single-sample bin is widened by one ULP
/// so the interval stays non-empty). If sampling noise makes neighboring
/// intervals overlap, the larger-distance bin's lower bound is clipped up
/// to its neighbor's upper bound and the clip is counted.
pub fn fit_quantization(samples: &[(f64, f64)], bin_edges: &[f64]) -> Result<QuantizationFit> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples to fit a scheme from".into()));
    }
    for &(d, rho) in samples {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Config(format!("sample distance {d} must be >= 0")));
        }
        if !rho.is_finite() || rho.abs() > 1.0 {
            return Err(Error::Config(format!("sample correlation {rho} outside [-1, 1]")));
        }
    }
    for (i, e) in bin_edges.iter().enumerate() {
        if !e.is_finite() || *e <= -1.0 || *e >= 1.0 {
            return Err(Error::Config(format!("bin edge {e} outside (-1, 1)")));
        }
        if i > 0 && bin_edges[i - 1] >= *e {
            return Err(Error::Config("bin edges must be strictly ascending".into()));
        }
    }

    // Ascending-rho bin boundaries: (-1, e1], (e1, e2], ..., (ek, 1].
    let mut bounds = Vec::with_capacity(bin_edges.len() + 2);
    bounds.push(-1.0);
    bounds.extend_from_slice(bin_edges);
    bounds.push(1.0);

    let mut bins = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut d_min = f64::INFINITY;
        let mut d_max = f64::NEG_INFINITY;
        let mut count = 0usize;
        for &(d, rho) in samples {
            if rho > lo && rho <= hi {
                d_min = d_min.min(d);
                d_max = d_max.max(d);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyBin { lo, hi });
        }
        if d_max == d_min {
            d_max = d_max.next_up(); // keep [min, max) non-empty
        }
        bins.push(QuantizationBin { rho_min: lo, rho_max: hi, d_min, d_max: Some(d_max) });
    }

    // Monotone repair, walking from the highest-rho (nearest) bin down:
    // each larger-distance bin must start at or above its neighbor's end.
    let mut clipped = 0usize;
    for i in (0..bins.len().saturating_sub(1)).rev() {
        let floor = bins[i + 1].d_max.expect("fitted bins are bounded");
        if bins[i].d_min < floor {
            bins[i].d_min = floor;
            clipped += 1;
            if let Some(hi) = bins[i].d_max {
                if hi <= bins[i].d_min {
                    bins[i].d_max = Some(bins[i].d_min.next_up());
                }
            }
        }
    }

    Ok(QuantizationFit { scheme: QuantizationScheme::new(bins)?, clipped_bins: clipped })
}

/// Interior correlation quantile edges for `nbins` equally populated bins,
/// for callers that do not want to hand-pick edges. Duplicate quantiles
/// (heavily tied data) are deduplicated, which can reduce the bin count.
pub fn quantile_edges(samples: &[(f64, f64)], nbins: usize) -> Result<Vec<f64>> {
    if nbins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {nbins}")));
    }
    if samples.len() < nbins {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot fill {nbins} bins",
            samples.len()
        )));
    }
    let mut rhos: Vec<f64> = samples.iter().map(|&(_, r)| r).collect();
    rhos.sort_by(f64::total_cmp);
    let mut edges = Vec::new();
    for q in 1..nbins {
        let pos = q as f64 / nbins as f64 * (rhos.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let e = rhos[i] + frac * (rhos[(i + 1).min(rhos.len() - 1)] - rhos[i]);
        if edges.last().is_none_or(|last| *last < e) && e > -1.0 && e < 1.0 {
            edges.push(e);
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::EnfSignal;

    fn anchor(name: &str, x: f64, y: f64) -> AnchorSite {
        let enf = EnfSignal::new(vec![60.0; 12], 1.0, 0.0, 60.0).unwrap();
        AnchorSite::new(name, Point::new(x, y), enf).unwrap()
    }

    fn query(
        anchors: Vec<AnchorSite>,
        rhos: &[(&str, f64)],
        epsilon: f64,
        domain: GridDomain,
    ) -> LocalizationQuery {
        LocalizationQuery {
            anchors,
            rho_query: rhos.iter().map(|(n, r)| (n.to_string(), *r)).collect(),
            epsilon,
            domain,
        }
    }

    fn domain10() -> GridDomain {
        GridDomain::new((0.0, 10.0), (0.0, 10.0), 1.0).unwrap()
    }

    #[test]
    fn linear_interpolation_matches_the_worked_reference_case() {
        let e = estimate_distance_linear(0.9, 200.0, 0.7, 600.0, 0.8).unwrap();
        assert!((e.miles - 400.0).abs() < 1e-12);
        assert!(e.plausible);
    }

    #[test]
    fn linear_interpolation_flags_negative_extrapolations() {
        // Extrapolating toward rho = 1 stays positive here...
        let e = estimate_distance_linear(0.9, 200.0, 0.7, 600.0, 0.99).unwrap();
        assert!((e.miles - 20.0).abs() < 1e-9);
        assert!(e.plausible);
        // ...but a steeper slope crosses zero: flagged, not clamped.
        let e = estimate_distance_linear(0.5, 100.0, 0.4, 600.0, 0.6).unwrap();
        assert_eq!(e.miles, 100.0 + (100.0 - 600.0) / 0.1 * 0.1);
        assert!(e.miles < 0.0);
        assert!(!e.plausible);
    }

    #[test]
    fn linear_interpolation_rejects_equal_reference_correlations() {
        assert!(matches!(
            estimate_distance_linear(0.8, 200.0, 0.8, 600.0, 0.7),
            Err(Error::DegenerateSlope)
        ));
    }

    #[test]
    fn mean_distance_error_is_the_mean_absolute_error() {
        let err = mean_distance_error(&[(400.0, 300.0), (500.0, 500.0)]).unwrap();
        assert_eq!(err, 50.0);
        assert!(mean_distance_error(&[]).is_err());
    }

    #[test]
    fn halfplane_keeps_the_side_nearer_the_better_correlated_anchor() {
        let d = domain10();
        let p_i = Point::new(0.0, 5.0);
        let p_j = Point::new(10.0, 5.0);
        // Query correlates better with j (delta > 0): keep cells farther
        // from i, i.e. the right half.
        let r = halfplane_region(&d, p_i, p_j, 0.2, 0.1).unwrap().unwrap();
        assert_eq!(r.area_fraction(), 0.5);
        assert!(r.contains(Point::new(9.5, 5.5)).unwrap());
        assert!(!r.contains(Point::new(0.5, 5.5)).unwrap());

        // Flipped sign keeps the complementary half (boundary cells join
        // the <= side).
        let l = halfplane_region(&d, p_i, p_j, -0.2, 0.1).unwrap().unwrap();
        assert_eq!(l.area_fraction(), 0.5);
        assert_eq!(r.intersect(&l).unwrap().count_true(), 0);
        assert_eq!(r.count_true() + l.count_true(), d.cell_count());
    }

    #[test]
    fn halfplane_skips_pairs_inside_the_tolerance() {
        let d = domain10();
        let r = halfplane_region(&d, Point::new(0.0, 0.0), Point::new(10.0, 0.0), 0.05, 0.1)
            .unwrap();
        assert!(r.is_none());
        // At epsilon = 0 nothing is skipped; an exact tie keeps the
        // "farther from i" side.
        let r = halfplane_region(&d, Point::new(0.0, 5.0), Point::new(10.0, 5.0), 0.0, 0.0)
            .unwrap()
            .unwrap();
        assert_eq!(r.area_fraction(), 0.5);
        assert!(r.contains(Point::new(9.5, 5.5)).unwrap());
    }

    #[test]
    fn halfplane_rejects_coincident_anchors() {
        let d = domain10();
        let p = Point::new(3.0, 3.0);
        assert!(matches!(
            halfplane_region(&d, p, p, 0.5, 0.0),
            Err(Error::CoincidentAnchors { .. })
        ));
    }

    #[test]
    fn halfplane_locate_books_applied_plus_skipped_as_all_pairs() {
        let anchors = vec![
            anchor("a", 0.0, 0.0),
            anchor("b", 10.0, 0.0),
            anchor("c", 5.0, 10.0),
        ];
        // b ~ c within epsilon; both clearly above a.
        let q = query(
            anchors,
            &[("a", 0.2), ("b", 0.8), ("c", 0.79)],
            0.05,
            domain10(),
        );
        let rep = halfplane_locate(&q).unwrap();
        assert_eq!(rep.constraints_applied, 2);
        assert_eq!(rep.constraints_skipped, 1);
        assert_eq!(rep.method, LocateMethod::Halfplane);
        // The kept region hugs the b/c side of the domain.
        assert!(rep.region.contains(Point::new(7.5, 5.5)).unwrap());
        assert!(!rep.region.contains(Point::new(0.5, 0.5)).unwrap());
    }

    #[test]
    fn halfplane_regions_nest_as_epsilon_grows() {
        let anchors = vec![
            anchor("a", 1.0, 1.0),
            anchor("b", 9.0, 2.0),
            anchor("c", 4.0, 9.0),
        ];
        let rhos = [("a", 0.61), ("b", 0.60), ("c", 0.35)];
        let mut prev: Option<FeasibleRegion> = None;
        for eps in [0.0, 0.01, 0.02, 0.05, 0.1] {
            let rep =
                halfplane_locate(&query(anchors.clone(), &rhos, eps, domain10())).unwrap();
            if let Some(p) = &prev {
                assert!(p.is_subset_of(&rep.region), "region must grow with epsilon");
            }
            prev = Some(rep.region);
        }
    }

    #[test]
    fn halfplane_locate_requires_two_anchors_and_complete_rhos() {
        let d = domain10();
        let q = query(vec![anchor("a", 1.0, 1.0)], &[("a", 0.5)], 0.0, d.clone());
        assert!(matches!(halfplane_locate(&q), Err(Error::Config(_))));
        let q = query(
            vec![anchor("a", 1.0, 1.0), anchor("b", 2.0, 2.0)],
            &[("a", 0.5)],
            0.0,
            d,
        );
        assert!(matches!(halfplane_locate(&q), Err(Error::Config(_))));
    }

    #[test]
    fn annulus_for_a_self_match_is_the_top_bin_ring() {
        let d = GridDomain::new((-300.0, 300.0), (-300.0, 300.0), 5.0).unwrap();
        let scheme = QuantizationScheme::builtin_reference();
        let center = Point::new(0.0, 0.0);
        let r = annulus_region(&d, center, 1.0, &scheme).unwrap();
        // Everything kept is within [100, 220) miles of the anchor.
        assert!(r.count_true() > 0);
        assert!(!r.contains(center).unwrap());
        assert!(r.contains(Point::new(150.0, 0.0)).unwrap());
        assert!(!r.contains(Point::new(250.0, 0.0)).unwrap());
    }

    #[test]
    fn annulus_far_bin_is_a_disc_complement() {
        let scheme = QuantizationScheme::builtin_reference();
        // Small domain entirely within 900 miles: the far bin leaves nothing.
        let d = domain10();
        let r = annulus_region(&d, Point::new(5.0, 5.0), 0.1, &scheme).unwrap();
        assert_eq!(r.count_true(), 0);
        // Large domain: far corners survive.
        let big = GridDomain::new((0.0, 2000.0), (0.0, 2000.0), 10.0).unwrap();
        let r = annulus_region(&big, Point::new(0.0, 0.0), 0.1, &scheme).unwrap();
        assert!(r.contains(Point::new(1500.0, 1500.0)).unwrap());
        assert!(!r.contains(Point::new(100.0, 100.0)).unwrap());
    }

    #[test]
    fn quantization_locate_applies_exactly_one_constraint_per_anchor() {
        let d = GridDomain::new((-500.0, 500.0), (-500.0, 500.0), 10.0).unwrap();
        let anchors = vec![
            anchor("a", -200.0, 0.0),
            anchor("b", 200.0, 0.0),
            anchor("c", 0.0, 250.0),
        ];
        let q = query(anchors, &[("a", 0.95), ("b", 0.7), ("c", 0.6)], 0.02, d);
        let scheme = QuantizationScheme::builtin_reference();
        let rep = quantization_locate(&q, &scheme).unwrap();
        assert_eq!(rep.constraints_applied, 3);
        assert_eq!(rep.constraints_skipped, 0);
        assert_eq!(rep.method, LocateMethod::Quantization);
    }

    #[test]
    fn combined_region_is_a_subset_of_both_parents() {
        let d = GridDomain::new((-500.0, 500.0), (-500.0, 500.0), 10.0).unwrap();
        let anchors = vec![
            anchor("a", -200.0, 0.0),
            anchor("b", 200.0, 0.0),
            anchor("c", 0.0, 250.0),
        ];
        let q = query(anchors, &[("a", 0.95), ("b", 0.7), ("c", 0.6)], 0.02, d);
        let scheme = QuantizationScheme::builtin_reference();
        let hp = halfplane_locate(&q).unwrap();
        let qz = quantization_locate(&q, &scheme).unwrap();
        let both = combined_locate(&q, &scheme).unwrap();
        assert!(both.region.is_subset_of(&hp.region));
        assert!(both.region.is_subset_of(&qz.region));
        assert_eq!(
            both.region,
            hp.region.intersect(&qz.region).unwrap(),
            "combined must equal the exact intersection"
        );
        assert_eq!(both.constraints_applied, hp.constraints_applied + 3);
        assert_eq!(both.constraints_skipped, hp.constraints_skipped);
    }

    #[test]
    fn metrics_match_the_hand_computed_batch() {
        let d = GridDomain::new((0.0, 10.0), (0.0, 10.0), 1.0).unwrap();
        // Four regions with area fractions 0.1, 0.2, 0.3, 0.4; the first
        // three contain the truth, the last does not.
        let truth = Point::new(0.5, 0.5);
        let mk = |cells: usize, hit: bool| {
            let mut mask = vec![false; d.cell_count()];
            let start = if hit { 0 } else { 1 };
            for i in start..start + cells {
                mask[i] = true;
            }
            FeasibleRegion::from_mask(d.clone(), mask).unwrap()
        };
        let regions = [mk(10, true), mk(20, true), mk(30, true), mk(40, false)];
        let outcomes: Vec<(&FeasibleRegion, Point)> =
            regions.iter().map(|r| (r, truth)).collect();
        let m = localization_metrics(&outcomes).unwrap();
        assert_eq!(m.queries, 4);
        assert_eq!(m.hits, 3);
        assert!((m.p_loc - 0.75).abs() < 1e-12);
        assert!((m.a_loc - 0.15).abs() < 1e-12);
        assert!((m.a_loc_hits - 0.2).abs() < 1e-12);
    }

    #[test]
    fn metrics_with_no_hits_report_zero_areas() {
        let d = domain10();
        let r = FeasibleRegion::empty(d);
        let m = localization_metrics(&[(&r, Point::new(5.0, 5.0))]).unwrap();
        assert_eq!(m.p_loc, 0.0);
        assert_eq!(m.a_loc, 0.0);
        assert_eq!(m.a_loc_hits, 0.0);
    }

    #[test]
    fn fit_builds_min_max_intervals_and_reports_clean_fits() {
        // Strictly monotone rho-distance relation: no repair needed.
        let samples = [
            (120.0, 0.95),
            (180.0, 0.92),
            (300.0, 0.87),
            (400.0, 0.85),
            (600.0, 0.7),
            (800.0, 0.6),
        ];
        let fit = fit_quantization(&samples, &[0.83, 0.9]).unwrap();
        assert_eq!(fit.clipped_bins, 0);
        let bins = fit.scheme.bins();
        assert_eq!(bins.len(), 3);
        assert_eq!((bins[2].d_min, bins[2].d_max), (120.0, Some(180.0)));
        assert_eq!((bins[1].d_min, bins[1].d_max), (300.0, Some(400.0)));
        assert_eq!((bins[0].d_min, bins[0].d_max), (600.0, Some(800.0)));
    }

    #[test]
    fn fit_with_a_single_bin_covers_all_samples() {
        let samples = [(100.0, 0.9), (500.0, 0.5), (300.0, 0.7)];
        let fit = fit_quantization(&samples, &[]).unwrap();
        let bins = fit.scheme.bins();
        assert_eq!(bins.len(), 1);
        assert_eq!((bins[0].d_min, bins[0].d_max), (100.0, Some(500.0)));
    }

    #[test]
    fn fit_clips_overlapping_intervals_and_counts_the_repairs() {
        // The low-rho bin dips below the high-rho bin's max: overlap.
        let samples = [(100.0, 0.95), (400.0, 0.92), (350.0, 0.5), (900.0, 0.4)];
        let fit = fit_quantization(&samples, &[0.9]).unwrap();
        assert_eq!(fit.clipped_bins, 1);
        let bins = fit.scheme.bins();
        assert_eq!(bins[1].d_max, Some(400.0));
        assert_eq!(bins[0].d_min, 400.0); // clipped up from 350
        assert_eq!(bins[0].d_max, Some(900.0));
    }

    #[test]
    fn fit_rejects_empty_bins() {
        let samples = [(100.0, 0.95), (200.0, 0.92)];
        assert!(matches!(
            fit_quantization(&samples, &[0.5]),
            Err(Error::EmptyBin { .. })
        ));
    }

    #[test]
    fn quantile_edges_split_the_rho_range_evenly() {
        let samples: Vec<(f64, f64)> =
            (0..100).map(|i| (i as f64, -0.9 + 0.018 * i as f64)).collect();
        let edges = quantile_edges(&samples, 4).unwrap();
        assert_eq!(edges.len(), 3);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
    }
}
