//! End-to-end integration: simulate a multi-site grid, synthesize a power
//! recording, re-extract its frequency series, build residual signatures,
//! and localize each site against the remaining ones.

use std::collections::BTreeMap;

use enfgrid_core::extract::{extract_enf, ExtractionConfig};
use enfgrid_core::geolocate::{
    combined_locate, fit_quantization, halfplane_locate, localization_metrics, quantile_edges,
    quantization_locate, LocalizationQuery,
};
use enfgrid_core::gridsim::{five_city_sites, simulate_enf_grid, synthesize_waveform, SimConfig};
use enfgrid_core::io;
use enfgrid_core::signature::{corrcoef, highpass_detail, stats};
use enfgrid_core::types::{AnchorSite, DetailSignal, FeasibleRegion, GridDomain, Point};

fn simulate(duration: f64, seed: u64) -> Vec<AnchorSite> {
    let config = SimConfig::new(five_city_sites(), duration, seed);
    simulate_enf_grid(&config).unwrap()
}

#[test]
fn waveform_round_trip_recovers_simulated_frequencies() {
    let sites = simulate(300.0, 41);
    let truth = &sites[3].enf; // college_park
    let rec = synthesize_waveform(truth, 400.0, 0.5, 40.0, 97).unwrap();
    let extraction = extract_enf(&rec, &ExtractionConfig::default()).unwrap();

    assert_eq!(extraction.enf.len(), truth.len());
    let mut max_err: f64 = 0.0;
    for (got, want) in extraction.enf.values().iter().zip(truth.values()) {
        max_err = max_err.max((got - want).abs());
    }
    assert!(
        max_err <= 0.002,
        "worst frame error {max_err} Hz exceeds 2 mHz at 40 dB"
    );
    assert!(extraction.flags.iter().all(|f| f.clean()));
}

/// The full localization chain on noiseless simulated data: residuals,
/// pairwise correlations, a scheme fitted from the anchors themselves,
/// and leave-one-out region queries for every site and segment.
#[test]
fn leave_one_out_localization_pins_every_site() {
    const FILTER_ORDER: usize = 3;
    const SEGMENT: usize = 580;
    let starts = [0usize, 600, 1200];

    let sites = simulate(1800.0, 7);
    let details: Vec<(String, Point, DetailSignal)> = sites
        .iter()
        .map(|s| {
            (
                s.name.clone(),
                s.position,
                highpass_detail(&s.enf, FILTER_ORDER).unwrap(),
            )
        })
        .collect();
    let k = details.len();

    // Pairwise (distance, rho) samples over every segment; also the mean
    // correlation per pair for the monotonicity check.
    let mut samples = Vec::new();
    let mut pair_distance = Vec::new();
    let mut pair_mean_rho = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let d = details[i].1.distance(details[j].1);
            let mut rhos = Vec::new();
            for &s in &starts {
                let rho = corrcoef(&details[i].2, &details[j].2, s, SEGMENT).unwrap();
                samples.push((d, rho));
                rhos.push(rho);
            }
            pair_distance.push(d);
            pair_mean_rho.push(rhos.iter().sum::<f64>() / rhos.len() as f64);
        }
    }
    let sp = stats::spearman(&pair_distance, &pair_mean_rho);
    assert!(
        sp <= -0.8,
        "correlation must fall off with distance (spearman {sp})"
    );

    // A scheme fitted from the anchors' own pairs must come out with
    // inversely ordered distance intervals (enforced by construction) and
    // must cover every observed correlation.
    let edges = quantile_edges(&samples, 4).unwrap();
    let fit = fit_quantization(&samples, &edges).unwrap();
    assert!(fit.scheme.bins().len() >= 3);
    for &(_, rho) in &samples {
        assert!(fit.scheme.bin_for(rho).is_ok());
    }

    // The locate chain runs against the built-in reference scheme, whose
    // rings are wide enough to generalize beyond the training distances.
    let scheme = enfgrid_core::types::QuantizationScheme::builtin_reference();

    let domain = GridDomain::from_anchor_positions(
        &details.iter().map(|(_, p, _)| *p).collect::<Vec<_>>(),
        0.25,
        Some(10.0),
    )
    .unwrap();

    // Leave-one-out: each site in turn becomes the query.
    let mut hp_out: Vec<(FeasibleRegion, Point)> = Vec::new();
    let mut qz_out: Vec<(FeasibleRegion, Point)> = Vec::new();
    let mut cb_out: Vec<(FeasibleRegion, Point)> = Vec::new();
    for q in 0..k {
        for &s in &starts {
            let mut anchors = Vec::new();
            let mut rho_query = BTreeMap::new();
            for a in 0..k {
                if a == q {
                    continue;
                }
                let rho = corrcoef(&details[q].2, &details[a].2, s, SEGMENT).unwrap();
                rho_query.insert(details[a].0.clone(), rho);
                anchors.push(
                    AnchorSite::new(details[a].0.clone(), details[a].1, sites[a].enf.clone())
                        .unwrap(),
                );
            }
            let query = LocalizationQuery {
                anchors,
                rho_query,
                epsilon: 0.02,
                domain: domain.clone(),
            };
            let truth = details[q].1;
            let hp = halfplane_locate(&query).unwrap();
            let qz = quantization_locate(&query, &scheme).unwrap();
            let cb = combined_locate(&query, &scheme).unwrap();
            assert!(cb.region.is_subset_of(&hp.region));
            assert!(cb.region.is_subset_of(&qz.region));
            hp_out.push((hp.region, truth));
            qz_out.push((qz.region, truth));
            cb_out.push((cb.region, truth));
        }
    }

    let metrics = |outs: &[(FeasibleRegion, Point)]| {
        let refs: Vec<(&FeasibleRegion, Point)> = outs.iter().map(|(r, t)| (r, *t)).collect();
        localization_metrics(&refs).unwrap()
    };
    let hp = metrics(&hp_out);
    let qz = metrics(&qz_out);
    let cb = metrics(&cb_out);

    assert!(
        hp.p_loc >= 0.8,
        "half-plane localization hit only {} of {}",
        hp.hits,
        hp.queries
    );
    assert!(hp.a_loc > 0.0);
    // Rings trade hit rate for precision: on every query the quantization
    // region is smaller than the half-plane region.
    for ((h, _), (q, _)) in hp_out.iter().zip(&qz_out) {
        assert!(q.area_fraction() < h.area_fraction());
    }
    assert!(cb.p_loc > 0.0, "combining must still hit sometimes");
    // Intersecting constraints can only shrink the credited area.
    assert!(cb.a_loc <= hp.a_loc + 1e-15);
    assert!(cb.a_loc <= qz.a_loc + 1e-15);
}

#[test]
fn anchor_bundle_round_trips_simulated_sites() {
    let sites = simulate(120.0, 3);
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("anchors.json");
    io::write_anchor_bundle(&index, &sites).unwrap();
    let back = io::read_anchor_bundle(&index).unwrap();
    assert_eq!(back.len(), sites.len());
    for (a, b) in sites.iter().zip(&back) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.position, b.position);
        assert_eq!(a.enf.len(), b.enf.len());
        for (x, y) in a.enf.values().iter().zip(b.enf.values()) {
            assert!((x - y).abs() <= 5e-7, "CSV stores 6 decimal places");
        }
    }
}
