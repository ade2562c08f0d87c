use pathloss::analysis::{
    aggregate_bins, classify_los, extract_path_loss, fit_log_distance, median, read_bin_table,
    write_bin_table, FitOptions, LosState,
};
use pathloss::antenna::AntennaPattern;
use pathloss::geo::{from_local, GeodeticPoint, LocalPoint, LosLabel, Polygon};
use pathloss::ingest::{parse_testbed_log, write_testbed_log, SiteConfig, TestbedRow};
use pathloss::models::log_distance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn site(origin: GeodeticPoint) -> SiteConfig {
    SiteConfig {
        site_position: origin,
        antenna_height_agl: 20.0,
        boresight_azimuth: 0.0,
        mechanical_tilt: 0.0,
        tx_power: 40.0,
        carrier_freq: 3.5,
        pattern_ref: "pattern.csv".into(),
        rx_gain: 0.0,
        ue_height: 1.5,
        feeder_loss: 0.0,
    }
}

/// One sample per bin, placed at the bin center, with power from a known
/// log-distance law in 3D distance.
#[test]
fn testbed_log_to_fit_recovers_the_generating_law() {
    let origin = GeodeticPoint::new(40.0, -3.7).unwrap();
    let cfg = site(origin);
    let (a0, gamma) = (80.0, 3.2);
    let mut rows = Vec::new();
    for ix in -40..40i64 {
        for iy in [-30i64, -7, 12, 35] {
            let p = LocalPoint::new(ix as f64 * 5.0 + 2.5, iy as f64 * 5.0 + 2.5, 0.0);
            let d3 = (p.east.powi(2) + p.north.powi(2) + 18.5f64.powi(2)).sqrt();
            let rx = cfg.tx_power - log_distance(d3, a0, gamma, 100.0).unwrap();
            let g = from_local(&origin, &p).unwrap();
            rows.push(TestbedRow {
                timestamp_ms: rows.len() as u64 + 1,
                lat: g.latitude,
                lon: g.longitude,
                beams: vec![None, Some(rx - 3.0), Some(rx)],
            });
        }
    }
    let mut log = Vec::new();
    write_testbed_log(&mut log, 3, &rows).unwrap();
    let parsed = parse_testbed_log(log.as_slice(), "3.5GHz").unwrap();
    assert_eq!(parsed.samples.len(), rows.len());

    let agg = aggregate_bins(&parsed.samples, &origin, 5.0).unwrap();
    assert_eq!(agg.len(), rows.len());
    let bins = extract_path_loss(&agg, &cfg, &AntennaPattern::isotropic(0.0)).unwrap();
    let opts = FitOptions {
        min_d: Some(20.0),
        ..FitOptions::default()
    };
    let fit = fit_log_distance(&bins, &opts).unwrap();
    // written powers carry two decimals, so the fit is exact to rounding
    assert!((fit.gamma - gamma).abs() < 0.01, "gamma {}", fit.gamma);
    assert!((fit.a0 - a0).abs() < 0.01, "a0 {}", fit.a0);
    assert!(fit.sigma < 0.01);
}

#[test]
fn bin_table_round_trip_keeps_los_labels() {
    let origin = GeodeticPoint::new(52.0, 13.4).unwrap();
    let cfg = site(origin);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<_> = (0..400)
        .map(|i| pathloss::ingest::MeasurementSample {
            timestamp_ms: i + 1,
            position: from_local(
                &origin,
                &LocalPoint::new(
                    rng.random_range(-300.0..300.0),
                    rng.random_range(20.0..300.0),
                    0.0,
                ),
            )
            .unwrap(),
            received_power: rng.random_range(-110.0..-60.0),
            band: "3.5GHz".into(),
            source: pathloss::ingest::Source::Testbed,
            beam_id: Some(0),
            cell_id: None,
        })
        .collect();
    let agg = aggregate_bins(&samples, &origin, 5.0).unwrap();
    let bins = extract_path_loss(&agg, &cfg, &AntennaPattern::isotropic(5.0)).unwrap();
    let east_half = Polygon::new(
        [(0.0, 0.0), (400.0, 0.0), (400.0, 400.0), (0.0, 400.0)]
            .iter()
            .map(|&(e, n)| from_local(&origin, &LocalPoint::new(e, n, 0.0)).unwrap())
            .collect(),
        LosLabel::Los,
    )
    .unwrap();
    let labelled = classify_los(&bins, &[east_half]);
    for b in &labelled {
        let expected = if b.centroid.unwrap().east > 0.0 {
            LosState::Los
        } else {
            LosState::Nlos
        };
        assert_eq!(b.los, expected);
    }

    let mut buf = Vec::new();
    write_bin_table(&mut buf, &labelled).unwrap();
    let back = read_bin_table(buf.as_slice()).unwrap();
    assert_eq!(back.len(), labelled.len());
    for (a, b) in labelled.iter().zip(&back) {
        assert_eq!(a.index, b.index);
        assert_eq!(a.los, b.los);
        assert_eq!(a.sample_count, b.sample_count);
        assert!((a.path_loss - b.path_loss).abs() < 1e-6);
        assert!((a.distance_2d - b.distance_2d).abs() < 1e-3);
    }
}

/// Bilinear lookup checked against a search over the four surrounding nodes.
#[test]
fn gain_lookup_matches_four_node_oracle() {
    let az: Vec<f64> = (0..36).map(|i| i as f64 * 10.0).collect();
    let el: Vec<f64> = (0..13).map(|i| -30.0 + i as f64 * 5.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let gain: Vec<f64> = (0..az.len() * el.len())
        .map(|_| rng.random_range(-30.0..20.0))
        .collect();
    let pattern = AntennaPattern::new(az.clone(), el.clone(), gain.clone()).unwrap();
    let node = |ia: usize, ie: usize| gain[ie * az.len() + ia];
    for _ in 0..2000 {
        let a = rng.random_range(0.0..360.0);
        let e = rng.random_range(-30.0..30.0);
        let ia = az.iter().rposition(|&x| x <= a).unwrap();
        let ie = el.iter().rposition(|&x| x <= e).unwrap().min(el.len() - 2);
        let t = (a - az[ia]) / 10.0;
        let u = (e - el[ie]) / 5.0;
        let ja = (ia + 1) % az.len();
        let expected = (1.0 - t) * (1.0 - u) * node(ia, ie)
            + t * (1.0 - u) * node(ja, ie)
            + (1.0 - t) * u * node(ia, ie + 1)
            + t * u * node(ja, ie + 1);
        let got = pattern.gain_at(a, e);
        assert!((got.gain_dbi - expected).abs() < 1e-9, "({a}, {e})");
        assert!(!got.elevation_clamped);
        let corners = [
            node(ia, ie),
            node(ja, ie),
            node(ia, ie + 1),
            node(ja, ie + 1),
        ];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(got.gain_dbi >= lo - 1e-9 && got.gain_dbi <= hi + 1e-9);
    }
    assert!(pattern.gain_at(0.0, 80.0).elevation_clamped);
}

#[test]
fn median_matches_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..200 {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-100..-40) as f64).collect();
        let mut s = v.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = if n % 2 == 1 {
            s[n / 2]
        } else {
            (s[n / 2 - 1] + s[n / 2]) / 2.0
        };
        assert_eq!(median(&v), Some(expected));
    }
    assert_eq!(median(&[]), None);
}
