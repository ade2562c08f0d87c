//! Seeded synthetic data: bin sets drawn around a model curve and full
//! testbed drive logs rendered through a beam set.
//!
//! Geometry and shadow fading come from separate ChaCha8 streams of the same
//! seed, so changing `sigma` leaves bin positions untouched.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{GridBin, LosState};
use crate::antenna::BeamSet;
use crate::error::{Error, Result};
use crate::geo::{
    bin_index, from_local, Endpoint, GeodeticPoint, GridIndex, LocalPoint, LosLabel, Polygon,
};
use crate::ingest::{SiteConfig, TestbedRow, MIN_RX_POWER_DBM};
use crate::models::{log_distance, LinkGeometry, ModelId};

const GEOMETRY_STREAM: u64 = 0;
const FADING_STREAM: u64 = 1;

/// Per-beam values weaker than this are written as "not received".
const BEAM_SENSITIVITY_DBM: f64 = -140.0;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::validation("sigma", "must be non-negative"));
    }
    Normal::new(0.0, sigma).map_err(|e| Error::validation("sigma", e.to_string()))
}

/// Where synthetic bins are placed: one per grid cell, horizontal distance
/// log-uniform over `range`, bearing uniform over `azimuth_range` (degrees,
/// clockwise from north, may wrap past 360).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinLayout {
    pub origin: GeodeticPoint,
    pub n: usize,
    pub range: (f64, f64),
    pub grid_size: f64,
    pub azimuth_range: (f64, f64),
}

impl BinLayout {
    pub fn new(n: usize, range: (f64, f64)) -> Self {
        BinLayout {
            origin: GeodeticPoint {
                latitude: 0.0,
                longitude: 0.0,
                altitude_agl: 0.0,
            },
            n,
            range,
            grid_size: 5.0,
            azimuth_range: (0.0, 360.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::validation(
                "distance_range",
                format!("need 0 < min < max, got [{lo}, {hi}]"),
            ));
        }
        if self.n == 0 {
            return Err(Error::validation("n", "must be at least 1"));
        }
        if !(self.grid_size > 0.0) {
            return Err(Error::validation("grid_size", "must be positive"));
        }
        let (a, b) = self.azimuth_range;
        if !(b > a && b - a <= 360.0) {
            return Err(Error::validation("azimuth_range", "need 0 < width <= 360"));
        }
        self.origin.validate()
    }

    /// Draws `n` points in distinct cells. Points sit at least 1 mm inside
    /// their cell so re-binning after a coordinate round trip is stable.
    fn draw(
        &self,
        rng: &mut ChaCha8Rng,
        azimuths: (f64, f64),
        used: &mut HashSet<GridIndex>,
    ) -> Result<Vec<(GridIndex, LocalPoint)>> {
        let (lo, hi) = self.range;
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let mut out = Vec::with_capacity(self.n);
        let max_attempts = 200 * self.n + 1000;
        let mut attempts = 0;
        while out.len() < self.n {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::validation(
                    "n",
                    format!(
                        "cannot place {} distinct bins in the requested area",
                        self.n
                    ),
                ));
            }
            let d = rng.random_range(ln_lo..=ln_hi).exp();
            let az = rng.random_range(azimuths.0..azimuths.1);
            let p = LocalPoint::from_polar(d, az);
            let edge = |v: f64| {
                let f = (v / self.grid_size).rem_euclid(1.0);
                f < 1e-3 / self.grid_size || f > 1.0 - 1e-3 / self.grid_size
            };
            if edge(p.east) || edge(p.north) {
                continue;
            }
            let idx = bin_index(&p, self.grid_size)?;
            if used.insert(idx) {
                out.push((idx, p));
            }
        }
        Ok(out)
    }
}

fn bins_from<F>(
    layout: &BinLayout,
    h_bs: f64,
    h_ut: f64,
    sigma: f64,
    seed: u64,
    band: &str,
    mut mean_loss: F,
) -> Result<Vec<GridBin>>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    layout.validate()?;
    let noise = normal(sigma)?;
    let points = layout.draw(
        &mut rng(seed, GEOMETRY_STREAM),
        layout.azimuth_range,
        &mut HashSet::new(),
    )?;
    let mut fading = rng(seed, FADING_STREAM);
    points
        .into_iter()
        .map(|(index, p)| {
            let d2d = p.horizontal_norm();
            let d3d = d2d.hypot(h_bs - h_ut);
            let path_loss = mean_loss(d2d, d3d)? + noise.sample(&mut fading);
            Ok(GridBin {
                index,
                centroid: Some(p),
                position: from_local(&layout.origin, &p)?,
                median_rx_power: None,
                path_loss,
                distance_2d: d2d,
                distance_3d: d3d,
                sample_count: 1,
                los: LosState::Unknown,
                band: band.to_string(),
            })
        })
        .collect()
}

/// Bins on the log-distance model plus Normal(0, sigma) shadow fading, with
/// distances log-uniform over `distance_range`. Transmitter and receiver are
/// at equal height, so 2D and 3D distances coincide.
pub fn synthesize_samples(
    a0: f64,
    gamma: f64,
    sigma: f64,
    d0: f64,
    n: usize,
    distance_range: (f64, f64),
    seed: u64,
) -> Result<Vec<GridBin>> {
    if !(d0 > 0.0) {
        return Err(Error::validation("d0", "must be positive"));
    }
    let layout = BinLayout::new(n, distance_range);
    bins_from(&layout, 0.0, 0.0, sigma, seed, "synthetic", |_, d3d| {
        log_distance(d3d, a0, gamma, d0)
    })
}

/// Bins drawn around an arbitrary model evaluated with the template's
/// frequency and heights; the layout range bounds the 2D distance.
pub fn synthesize_model_bins(
    model: &ModelId,
    template: &LinkGeometry,
    sigma: f64,
    layout: &BinLayout,
    seed: u64,
) -> Result<Vec<GridBin>> {
    template.at_distance(1.0).validate()?;
    let band = format!("{}GHz", template.freq_ghz);
    bins_from(
        layout,
        template.h_bs,
        template.h_ut,
        sigma,
        seed,
        &band,
        |d2d, d3d| Ok(model.predict(&template.at_distances(d2d, d3d))?.loss_db),
    )
}

/// Log-distance parameters of one propagation condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionParams {
    pub a0: f64,
    pub gamma: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveTestConfig {
    pub site: SiteConfig,
    pub n_bins: usize,
    /// Horizontal distance range, meters.
    pub range: (f64, f64),
    pub d0: f64,
    pub los: ConditionParams,
    pub nlos: ConditionParams,
    /// Share of bins placed inside the LOS wedge.
    pub los_fraction: f64,
    /// Angular width of the served sector around boresight, degrees.
    pub sector_width: f64,
    pub samples_per_bin: usize,
    /// Per-sample fast-fading deviation, dB.
    pub fast_fading_sigma: f64,
    pub start_ms: u64,
    pub period_ms: u64,
    pub seed: u64,
}

/// A rendered drive test: testbed rows plus the LOS wedge used to place bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTest {
    pub rows: Vec<TestbedRow>,
    pub n_beams: usize,
    pub los_polygon: Option<Polygon>,
}

/// Renders a testbed log for `cfg.site` served by `beams`.
///
/// Bins are split into a LOS wedge at the counter-clockwise edge of the sector
/// and the NLOS remainder. Each bin gets one shadow-fading draw; each sample in
/// it adds fast fading common to all beams.
pub fn drive_test_scenario(cfg: &DriveTestConfig, beams: &BeamSet) -> Result<DriveTest> {
    cfg.site.validate()?;
    if !(0.0..=1.0).contains(&cfg.los_fraction) {
        return Err(Error::validation("los_fraction", "must lie in [0, 1]"));
    }
    if !(cfg.sector_width > 0.0 && cfg.sector_width <= 360.0) {
        return Err(Error::validation("sector_width", "must lie in (0, 360]"));
    }
    if cfg.samples_per_bin == 0 {
        return Err(Error::validation("samples_per_bin", "must be at least 1"));
    }
    let los_noise = normal(cfg.los.sigma)?;
    let nlos_noise = normal(cfg.nlos.sigma)?;
    let fast = normal(cfg.fast_fading_sigma)?;

    let site = &cfg.site;
    let start = site.boresight_azimuth - cfg.sector_width / 2.0;
    let split = start + cfg.los_fraction * cfg.sector_width;
    let end = start + cfg.sector_width;
    // keep bins clear of the wedge edges
    let margin = 0.25f64.min(cfg.sector_width * 0.01);

    let n_los = (cfg.los_fraction * cfg.n_bins as f64).round() as usize;
    let layout = BinLayout {
        origin: site.site_position,
        n: cfg.n_bins,
        range: cfg.range,
        grid_size: 5.0,
        azimuth_range: (start, end),
    };
    layout.validate()?;
    let mut geo_rng = rng(cfg.seed, GEOMETRY_STREAM);
    let mut points = Vec::with_capacity(cfg.n_bins);
    let mut used = HashSet::new();
    for (count, wedge, is_los) in [
        (n_los, (start + margin, split - margin), true),
        (cfg.n_bins - n_los, (split + margin, end - margin), false),
    ] {
        if count == 0 {
            continue;
        }
        if wedge.1 <= wedge.0 {
            return Err(Error::validation(
                "los_fraction",
                "wedge too narrow to place bins",
            ));
        }
        let part = BinLayout { n: count, ..layout };
        let drawn = part.draw(&mut geo_rng, wedge, &mut used)?;
        points.extend(drawn.into_iter().map(|(_, p)| (p, is_los)));
    }

    let bs = Endpoint::new(LocalPoint::ORIGIN, site.antenna_height_agl);
    let n_beams = beams.len();
    let mut fading = rng(cfg.seed, FADING_STREAM);
    let mut rows = Vec::with_capacity(cfg.n_bins * cfg.samples_per_bin);
    let mut ts = cfg.start_ms;
    for (p, is_los) in points {
        let (params, noise) = if is_los {
            (cfg.los, &los_noise)
        } else {
            (cfg.nlos, &nlos_noise)
        };
        let ue = Endpoint::new(p, site.ue_height);
        let d3d = crate::geo::distance_3d(&bs, &ue).d3d;
        let bin_loss =
            log_distance(d3d, params.a0, params.gamma, cfg.d0)? + noise.sample(&mut fading);
        let bearing = crate::geo::azimuth_elevation(&bs, &ue)?;
        let rel_az = bearing.azimuth - site.boresight_azimuth;
        let rel_el = bearing.elevation - site.mechanical_tilt;
        let gains: Vec<f64> = beams
            .beams()
            .iter()
            .map(|b| b.gain_at(rel_az, rel_el).gain_dbi)
            .collect();
        let position = from_local(&site.site_position, &p)?;
        for _ in 0..cfg.samples_per_bin {
            let loss = bin_loss + fast.sample(&mut fading);
            let budget = site.effective_tx_power() + site.rx_gain - loss;
            let beams_rx = gains
                .iter()
                .map(|g| {
                    let rx = budget + g;
                    (rx >= BEAM_SENSITIVITY_DBM.max(MIN_RX_POWER_DBM)).then_some(rx)
                })
                .collect();
            rows.push(TestbedRow {
                timestamp_ms: ts,
                lat: position.latitude,
                lon: position.longitude,
                beams: beams_rx,
            });
            ts += cfg.period_ms;
        }
    }

    let los_polygon = if n_los > 0 {
        Some(wedge_polygon(
            &site.site_position,
            start,
            split,
            cfg.range.1,
        )?)
    } else {
        None
    };
    Ok(DriveTest {
        rows,
        n_beams,
        los_polygon,
    })
}

/// Sector polygon from the site between two bearings, reaching past `radius`.
fn wedge_polygon(site: &GeodeticPoint, from: f64, to: f64, radius: f64) -> Result<Polygon> {
    let steps = ((to - from) / 2.0).ceil().max(1.0) as usize;
    let step = (to - from) / steps as f64;
    // chords of the arc stay outside `radius`
    let r = 1.05 * radius / (step.to_radians() / 2.0).cos();
    let mut verts = Vec::with_capacity(steps + 2);
    if to - from < 360.0 {
        verts.push(*site);
    }
    for k in 0..=steps {
        if to - from >= 360.0 && k == steps {
            break;
        }
        verts.push(from_local(
            site,
            &LocalPoint::from_polar(r, from + k as f64 * step),
        )?);
    }
    Polygon::new(verts, LosLabel::Los)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_log_distance, FitOptions};

    #[test]
    fn zero_sigma_lies_on_the_line() {
        let bins = synthesize_samples(83.33, 2.9, 0.0, 100.0, 200, (100.0, 2000.0), 7).unwrap();
        assert_eq!(bins.len(), 200);
        for b in &bins {
            let expect = log_distance(b.distance_3d, 83.33, 2.9, 100.0).unwrap();
            assert_eq!(b.path_loss, expect);
            assert!(b.distance_3d >= 100.0 - 1e-9 && b.distance_3d <= 2000.0 + 1e-9);
        }
        let fit = fit_log_distance(&bins, &FitOptions::default()).unwrap();
        assert!((fit.gamma - 2.9).abs() < 1e-9);
    }

    #[test]
    fn seeds_are_reproducible_and_independent_of_sigma() {
        let a = synthesize_samples(80.0, 3.0, 6.0, 100.0, 300, (100.0, 2000.0), 11).unwrap();
        let b = synthesize_samples(80.0, 3.0, 6.0, 100.0, 300, (100.0, 2000.0), 11).unwrap();
        assert_eq!(a, b);
        let c = synthesize_samples(80.0, 3.0, 1.0, 100.0, 300, (100.0, 2000.0), 11).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert_eq!(x.index, y.index);
            assert_eq!(x.distance_3d, y.distance_3d);
        }
        let d = synthesize_samples(80.0, 3.0, 6.0, 100.0, 300, (100.0, 2000.0), 12).unwrap();
        assert_ne!(a, d);
        let cells: HashSet<GridIndex> = a.iter().map(|b| b.index).collect();
        assert_eq!(cells.len(), a.len());
    }

    #[test]
    fn invalid_inputs() {
        assert!(synthesize_samples(80.0, 3.0, 6.0, 100.0, 10, (200.0, 100.0), 1).is_err());
        assert!(synthesize_samples(80.0, 3.0, 6.0, 100.0, 0, (100.0, 200.0), 1).is_err());
        assert!(synthesize_samples(80.0, 3.0, -1.0, 100.0, 10, (100.0, 200.0), 1).is_err());
        // far more bins than cells in a 1 m annulus
        assert!(synthesize_samples(80.0, 3.0, 1.0, 100.0, 5000, (100.0, 101.0), 1).is_err());
    }

    #[test]
    fn model_bins_follow_the_model() {
        let template = LinkGeometry::new(100.0, 25.0, 1.5, 3.5);
        let model = ModelId::Fspl;
        let layout = BinLayout::new(50, (100.0, 1000.0));
        let bins = synthesize_model_bins(&model, &template, 0.0, &layout, 3).unwrap();
        for b in &bins {
            assert!((b.distance_3d - b.distance_2d.hypot(23.5)).abs() < 1e-9);
            let pl = crate::models::fspl_db(b.distance_3d, 3.5);
            assert!((b.path_loss - pl).abs() < 1e-9);
            assert_eq!(b.band, "3.5GHz");
        }
    }

    fn small_site() -> SiteConfig {
        SiteConfig {
            site_position: GeodeticPoint::new(47.0, 8.0).unwrap(),
            antenna_height_agl: 12.4,
            boresight_azimuth: 90.0,
            mechanical_tilt: 0.0,
            tx_power: 10.0,
            carrier_freq: 3.5,
            pattern_ref: "pattern.csv".into(),
            rx_gain: 4.0,
            ue_height: 1.5,
            feeder_loss: 0.0,
        }
    }

    #[test]
    fn drive_test_rows_and_wedge() {
        let beams = BeamSet::synthetic_grid(3, 16, 27.0, 120.0, 18.0, 2.0).unwrap();
        let params = ConditionParams {
            a0: 83.3,
            gamma: 2.5,
            sigma: 4.0,
        };
        let cfg = DriveTestConfig {
            site: small_site(),
            n_bins: 100,
            range: (100.0, 1000.0),
            d0: 100.0,
            los: params,
            nlos: ConditionParams {
                gamma: 3.5,
                ..params
            },
            los_fraction: 0.42,
            sector_width: 120.0,
            samples_per_bin: 3,
            fast_fading_sigma: 1.0,
            start_ms: 1_000,
            period_ms: 20,
            seed: 5,
        };
        let dt = drive_test_scenario(&cfg, &beams).unwrap();
        assert_eq!(dt.rows.len(), 300);
        assert_eq!(dt.n_beams, 48);
        assert!(dt.rows.iter().all(|r| r.beams.len() == 48));
        let wedge = dt.los_polygon.unwrap();
        let inside = dt
            .rows
            .iter()
            .step_by(3)
            .filter(|r| {
                crate::geo::point_in_polygon(&GeodeticPoint::new(r.lat, r.lon).unwrap(), &wedge)
            })
            .count();
        assert_eq!(inside, 42);
        assert_eq!(drive_test_scenario(&cfg, &beams).unwrap().rows, dt.rows);
    }
}
