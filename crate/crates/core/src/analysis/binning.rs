use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{median, GridBin, LosState};
use crate::antenna::AntennaPattern;
use crate::error::{Error, Result};
use crate::geo::{
    azimuth_elevation, bin_index, distance_3d, from_local, point_in_polygon, to_local, Endpoint,
    GeodeticPoint, GridIndex, LocalPoint, LosLabel, Polygon,
};
use crate::ingest::{MeasurementSample, SiteConfig};

/// Per-bin reduction of the raw samples of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BinAggregate {
    pub band: String,
    pub index: GridIndex,
    /// dBm.
    pub median_rx_power: f64,
    pub count: usize,
    pub centroid: LocalPoint,
}

/// Groups samples into square bins of `grid_size` meters around `origin`,
/// separately per band. Output is ordered by band, then grid index.
pub fn aggregate_bins(
    samples: &[MeasurementSample],
    origin: &GeodeticPoint,
    grid_size: f64,
) -> Result<Vec<BinAggregate>> {
    let mut groups: BTreeMap<(&str, GridIndex), Vec<(LocalPoint, f64)>> = BTreeMap::new();
    for s in samples {
        let mut p = to_local(origin, &s.position)?;
        p.up = 0.0;
        let idx = bin_index(&p, grid_size)?;
        groups
            .entry((s.band.as_str(), idx))
            .or_default()
            .push((p, s.received_power));
    }
    Ok(groups
        .into_iter()
        .map(|((band, index), mut members)| {
            // Sorting makes the floating-point sums independent of input order.
            members.sort_by(|a, b| {
                a.0.east
                    .total_cmp(&b.0.east)
                    .then(a.0.north.total_cmp(&b.0.north))
                    .then(a.1.total_cmp(&b.1))
            });
            let n = members.len() as f64;
            let east = members.iter().map(|m| m.0.east).sum::<f64>() / n;
            let north = members.iter().map(|m| m.0.north).sum::<f64>() / n;
            let powers: Vec<f64> = members.iter().map(|m| m.1).collect();
            BinAggregate {
                band: band.to_string(),
                index,
                median_rx_power: median(&powers).expect("non-empty group"),
                count: members.len(),
                centroid: LocalPoint::new(east, north, 0.0),
            }
        })
        .collect())
}

/// Link-budget path loss per bin: `P_T + G_T(az, el) + G_R - P_R`.
///
/// Bin centroids must be relative to the site position. The pattern is
/// oriented with the site's boresight and tilt. Bins at the mast foot are
/// dropped with a warning.
pub fn extract_path_loss(
    bins: &[BinAggregate],
    site: &SiteConfig,
    pattern: &AntennaPattern,
) -> Result<Vec<GridBin>> {
    site.validate()?;
    let pattern = pattern
        .clone()
        .with_orientation(site.boresight_azimuth, site.mechanical_tilt);
    let bs = Endpoint::new(LocalPoint::ORIGIN, site.antenna_height_agl);
    let mut out = Vec::with_capacity(bins.len());
    let mut dropped = 0usize;
    for b in bins {
        let ue = Endpoint::new(b.centroid, site.ue_height);
        let dist = distance_3d(&bs, &ue);
        if dist.d2d == 0.0 {
            dropped += 1;
            continue;
        }
        let bearing = azimuth_elevation(&bs, &ue)?;
        let gain = pattern.gain_at(bearing.azimuth, bearing.elevation).gain_dbi;
        let path_loss = site.effective_tx_power() + gain + site.rx_gain - b.median_rx_power;
        if !(path_loss > 0.0) {
            return Err(Error::domain(format!(
                "non-positive path loss {path_loss:.2} dB in bin ({}, {}); check tx power and gains",
                b.index.ix, b.index.iy
            )));
        }
        out.push(GridBin {
            index: b.index,
            centroid: Some(b.centroid),
            position: from_local(&site.site_position, &b.centroid)?,
            median_rx_power: Some(b.median_rx_power),
            path_loss,
            distance_2d: dist.d2d,
            distance_3d: dist.d3d,
            sample_count: b.count,
            los: LosState::Unknown,
            band: b.band.clone(),
        });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} bin(s) at zero horizontal distance from the site");
    }
    Ok(out)
}

/// Labels a bin LOS when its centroid lies inside any LOS polygon, NLOS otherwise.
pub fn classify_los(bins: &[GridBin], polygons: &[Polygon]) -> Vec<GridBin> {
    bins.iter()
        .map(|b| {
            let inside = polygons
                .iter()
                .filter(|p| p.label == LosLabel::Los)
                .any(|p| point_in_polygon(&b.position, p));
            GridBin {
                los: if inside {
                    LosState::Los
                } else {
                    LosState::Nlos
                },
                ..b.clone()
            }
        })
        .collect()
}

/// Drops bins whose centroid lies inside any mask polygon, whatever its label.
pub fn apply_exclusion_mask(bins: Vec<GridBin>, mask: &[Polygon]) -> Vec<GridBin> {
    let before = bins.len();
    let kept: Vec<GridBin> = bins
        .into_iter()
        .filter(|b| !mask.iter().any(|p| point_in_polygon(&b.position, p)))
        .collect();
    if kept.len() < before {
        log::info!("exclusion mask removed {} bin(s)", before - kept.len());
    }
    kept
}

/// Fraction of LOS bins among labeled ones, `None` when no bin is labeled.
pub fn los_fraction(bins: &[GridBin]) -> Option<f64> {
    let labeled = bins.iter().filter(|b| b.los != LosState::Unknown).count();
    if labeled == 0 {
        return None;
    }
    let los = bins.iter().filter(|b| b.los == LosState::Los).count();
    Some(los as f64 / labeled as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Center of the distance bin, meters.
    pub distance: f64,
    pub median_path_loss: f64,
    pub count: usize,
}

/// Median path loss per `step`-meter slice of 3D distance.
pub fn distance_profile(bins: &[GridBin], step: f64) -> Result<Vec<ProfilePoint>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::validation("step", "must be positive"));
    }
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for b in bins {
        let k = (b.distance_3d / step).floor() as i64;
        groups.entry(k).or_default().push(b.path_loss);
    }
    Ok(groups
        .into_iter()
        .map(|(k, pls)| ProfilePoint {
            distance: (k as f64 + 0.5) * step,
            median_path_loss: median(&pls).expect("non-empty group"),
            count: pls.len(),
        })
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct BinRow {
    ix: i64,
    iy: i64,
    lat: f64,
    lon: f64,
    d2d_m: f64,
    d3d_m: f64,
    pl_db: f64,
    count: usize,
    los: LosState,
    band: String,
}

/// Writes the bin table `ix,iy,lat,lon,d2d_m,d3d_m,pl_db,count,los,band`.
pub fn write_bin_table<W: Write>(writer: W, bins: &[GridBin]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for b in bins {
        w.serialize(BinRow {
            ix: b.index.ix,
            iy: b.index.iy,
            lat: b.position.latitude,
            lon: b.position.longitude,
            d2d_m: b.distance_2d,
            d3d_m: b.distance_3d,
            pl_db: b.path_loss,
            count: b.sample_count,
            los: b.los,
            band: b.band.clone(),
        })?;
    }
    w.flush().map_err(|e| Error::io("<bin table>", e))?;
    Ok(())
}

pub fn read_bin_table<R: Read>(reader: R) -> Result<Vec<GridBin>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<BinRow>() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        if row.count == 0 {
            return Err(Error::validation("count", "bins need at least one sample"));
        }
        if !(row.pl_db > 0.0) {
            return Err(Error::validation(
                "pl_db",
                format!("non-positive path loss {}", row.pl_db),
            ));
        }
        if !(row.d2d_m >= 0.0 && row.d3d_m >= row.d2d_m) {
            return Err(Error::validation("d3d_m", "distances inconsistent"));
        }
        out.push(GridBin {
            index: GridIndex::new(row.ix, row.iy),
            centroid: None,
            position: GeodeticPoint::new(row.lat, row.lon)?,
            median_rx_power: None,
            path_loss: row.pl_db,
            distance_2d: row.d2d_m,
            distance_3d: row.d3d_m,
            sample_count: row.count,
            los: row.los,
            band: row.band,
        });
    }
    Ok(out)
}
