//! Measurement log, site configuration and indoor-session parsers.
//!
//! Vendor formats are not read directly. Exporters produce one of two CSV
//! layouts (UTF-8, `.` decimal separator):
//!
//! * testbed: `timestamp_ms,lat,lon,mrsrp_00,..,mrsrp_47`, one row per beam
//!   sweep period; an empty cell means the beam was not received.
//! * scanner: `timestamp_ms,lat,lon,cell_id,rsrp_dbm`, one row per cell report.
//!
//! Both are normalized into [`MeasurementSample`]s, which can be written to and
//! read back from the canonical sample CSV.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeodeticPoint;

pub const MIN_RX_POWER_DBM: f64 = -160.0;
pub const MAX_RX_POWER_DBM: f64 = 0.0;

pub const TESTBED_BAND: &str = "3.5GHz";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Testbed,
    Scanner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSample {
    /// Milliseconds since the Unix epoch, UTC.
    pub timestamp_ms: u64,
    pub position: GeodeticPoint,
    /// dBm.
    pub received_power: f64,
    pub band: String,
    pub source: Source,
    pub beam_id: Option<u32>,
    pub cell_id: Option<u32>,
}

impl MeasurementSample {
    pub fn validate(&self) -> Result<()> {
        if self.timestamp_ms == 0 {
            return Err(Error::validation("timestamp_ms", "must be positive"));
        }
        self.position.validate()?;
        if !(MIN_RX_POWER_DBM..=MAX_RX_POWER_DBM).contains(&self.received_power) {
            return Err(Error::validation(
                "received_power",
                format!(
                    "{} dBm outside [{MIN_RX_POWER_DBM}, {MAX_RX_POWER_DBM}]",
                    self.received_power
                ),
            ));
        }
        Ok(())
    }
}

/// Samples parsed from one log plus row accounting.
///
/// `rows_read == samples.len() + skipped + filtered`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub samples: Vec<MeasurementSample>,
    pub rows_read: usize,
    /// Rows without any usable power value.
    pub skipped: usize,
    /// Rows dropped by a cell filter.
    pub filtered: usize,
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_error_line(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T> {
    let raw = record.get(idx).unwrap_or("");
    raw.parse::<T>().map_err(|_| Error::Parse {
        line: line_of(record),
        reason: format!("bad {name} value {raw:?}"),
    })
}

fn validated(sample: MeasurementSample, line: u64) -> Result<MeasurementSample> {
    sample
        .validate()
        .map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })
        .map(|_| sample)
}

fn reader_for<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader)
}

fn next_records<R: Read>(
    rdr: &mut csv::Reader<R>,
) -> impl Iterator<Item = Result<csv::StringRecord>> + '_ {
    rdr.records().map(|r| {
        r.map_err(|e| Error::Parse {
            line: csv_error_line(&e),
            reason: e.to_string(),
        })
    })
}

/// Parses a testbed beam log. The received power of a row is the strongest
/// beam, and its beam id the lowest index among equally strong beams.
pub fn parse_testbed_log<R: Read>(reader: R, band: &str) -> Result<ParseOutcome> {
    let mut rdr = reader_for(reader);
    let headers = rdr.headers()?.clone();
    let beam_ids = testbed_beam_columns(&headers)?;

    let mut out = ParseOutcome::default();
    for record in next_records(&mut rdr) {
        let record = record?;
        out.rows_read += 1;
        let line = line_of(&record);
        let timestamp_ms: u64 = parse_field(&record, 0, "timestamp_ms")?;
        let lat: f64 = parse_field(&record, 1, "lat")?;
        let lon: f64 = parse_field(&record, 2, "lon")?;

        let mut best: Option<(u32, f64)> = None;
        for (k, &beam) in beam_ids.iter().enumerate() {
            let cell = record.get(3 + k).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let p: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                reason: format!("bad mrsrp_{beam:02} value {cell:?}"),
            })?;
            if !p.is_finite() {
                return Err(Error::Parse {
                    line,
                    reason: format!("non-finite mrsrp_{beam:02}"),
                });
            }
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((beam, p));
            }
        }
        let Some((beam, power)) = best else {
            out.skipped += 1;
            continue;
        };
        let sample = MeasurementSample {
            timestamp_ms,
            position: GeodeticPoint {
                latitude: lat,
                longitude: lon,
                altitude_agl: 0.0,
            },
            received_power: power,
            band: band.to_string(),
            source: Source::Testbed,
            beam_id: Some(beam),
            cell_id: None,
        };
        out.samples.push(validated(sample, line)?);
    }
    if out.skipped > 0 {
        log::warn!("skipped {} testbed rows with no received beam", out.skipped);
    }
    Ok(out)
}

fn testbed_beam_columns(headers: &csv::StringRecord) -> Result<Vec<u32>> {
    let bad = |reason: String| Error::Parse { line: 1, reason };
    let fixed = ["timestamp_ms", "lat", "lon"];
    if headers.len() < 4 || headers.iter().zip(fixed).any(|(h, f)| h != f) {
        return Err(bad(
            "expected header timestamp_ms,lat,lon,mrsrp_00,..".to_string()
        ));
    }
    headers
        .iter()
        .skip(3)
        .map(|h| {
            h.strip_prefix("mrsrp_")
                .and_then(|n| n.parse::<u32>().ok())
                .ok_or_else(|| bad(format!("unexpected beam column {h:?}")))
        })
        .collect()
}

/// Parses a scanner log, keeping only rows of `cells_of_interest`.
pub fn parse_scanner_log<R: Read>(
    reader: R,
    cells_of_interest: &BTreeSet<u32>,
    band: &str,
) -> Result<ParseOutcome> {
    let mut rdr = reader_for(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["timestamp_ms", "lat", "lon", "cell_id", "rsrp_dbm"];
    if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header {}", expected.join(",")),
        });
    }
    if cells_of_interest.is_empty() {
        log::warn!("scanner log parsed with an empty cell filter");
    }

    let mut out = ParseOutcome::default();
    for record in next_records(&mut rdr) {
        let record = record?;
        out.rows_read += 1;
        let line = line_of(&record);
        let timestamp_ms: u64 = parse_field(&record, 0, "timestamp_ms")?;
        let lat: f64 = parse_field(&record, 1, "lat")?;
        let lon: f64 = parse_field(&record, 2, "lon")?;
        let cell: u32 = parse_field(&record, 3, "cell_id")?;
        let rsrp: f64 = parse_field(&record, 4, "rsrp_dbm")?;
        if !cells_of_interest.contains(&cell) {
            out.filtered += 1;
            continue;
        }
        let sample = MeasurementSample {
            timestamp_ms,
            position: GeodeticPoint {
                latitude: lat,
                longitude: lon,
                altitude_agl: 0.0,
            },
            received_power: rsrp,
            band: band.to_string(),
            source: Source::Scanner,
            beam_id: None,
            cell_id: Some(cell),
        };
        out.samples.push(validated(sample, line)?);
    }
    if out.samples.is_empty() {
        log::warn!("scanner log yielded no samples for cells {cells_of_interest:?}");
    }
    Ok(out)
}

/// One testbed log row as written by exporters (and the synthetic generator).
#[derive(Debug, Clone, PartialEq)]
pub struct TestbedRow {
    pub timestamp_ms: u64,
    pub lat: f64,
    pub lon: f64,
    /// Per-beam MRSRP in dBm, `None` when not received.
    pub beams: Vec<Option<f64>>,
}

pub fn write_testbed_log<W: Write>(writer: W, n_beams: usize, rows: &[TestbedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "timestamp_ms".to_string(),
        "lat".to_string(),
        "lon".to_string(),
    ];
    header.extend((0..n_beams).map(|b| format!("mrsrp_{b:02}")));
    w.write_record(&header)?;
    for row in rows {
        if row.beams.len() != n_beams {
            return Err(Error::validation(
                "beams",
                format!("row has {} beams, header {n_beams}", row.beams.len()),
            ));
        }
        let mut rec = vec![
            row.timestamp_ms.to_string(),
            row.lat.to_string(),
            row.lon.to_string(),
        ];
        rec.extend(
            row.beams
                .iter()
                .map(|b| b.map(|p| format!("{p:.2}")).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<testbed log>", e))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    timestamp_ms: u64,
    lat: f64,
    lon: f64,
    rx_power_dbm: f64,
    band: String,
    source: Source,
    beam_id: Option<u32>,
    cell_id: Option<u32>,
}

/// Writes the canonical sample CSV
/// `timestamp_ms,lat,lon,rx_power_dbm,band,source,beam_id,cell_id`.
pub fn write_samples<W: Write>(writer: W, samples: &[MeasurementSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(SampleRow {
            timestamp_ms: s.timestamp_ms,
            lat: s.position.latitude,
            lon: s.position.longitude,
            rx_power_dbm: s.received_power,
            band: s.band.clone(),
            source: s.source,
            beam_id: s.beam_id,
            cell_id: s.cell_id,
        })?;
    }
    w.flush().map_err(|e| Error::io("<samples>", e))?;
    Ok(())
}

pub fn read_samples<R: Read>(reader: R) -> Result<Vec<MeasurementSample>> {
    let mut rdr = reader_for(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<SampleRow>() {
        let row = row.map_err(|e| Error::Parse {
            line: csv_error_line(&e),
            reason: e.to_string(),
        })?;
        let sample = MeasurementSample {
            timestamp_ms: row.timestamp_ms,
            position: GeodeticPoint {
                latitude: row.lat,
                longitude: row.lon,
                altitude_agl: 0.0,
            },
            received_power: row.rx_power_dbm,
            band: row.band,
            source: row.source,
            beam_id: row.beam_id,
            cell_id: row.cell_id,
        };
        sample.validate()?;
        out.push(sample);
    }
    Ok(out)
}

pub fn read_samples_file(path: &Path) -> Result<Vec<MeasurementSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_samples(std::io::BufReader::new(file))
}

// ---------------------------------------------------------------------------
// Site configuration
// ---------------------------------------------------------------------------

/// Transmitter description used for link-budget path-loss extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteConfig {
    pub site_position: GeodeticPoint,
    /// Meters above ground.
    pub antenna_height_agl: f64,
    /// Degrees clockwise from north.
    pub boresight_azimuth: f64,
    /// Degrees, negative = downtilt.
    #[serde(default)]
    pub mechanical_tilt: f64,
    /// dBm at the antenna port (or at the feeder input when `feeder_loss` is set).
    pub tx_power: f64,
    /// GHz.
    pub carrier_freq: f64,
    /// Pattern CSV, relative paths resolve against the config file's directory.
    pub pattern_ref: PathBuf,
    /// Receive antenna gain including cable loss, dB.
    pub rx_gain: f64,
    /// Meters above ground.
    pub ue_height: f64,
    #[serde(default)]
    pub feeder_loss: f64,
}

impl SiteConfig {
    pub fn validate(&self) -> Result<()> {
        self.site_position.validate()?;
        if !(self.tx_power > 0.0 && self.tx_power <= 90.0) {
            return Err(Error::validation(
                "tx_power",
                format!("{} dBm outside (0, 90]", self.tx_power),
            ));
        }
        for (name, v) in [
            ("antenna_height_agl", self.antenna_height_agl),
            ("ue_height", self.ue_height),
            ("carrier_freq", self.carrier_freq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(
                    name,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("boresight_azimuth", self.boresight_azimuth),
            ("mechanical_tilt", self.mechanical_tilt),
            ("rx_gain", self.rx_gain),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, "not finite"));
            }
        }
        if !(self.feeder_loss >= 0.0 && self.feeder_loss.is_finite()) {
            return Err(Error::validation("feeder_loss", "must be non-negative"));
        }
        Ok(())
    }

    /// Transmit power referred to the antenna port.
    pub fn effective_tx_power(&self) -> f64 {
        self.tx_power - self.feeder_loss
    }

    pub fn resolve_pattern(&self, config_dir: &Path) -> PathBuf {
        if self.pattern_ref.is_absolute() {
            self.pattern_ref.clone()
        } else {
            config_dir.join(&self.pattern_ref)
        }
    }
}

pub fn parse_site_config(text: &str) -> Result<SiteConfig> {
    let cfg: SiteConfig = serde_json::from_str(text).map_err(|e| {
        // serde reports `missing field `x`` with the field name
        Error::validation("site config", e.to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_site_config(path: &Path) -> Result<SiteConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_site_config(&text)
}

// ---------------------------------------------------------------------------
// Indoor sessions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct IndoorSession {
    pub building_id: String,
    pub floor: i32,
    pub indoor_samples: Vec<MeasurementSample>,
    pub outdoor_reference: Vec<MeasurementSample>,
}

impl IndoorSession {
    pub fn new(
        building_id: impl Into<String>,
        floor: i32,
        indoor_samples: Vec<MeasurementSample>,
        outdoor_reference: Vec<MeasurementSample>,
    ) -> Result<Self> {
        let building_id = building_id.into();
        if indoor_samples.is_empty() {
            return Err(Error::validation(
                format!("building {building_id} floor {floor}"),
                "no indoor samples",
            ));
        }
        if outdoor_reference.is_empty() {
            return Err(Error::validation(
                format!("building {building_id} floor {floor}"),
                "missing outdoor reference samples",
            ));
        }
        Ok(IndoorSession {
            building_id,
            floor,
            indoor_samples,
            outdoor_reference,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndoorManifest {
    pub sessions: Vec<IndoorManifestEntry>,
}

/// One building/floor, referencing two canonical sample CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndoorManifestEntry {
    pub building_id: String,
    #[serde(default)]
    pub floor: i32,
    pub indoor: PathBuf,
    #[serde(default)]
    pub outdoor: Option<PathBuf>,
}

/// Loads every session of a manifest; paths resolve against the manifest's directory.
pub fn load_indoor_manifest(path: &Path) -> Result<Vec<IndoorSession>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: IndoorManifest = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    manifest
        .sessions
        .iter()
        .map(|entry| {
            let outdoor = match &entry.outdoor {
                Some(p) => read_samples_file(&base.join(p))?,
                None => Vec::new(),
            };
            let indoor = read_samples_file(&base.join(&entry.indoor))?;
            IndoorSession::new(entry.building_id.clone(), entry.floor, indoor, outdoor)
        })
        .collect()
}
