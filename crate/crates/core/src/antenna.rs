//! Gridded antenna gain patterns and grid-of-beams envelopes.
//!
//! A pattern stores gain in dBi on a uniform azimuth grid covering a full turn
//! and a uniform elevation grid inside [-90, 90]. Angles are relative to the
//! antenna: lookups subtract the mounting azimuth and mechanical tilt first.
//! Lookups interpolate bilinearly in the dB domain, wrapping in azimuth and
//! clamping in elevation.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_TOL: f64 = 1e-6;

/// Result of a pattern lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLookup {
    pub gain_dbi: f64,
    /// The tilt-corrected elevation fell outside the sampled range and was clamped.
    pub elevation_clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaPattern {
    azimuths: Vec<f64>,
    elevations: Vec<f64>,
    /// Row-major by elevation: `gain[ie * azimuths.len() + ia]`.
    gain: Vec<f64>,
    /// Azimuth of the pattern's 0 deg direction, degrees clockwise from north.
    pub boresight_azimuth: f64,
    /// Elevation of the pattern's 0 deg direction, degrees (negative = downtilt).
    pub mechanical_tilt: f64,
}

impl AntennaPattern {
    /// Builds a pattern from its sample grids and elevation-major gain values.
    pub fn new(azimuths: Vec<f64>, elevations: Vec<f64>, gain: Vec<f64>) -> Result<Self> {
        check_uniform("azimuth_samples", &azimuths)?;
        check_uniform("elevation_samples", &elevations)?;
        if azimuths.len() < 2 {
            return Err(Error::validation(
                "azimuth_samples",
                "need at least 2 samples",
            ));
        }
        let az_step = azimuths[1] - azimuths[0];
        if ((az_step * azimuths.len() as f64) - 360.0).abs() > GRID_TOL {
            return Err(Error::validation(
                "azimuth_samples",
                "grid must cover a full turn with uniform step",
            ));
        }
        if azimuths[0] < 0.0 || azimuths[azimuths.len() - 1] >= 360.0 {
            return Err(Error::validation(
                "azimuth_samples",
                "values must lie in [0, 360)",
            ));
        }
        if elevations[0] < -90.0 - GRID_TOL || elevations[elevations.len() - 1] > 90.0 + GRID_TOL {
            return Err(Error::validation(
                "elevation_samples",
                "values must lie in [-90, 90]",
            ));
        }
        if gain.len() != azimuths.len() * elevations.len() {
            return Err(Error::validation(
                "gain",
                format!(
                    "{} values for a {}x{} grid",
                    gain.len(),
                    elevations.len(),
                    azimuths.len()
                ),
            ));
        }
        if gain.iter().any(|g| !g.is_finite()) {
            return Err(Error::validation("gain", "non-finite value"));
        }
        Ok(AntennaPattern {
            azimuths,
            elevations,
            gain,
            boresight_azimuth: 0.0,
            mechanical_tilt: 0.0,
        })
    }

    /// Samples `f(azimuth, elevation)` on a grid with azimuths `0, az_step, ..`
    /// and elevations `el_min, el_min + el_step, .., el_max`.
    pub fn from_fn(
        az_step: f64,
        el_min: f64,
        el_max: f64,
        el_step: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if !(az_step > 0.0 && el_step > 0.0 && el_max >= el_min) {
            return Err(Error::validation("grid", "steps must be positive"));
        }
        let n_az = (360.0 / az_step).round() as usize;
        let n_el = ((el_max - el_min) / el_step).round() as usize + 1;
        let azimuths: Vec<f64> = (0..n_az).map(|i| i as f64 * az_step).collect();
        let elevations: Vec<f64> = (0..n_el).map(|j| el_min + j as f64 * el_step).collect();
        let mut gain = Vec::with_capacity(n_az * n_el);
        for &el in &elevations {
            for &az in &azimuths {
                gain.push(f(az, el));
            }
        }
        Self::new(azimuths, elevations, gain)
    }

    /// Constant-gain pattern on a 1 deg grid.
    pub fn isotropic(gain_dbi: f64) -> Self {
        Self::from_fn(1.0, -90.0, 90.0, 1.0, |_, _| gain_dbi).expect("static grid is valid")
    }

    pub fn with_orientation(mut self, boresight_azimuth: f64, mechanical_tilt: f64) -> Self {
        self.boresight_azimuth = boresight_azimuth;
        self.mechanical_tilt = mechanical_tilt;
        self
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    /// Stored gain at grid node (`azimuth index`, `elevation index`).
    pub fn node(&self, ia: usize, ie: usize) -> f64 {
        self.gain[ie * self.azimuths.len() + ia]
    }

    fn same_grid(&self, other: &AntennaPattern) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= GRID_TOL)
        };
        close(&self.azimuths, &other.azimuths) && close(&self.elevations, &other.elevations)
    }

    /// Gain toward (`azimuth`, `elevation`) given in site coordinates.
    pub fn gain_at(&self, azimuth: f64, elevation: f64) -> GainLookup {
        let n_az = self.azimuths.len();
        let az_step = self.azimuths[1] - self.azimuths[0];
        let rel_az = (azimuth - self.boresight_azimuth - self.azimuths[0]).rem_euclid(360.0);
        let pos = rel_az / az_step;
        let mut ia0 = pos.floor() as usize;
        let mut t = pos - ia0 as f64;
        if ia0 >= n_az {
            ia0 = 0;
            t = 0.0;
        }
        let ia1 = (ia0 + 1) % n_az;

        let el_lo = self.elevations[0];
        let el_hi = self.elevations[self.elevations.len() - 1];
        let mut rel_el = elevation - self.mechanical_tilt;
        let elevation_clamped = rel_el < el_lo || rel_el > el_hi;
        rel_el = rel_el.clamp(el_lo, el_hi);

        let n_el = self.elevations.len();
        let (ie0, ie1, u) = if n_el == 1 {
            (0, 0, 0.0)
        } else {
            let el_step = self.elevations[1] - el_lo;
            let pos = (rel_el - el_lo) / el_step;
            let ie0 = (pos.floor() as usize).min(n_el - 2);
            (ie0, ie0 + 1, (pos - ie0 as f64).clamp(0.0, 1.0))
        };

        let g00 = self.node(ia0, ie0);
        let g10 = self.node(ia1, ie0);
        let g01 = self.node(ia0, ie1);
        let g11 = self.node(ia1, ie1);
        let gain_dbi =
            (1.0 - t) * (1.0 - u) * g00 + t * (1.0 - u) * g10 + (1.0 - t) * u * g01 + t * u * g11;
        GainLookup {
            gain_dbi,
            elevation_clamped,
        }
    }

    pub fn peak_gain(&self) -> f64 {
        self.gain.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Reads the `azimuth_deg,elevation_deg,gain_dbi` CSV format. Row order is free;
    /// every grid node must appear exactly once.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["azimuth_deg", "elevation_deg", "gain_dbi"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse {
                line: 1,
                reason: format!("expected header {}", expected.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let record = record?;
            let field = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse {
                        line,
                        reason: format!("bad {} value", expected[k]),
                    })
            };
            rows.push((field(0)?, field(1)?, field(2)?));
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                reason: "pattern file has no rows".into(),
            });
        }
        let azimuths = distinct_sorted(rows.iter().map(|r| r.0.rem_euclid(360.0)));
        let elevations = distinct_sorted(rows.iter().map(|r| r.1));
        let n_az = azimuths.len();
        let mut gain = vec![f64::NAN; n_az * elevations.len()];
        for &(az, el, g) in &rows {
            let ia = nearest_index(&azimuths, az.rem_euclid(360.0));
            let ie = nearest_index(&elevations, el);
            let slot = &mut gain[ie * n_az + ia];
            if !slot.is_nan() {
                return Err(Error::validation(
                    "pattern",
                    format!("duplicate node at azimuth {az}, elevation {el}"),
                ));
            }
            *slot = g;
        }
        if gain.iter().any(|g| g.is_nan()) {
            return Err(Error::validation("pattern", "grid has missing nodes"));
        }
        Self::new(azimuths, elevations, gain)
    }

    /// Writes azimuth-major rows (azimuth outer, elevation inner).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["azimuth_deg", "elevation_deg", "gain_dbi"])?;
        for (ia, az) in self.azimuths.iter().enumerate() {
            for (ie, el) in self.elevations.iter().enumerate() {
                w.write_record([
                    az.to_string(),
                    el.to_string(),
                    self.node(ia, ie).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<pattern>", e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn check_uniform(field: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::validation(field, "empty grid"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(field, "non-finite sample"));
    }
    if values.len() < 2 {
        return Ok(());
    }
    let step = values[1] - values[0];
    if step <= 0.0 {
        return Err(Error::validation(field, "samples must increase"));
    }
    for w in values.windows(2) {
        if ((w[1] - w[0]) - step).abs() > GRID_TOL * step.max(1.0) {
            return Err(Error::validation(field, "non-uniform step"));
        }
    }
    Ok(())
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= GRID_TOL);
    v
}

fn nearest_index(sorted: &[f64], x: f64) -> usize {
    let i = sorted.partition_point(|&v| v < x - GRID_TOL);
    i.min(sorted.len() - 1)
}

/// Grid of beams sharing one sample grid, e.g. 3 rows x 16 columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    beams: Vec<AntennaPattern>,
    pub rows: usize,
    pub columns: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamManifest {
    pub rows: usize,
    pub columns: usize,
    pub beams: Vec<BeamEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamEntry {
    pub id: usize,
    pub file: String,
}

impl BeamSet {
    pub fn new(beams: Vec<AntennaPattern>, rows: usize, columns: usize) -> Result<Self> {
        let first = beams
            .first()
            .ok_or_else(|| Error::validation("beams", "beam set is empty"))?;
        if let Some(i) = beams.iter().position(|b| !b.same_grid(first)) {
            return Err(Error::validation(
                "beams",
                format!("beam {i} does not share the sample grid of beam 0"),
            ));
        }
        if rows * columns != beams.len() {
            return Err(Error::validation(
                "layout",
                format!("{rows}x{columns} layout for {} beams", beams.len()),
            ));
        }
        Ok(BeamSet {
            beams,
            rows,
            columns,
        })
    }

    pub fn beams(&self) -> &[AntennaPattern] {
        &self.beams
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Pointwise maximum over all beams; orientation is taken from the first beam.
    pub fn envelope(&self) -> AntennaPattern {
        let mut env = self.beams[0].clone();
        for beam in &self.beams[1..] {
            for (e, g) in env.gain.iter_mut().zip(&beam.gain) {
                *e = e.max(*g);
            }
        }
        env
    }

    /// Synthetic grid of Gaussian-lobe beams.
    ///
    /// Columns are spread evenly over `az_span` centered on boresight, rows step
    /// down from 0 deg by `el_span / rows`. Each lobe peaks at `peak_dbi` on a
    /// grid node when the centers fall on the sample grid, rolls off 3 dB at
    /// half the beam spacing and is floored 45 dB below peak.
    pub fn synthetic_grid(
        rows: usize,
        columns: usize,
        peak_dbi: f64,
        az_span: f64,
        el_span: f64,
        grid_step: f64,
    ) -> Result<Self> {
        if rows == 0 || columns == 0 {
            return Err(Error::validation(
                "layout",
                "rows and columns must be positive",
            ));
        }
        let az_spacing = if columns > 1 {
            az_span / (columns - 1) as f64
        } else {
            az_span
        };
        let el_spacing = el_span / rows as f64;
        let mut beams = Vec::with_capacity(rows * columns);
        for r in 0..rows {
            let el_c = -(r as f64) * el_spacing;
            for c in 0..columns {
                let az_c = -az_span / 2.0 + c as f64 * az_spacing;
                beams.push(AntennaPattern::from_fn(
                    grid_step,
                    -90.0,
                    90.0,
                    grid_step,
                    |az, el| {
                        let daz = (az - az_c + 180.0).rem_euclid(360.0) - 180.0;
                        let del = el - el_c;
                        let rolloff =
                            12.0 * ((daz / az_spacing).powi(2) + (del / el_spacing).powi(2));
                        peak_dbi - rolloff.min(45.0)
                    },
                )?);
            }
        }
        BeamSet::new(beams, rows, columns)
    }

    /// Loads `manifest.json` and the per-beam CSV files it names from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("manifest.json");
        let text =
            std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let mut manifest: BeamManifest = serde_json::from_str(&text)?;
        manifest.beams.sort_by_key(|b| b.id);
        let beams = manifest
            .beams
            .iter()
            .map(|b| AntennaPattern::load(&dir.join(&b.file)))
            .collect::<Result<Vec<_>>>()?;
        BeamSet::new(beams, manifest.rows, manifest.columns)
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.beams.len());
        for (id, beam) in self.beams.iter().enumerate() {
            let file = format!("beam_{id:02}.csv");
            beam.save(&dir.join(&file))?;
            entries.push(BeamEntry { id, file });
        }
        let manifest = BeamManifest {
            rows: self.rows,
            columns: self.columns,
            beams: entries,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .map_err(|e| Error::io(&path, e))
    }
}
