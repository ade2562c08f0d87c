//! Closed-form empirical path-loss models.
//!
//! Every model returns a deterministic mean path loss in dB together with any
//! validity warnings. Evaluation outside a model's published frequency,
//! distance or height range is allowed and flagged, never refused: field
//! campaigns routinely apply SUI below 2 m UE height or ECC-33 below 1 km.
//!
//! Distance conventions: single-distance models (FSPL, log-distance, SUI,
//! ECC-33, WINNER II, Hata family) use the slant distance `d3d`. TR 38.901
//! uses `d2d` for breakpoints and validity and `d3d` inside its formulas, as
//! the standard does. The two-ray model works on ground distance and heights.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuiTerrain {
    /// Hilly terrain, moderate-to-heavy tree density (highest loss).
    A,
    /// Intermediate.
    B,
    /// Mostly flat terrain, light tree density (lowest loss).
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WinnerScenario {
    /// Suburban macro-cell.
    C1,
    /// Typical urban macro-cell.
    C2,
    /// Rural macro-cell.
    D1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrScenario {
    Rma,
    Uma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HataVariant {
    HataOkumura,
    Cost231,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Environment {
    Urban,
    Suburban,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CitySize {
    Small,
    #[default]
    Medium,
    Large,
}

/// Identifier of a model variant, with its condition or environment folded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelId {
    Fspl,
    /// Log-distance model with explicit parameters.
    LogDistance {
        a0: f64,
        gamma: f64,
        d0: f64,
    },
    Sui(SuiTerrain),
    Ecc33,
    Winner2(WinnerScenario, Condition),
    Tr38901(TrScenario, Condition),
    Hata(HataVariant, Environment),
    TwoRay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    FrequencyOutOfRange,
    DistanceOutOfRange,
    BsHeightOutOfRange,
    UtHeightOutOfRange,
    DefaultBuildingHeight,
    DefaultStreetWidth,
    BuildingHeightOutOfRange,
    StreetWidthOutOfRange,
    /// Two-ray evaluated inside the critical distance, where the field oscillates.
    BelowCriticalDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub loss_db: f64,
    pub warnings: Vec<Warning>,
}

impl Prediction {
    fn new(loss_db: f64, warnings: Vec<Warning>) -> Self {
        Prediction { loss_db, warnings }
    }
}

/// Link geometry and environment parameters shared by the model suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Horizontal BS-UE distance, meters.
    pub d2d: f64,
    /// Slant BS-UE distance, meters.
    pub d3d: f64,
    /// Carrier frequency, GHz.
    pub freq_ghz: f64,
    /// BS antenna height above ground, meters.
    pub h_bs: f64,
    /// UE antenna height above ground, meters.
    pub h_ut: f64,
    /// TR 38.901 RMa average building height `h` (default 5 m).
    #[serde(default)]
    pub avg_building_height: Option<f64>,
    /// TR 38.901 RMa average street width `W` (default 20 m).
    #[serde(default)]
    pub avg_street_width: Option<f64>,
    #[serde(default)]
    pub city_size: CitySize,
}

impl LinkGeometry {
    /// Geometry at horizontal distance `d2d`, with `d3d` derived from the heights.
    pub fn new(d2d: f64, h_bs: f64, h_ut: f64, freq_ghz: f64) -> Self {
        LinkGeometry {
            d2d,
            d3d: d2d.hypot(h_bs - h_ut),
            freq_ghz,
            h_bs,
            h_ut,
            avg_building_height: None,
            avg_street_width: None,
            city_size: CitySize::Medium,
        }
    }

    /// Same link at another horizontal distance.
    pub fn at_distance(&self, d2d: f64) -> Self {
        LinkGeometry {
            d2d,
            d3d: d2d.hypot(self.h_bs - self.h_ut),
            ..*self
        }
    }

    /// Same link at explicit 2D and 3D distances (bins carry both).
    pub fn at_distances(&self, d2d: f64, d3d: f64) -> Self {
        LinkGeometry { d2d, d3d, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d2d", self.d2d),
            ("d3d", self.d3d),
            ("freq_ghz", self.freq_ghz),
            ("h_bs", self.h_bs),
            ("h_ut", self.h_ut),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.d3d < self.d2d * (1.0 - 1e-12) {
            return Err(Error::domain(format!(
                "d3d {} shorter than d2d {}",
                self.d3d, self.d2d
            )));
        }
        for (name, v) in [
            ("avg_building_height", self.avg_building_height),
            ("avg_street_width", self.avg_street_width),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::domain(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (self.freq_ghz * 1e9)
    }
}

/// Validity ranges and published shadow-fading deviation of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub freq_range_ghz: (f64, f64),
    pub dist_range_m: (f64, f64),
    pub published_sigma_db: Option<f64>,
}

fn flag(range: (f64, f64), value: f64, warning: Warning, out: &mut Vec<Warning>) {
    if value < range.0 || value > range.1 {
        out.push(warning);
    }
}

// ---------------------------------------------------------------------------
// Free space and log-distance
// ---------------------------------------------------------------------------

pub fn fspl(g: &LinkGeometry) -> Result<Prediction> {
    g.validate()?;
    Ok(Prediction::new(fspl_db(g.d3d, g.freq_ghz), Vec::new()))
}

/// Free-space loss for `d_m` meters at `f_ghz` GHz.
pub fn fspl_db(d_m: f64, f_ghz: f64) -> f64 {
    20.0 * d_m.log10() + 20.0 * f_ghz.log10() + 32.45
}

/// Deterministic part of the log-distance model, `a0 + 10 gamma log10(d / d0)`.
pub fn log_distance(d: f64, a0: f64, gamma: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("distance must be positive, got {d}")));
    }
    if !(d0 > 0.0) {
        return Err(Error::domain(format!(
            "reference distance must be positive, got {d0}"
        )));
    }
    Ok(a0 + 10.0 * gamma * (d / d0).log10())
}

// ---------------------------------------------------------------------------
// SUI (IEEE 802.16)
// ---------------------------------------------------------------------------

const SUI_D0: f64 = 100.0;

fn sui_constants(terrain: SuiTerrain) -> (f64, f64, f64) {
    match terrain {
        SuiTerrain::A => (4.6, 0.0075, 12.6),
        SuiTerrain::B => (4.0, 0.0065, 17.1),
        SuiTerrain::C => (3.6, 0.005, 20.0),
    }
}

/// SUI path-loss exponent `a - b h_bs + c / h_bs`.
pub fn sui_exponent(terrain: SuiTerrain, h_bs: f64) -> f64 {
    let (a, b, c) = sui_constants(terrain);
    a - b * h_bs + c / h_bs
}

/// SUI frequency correction, zero at 2000 MHz.
pub fn sui_frequency_correction(freq_ghz: f64) -> f64 {
    6.0 * (freq_ghz * 1000.0 / 2000.0).log10()
}

/// SUI receive-height correction, zero at 2 m.
pub fn sui_height_correction(terrain: SuiTerrain, h_ut: f64) -> f64 {
    let k = match terrain {
        SuiTerrain::A | SuiTerrain::B => 10.8,
        SuiTerrain::C => 20.0,
    };
    -k * (h_ut / 2.0).log10()
}

pub fn sui(g: &LinkGeometry, terrain: SuiTerrain) -> Result<Prediction> {
    g.validate()?;
    let mut w = Vec::new();
    flag((1.0, 4.0), g.freq_ghz, Warning::FrequencyOutOfRange, &mut w);
    flag((100.0, 8000.0), g.d3d, Warning::DistanceOutOfRange, &mut w);
    flag((10.0, 80.0), g.h_bs, Warning::BsHeightOutOfRange, &mut w);
    flag((2.0, 10.0), g.h_ut, Warning::UtHeightOutOfRange, &mut w);

    let intercept = 20.0 * (4.0 * std::f64::consts::PI * SUI_D0 / g.wavelength()).log10();
    let gamma = sui_exponent(terrain, g.h_bs);
    let loss = intercept
        + 10.0 * gamma * (g.d3d / SUI_D0).log10()
        + sui_frequency_correction(g.freq_ghz)
        + sui_height_correction(terrain, g.h_ut);
    Ok(Prediction::new(loss, w))
}

// ---------------------------------------------------------------------------
// ECC-33
// ---------------------------------------------------------------------------

/// The four ECC-33 terms `(A_fs, A_bm, G_b, G_r)`; the loss is `A_fs + A_bm - G_b - G_r`.
pub fn ecc33_terms(g: &LinkGeometry) -> (f64, f64, f64, f64) {
    let d = (g.d3d / 1000.0).log10();
    let f = g.freq_ghz.log10();
    let free_space = 92.4 + 20.0 * d + 20.0 * f;
    let median_basic = 20.41 + 9.83 * d + 7.894 * f + 9.56 * f * f;
    let bs_gain = (g.h_bs / 200.0).log10() * (13.958 + 5.8 * d * d);
    let ue_gain = match g.city_size {
        CitySize::Large => 0.759 * g.h_ut - 1.862,
        CitySize::Small | CitySize::Medium => (42.57 + 13.7 * f) * (g.h_ut.log10() - 0.585),
    };
    (free_space, median_basic, bs_gain, ue_gain)
}

/// ECC-33; the UE gain term uses the medium-city form unless `city_size` is large.
pub fn ecc33(g: &LinkGeometry) -> Result<Prediction> {
    g.validate()?;
    let mut w = Vec::new();
    flag((3.4, 3.8), g.freq_ghz, Warning::FrequencyOutOfRange, &mut w);
    flag(
        (1000.0, 10_000.0),
        g.d3d,
        Warning::DistanceOutOfRange,
        &mut w,
    );
    let (afs, abm, gb, gr) = ecc33_terms(g);
    Ok(Prediction::new(afs + abm - gb - gr, w))
}

// ---------------------------------------------------------------------------
// WINNER II
// ---------------------------------------------------------------------------

/// LOS breakpoint distance of a WINNER II scenario.
///
/// C2 uses effective heights (actual minus 1 m); C1 and D1 use actual heights.
pub fn winner2_breakpoint(g: &LinkGeometry, scenario: WinnerScenario) -> f64 {
    let f_hz = g.freq_ghz * 1e9;
    match scenario {
        WinnerScenario::C2 => 4.0 * (g.h_bs - 1.0) * (g.h_ut - 1.0) * f_hz / SPEED_OF_LIGHT,
        WinnerScenario::C1 | WinnerScenario::D1 => 4.0 * g.h_bs * g.h_ut * f_hz / SPEED_OF_LIGHT,
    }
}

pub fn winner2(
    g: &LinkGeometry,
    scenario: WinnerScenario,
    condition: Condition,
) -> Result<Prediction> {
    g.validate()?;
    let mut w = Vec::new();
    flag((2.0, 6.0), g.freq_ghz, Warning::FrequencyOutOfRange, &mut w);
    flag((50.0, 5000.0), g.d3d, Warning::DistanceOutOfRange, &mut w);

    let d = g.d3d;
    let lf = (g.freq_ghz / 5.0).log10();
    let (hb, hm) = (g.h_bs, g.h_ut);
    let loss = match (scenario, condition) {
        (WinnerScenario::C1, Condition::Los) => {
            if d < winner2_breakpoint(g, scenario) {
                23.8 * d.log10() + 41.2 + 20.0 * lf
            } else {
                40.0 * d.log10() + 11.65 - 16.2 * hb.log10() - 16.2 * hm.log10() + 3.8 * lf
            }
        }
        (WinnerScenario::C1, Condition::Nlos) => {
            (44.9 - 6.55 * hb.log10()) * d.log10() + 31.46 + 5.83 * hb.log10() + 23.0 * lf
        }
        (WinnerScenario::C2, Condition::Los) => {
            if d < winner2_breakpoint(g, scenario) {
                26.0 * d.log10() + 39.0 + 20.0 * lf
            } else {
                if hb <= 1.0 || hm <= 1.0 {
                    return Err(Error::domain(
                        "WINNER II C2 LOS needs antenna heights above 1 m",
                    ));
                }
                40.0 * d.log10() + 13.47 - 14.0 * (hb - 1.0).log10() - 14.0 * (hm - 1.0).log10()
                    + 6.0 * lf
            }
        }
        (WinnerScenario::C2, Condition::Nlos) => {
            (44.9 - 6.55 * hb.log10()) * d.log10() + 34.46 + 5.83 * hb.log10() + 23.0 * lf
        }
        (WinnerScenario::D1, Condition::Los) => {
            if d < winner2_breakpoint(g, scenario) {
                21.5 * d.log10() + 44.2 + 20.0 * lf
            } else {
                40.0 * d.log10() + 10.5 - 18.5 * hb.log10() - 18.5 * hm.log10() + 1.5 * lf
            }
        }
        (WinnerScenario::D1, Condition::Nlos) => {
            25.1 * d.log10() + 55.4 - 0.13 * (hb - 25.0) * (d / 100.0).log10() - 0.9 * (hm - 1.5)
                + 21.3 * lf
        }
    };
    Ok(Prediction::new(loss, w))
}

// ---------------------------------------------------------------------------
// 3GPP TR 38.901
// ---------------------------------------------------------------------------

const RMA_DEFAULT_BUILDING_HEIGHT: f64 = 5.0;
const RMA_DEFAULT_STREET_WIDTH: f64 = 20.0;

/// RMa LOS breakpoint `2 pi h_bs h_ut f / c` (horizontal distance).
pub fn rma_breakpoint(g: &LinkGeometry) -> f64 {
    2.0 * std::f64::consts::PI * g.h_bs * g.h_ut * g.freq_ghz * 1e9 / SPEED_OF_LIGHT
}

/// UMa LOS breakpoint `4 h'_bs h'_ut f / c` with 1 m effective environment height.
pub fn uma_breakpoint(g: &LinkGeometry) -> f64 {
    4.0 * (g.h_bs - 1.0) * (g.h_ut - 1.0) * g.freq_ghz * 1e9 / SPEED_OF_LIGHT
}

fn rma_los_segment1(d3d: f64, f: f64, h: f64) -> f64 {
    let hp = h.powf(1.72);
    20.0 * (40.0 * std::f64::consts::PI * d3d * f / 3.0).log10()
        + (0.03 * hp).min(10.0) * d3d.log10()
        - (0.044 * hp).min(14.77)
        + 0.002 * h.log10() * d3d
}

fn rma_los(g: &LinkGeometry, h: f64) -> f64 {
    let d_bp = rma_breakpoint(g);
    if g.d2d <= d_bp {
        rma_los_segment1(g.d3d, g.freq_ghz, h)
    } else {
        // Anchor the second slope at the slant distance of the breakpoint so the
        // two segments meet exactly.
        let d3d_bp = d_bp.hypot(g.h_bs - g.h_ut);
        rma_los_segment1(d3d_bp, g.freq_ghz, h) + 40.0 * (g.d3d / d3d_bp).log10()
    }
}

fn rma_nlos_prime(g: &LinkGeometry, h: f64, w: f64) -> f64 {
    let hb = g.h_bs;
    161.04 - 7.1 * w.log10() + 7.5 * h.log10() - (24.37 - 3.7 * (h / hb).powi(2)) * hb.log10()
        + (43.42 - 3.1 * hb.log10()) * (g.d3d.log10() - 3.0)
        + 20.0 * g.freq_ghz.log10()
        - (3.2 * (11.75 * g.h_ut).log10().powi(2) - 4.97)
}

fn uma_los(g: &LinkGeometry) -> f64 {
    let f = 20.0 * g.freq_ghz.log10();
    let d_bp = uma_breakpoint(g);
    if g.d2d <= d_bp {
        28.0 + 22.0 * g.d3d.log10() + f
    } else {
        28.0 + 40.0 * g.d3d.log10() + f - 9.0 * (d_bp.powi(2) + (g.h_bs - g.h_ut).powi(2)).log10()
    }
}

fn uma_nlos_prime(g: &LinkGeometry) -> f64 {
    13.54 + 39.08 * g.d3d.log10() + 20.0 * g.freq_ghz.log10() - 0.6 * (g.h_ut - 1.5)
}

pub fn tr38901(g: &LinkGeometry, scenario: TrScenario, condition: Condition) -> Result<Prediction> {
    g.validate()?;
    let mut w = Vec::new();
    flag(
        (0.5, 100.0),
        g.freq_ghz,
        Warning::FrequencyOutOfRange,
        &mut w,
    );
    let max_d = match (scenario, condition) {
        (TrScenario::Rma, Condition::Los) => 10_000.0,
        _ => 5000.0,
    };
    flag((10.0, max_d), g.d2d, Warning::DistanceOutOfRange, &mut w);

    let loss = match scenario {
        TrScenario::Rma => {
            flag((10.0, 150.0), g.h_bs, Warning::BsHeightOutOfRange, &mut w);
            flag((1.0, 10.0), g.h_ut, Warning::UtHeightOutOfRange, &mut w);
            let h = g.avg_building_height.unwrap_or_else(|| {
                w.push(Warning::DefaultBuildingHeight);
                RMA_DEFAULT_BUILDING_HEIGHT
            });
            let width = g.avg_street_width.unwrap_or_else(|| {
                w.push(Warning::DefaultStreetWidth);
                RMA_DEFAULT_STREET_WIDTH
            });
            flag((5.0, 50.0), h, Warning::BuildingHeightOutOfRange, &mut w);
            flag((5.0, 50.0), width, Warning::StreetWidthOutOfRange, &mut w);
            let los = rma_los(g, h);
            match condition {
                Condition::Los => los,
                Condition::Nlos => los.max(rma_nlos_prime(g, h, width)),
            }
        }
        TrScenario::Uma => {
            flag((1.5, 22.5), g.h_ut, Warning::UtHeightOutOfRange, &mut w);
            let los = uma_los(g);
            match condition {
                Condition::Los => los,
                Condition::Nlos => los.max(uma_nlos_prime(g)),
            }
        }
    };
    Ok(Prediction::new(loss, w))
}

// ---------------------------------------------------------------------------
// Hata / COST 231 Hata
// ---------------------------------------------------------------------------

fn mobile_height_correction(f_mhz: f64, h_ut: f64, city: CitySize) -> f64 {
    match city {
        CitySize::Large if f_mhz >= 300.0 => 3.2 * (11.75 * h_ut).log10().powi(2) - 4.97,
        CitySize::Large => 8.29 * (1.54 * h_ut).log10().powi(2) - 1.1,
        CitySize::Small | CitySize::Medium => {
            (1.1 * f_mhz.log10() - 0.7) * h_ut - (1.56 * f_mhz.log10() - 0.8)
        }
    }
}

pub fn hata_family(
    g: &LinkGeometry,
    variant: HataVariant,
    environment: Environment,
) -> Result<Prediction> {
    g.validate()?;
    let f = g.freq_ghz * 1000.0;
    let mut w = Vec::new();
    let band = match variant {
        HataVariant::HataOkumura => (0.15, 1.5),
        HataVariant::Cost231 => (1.5, 2.0),
    };
    flag(band, g.freq_ghz, Warning::FrequencyOutOfRange, &mut w);
    flag(
        (1000.0, 20_000.0),
        g.d3d,
        Warning::DistanceOutOfRange,
        &mut w,
    );
    flag((30.0, 200.0), g.h_bs, Warning::BsHeightOutOfRange, &mut w);
    flag((1.0, 10.0), g.h_ut, Warning::UtHeightOutOfRange, &mut w);

    let lf = f.log10();
    let lhb = g.h_bs.log10();
    let d_term = (44.9 - 6.55 * lhb) * (g.d3d / 1000.0).log10();
    let a_hm = mobile_height_correction(f, g.h_ut, g.city_size);
    let base = match variant {
        HataVariant::HataOkumura => 69.55 + 26.16 * lf - 13.82 * lhb - a_hm + d_term,
        HataVariant::Cost231 => 46.3 + 33.9 * lf - 13.82 * lhb - a_hm + d_term,
    };
    let loss = match environment {
        Environment::Urban => match (variant, g.city_size) {
            (HataVariant::Cost231, CitySize::Large) => base + 3.0,
            _ => base,
        },
        Environment::Suburban => base - 2.0 * (f / 28.0).log10().powi(2) - 5.4,
        Environment::Open => base - 4.78 * lf * lf + 18.33 * lf - 40.94,
    };
    Ok(Prediction::new(loss, w))
}

// ---------------------------------------------------------------------------
// Two-ray ground reflection
// ---------------------------------------------------------------------------

/// Distance beyond which the two-ray loss grows monotonically (`4 h_bs h_ut / lambda`).
pub fn two_ray_critical_distance(g: &LinkGeometry) -> f64 {
    4.0 * g.h_bs * g.h_ut / g.wavelength()
}

/// Direct plus ground-reflected field sum with reflection coefficient -1.
pub fn two_ray(g: &LinkGeometry) -> Result<Prediction> {
    g.validate()?;
    let mut w = Vec::new();
    if g.d2d < two_ray_critical_distance(g) {
        w.push(Warning::BelowCriticalDistance);
    }
    let lambda = g.wavelength();
    let direct = g.d2d.hypot(g.h_bs - g.h_ut);
    let reflected = g.d2d.hypot(g.h_bs + g.h_ut);
    // r2 - r1 without cancellation
    let path_difference = 4.0 * g.h_bs * g.h_ut / (direct + reflected);
    let phase = 2.0 * std::f64::consts::PI * path_difference / lambda;
    let re = 1.0 / direct - phase.cos() / reflected;
    let im = phase.sin() / reflected;
    let magnitude2 = re * re + im * im;
    let loss = 20.0 * (4.0 * std::f64::consts::PI / lambda).log10() - 10.0 * magnitude2.log10();
    Ok(Prediction::new(loss, w))
}

/// Far-field two-ray asymptote `40 log10 d - 20 log10 h_bs - 20 log10 h_ut`.
pub fn two_ray_asymptote(g: &LinkGeometry) -> Result<f64> {
    g.validate()?;
    Ok(40.0 * g.d2d.log10() - 20.0 * g.h_bs.log10() - 20.0 * g.h_ut.log10())
}

// ---------------------------------------------------------------------------
// Dispatch, metadata, catalog
// ---------------------------------------------------------------------------

impl ModelId {
    /// Every closed-form model. The parametric log-distance model is excluded.
    pub fn catalog() -> Vec<ModelId> {
        use Condition::*;
        let mut out = vec![
            ModelId::Fspl,
            ModelId::Sui(SuiTerrain::A),
            ModelId::Sui(SuiTerrain::B),
            ModelId::Sui(SuiTerrain::C),
            ModelId::Ecc33,
        ];
        for s in [WinnerScenario::C1, WinnerScenario::C2, WinnerScenario::D1] {
            out.push(ModelId::Winner2(s, Los));
            out.push(ModelId::Winner2(s, Nlos));
        }
        for s in [TrScenario::Rma, TrScenario::Uma] {
            out.push(ModelId::Tr38901(s, Los));
            out.push(ModelId::Tr38901(s, Nlos));
        }
        for v in [HataVariant::HataOkumura, HataVariant::Cost231] {
            for e in [Environment::Urban, Environment::Suburban, Environment::Open] {
                out.push(ModelId::Hata(v, e));
            }
        }
        out.push(ModelId::TwoRay);
        out
    }

    pub fn predict(&self, g: &LinkGeometry) -> Result<Prediction> {
        match *self {
            ModelId::Fspl => fspl(g),
            ModelId::LogDistance { a0, gamma, d0 } => {
                g.validate()?;
                Ok(Prediction::new(
                    log_distance(g.d3d, a0, gamma, d0)?,
                    Vec::new(),
                ))
            }
            ModelId::Sui(t) => sui(g, t),
            ModelId::Ecc33 => ecc33(g),
            ModelId::Winner2(s, c) => winner2(g, s, c),
            ModelId::Tr38901(s, c) => tr38901(g, s, c),
            ModelId::Hata(v, e) => hata_family(g, v, e),
            ModelId::TwoRay => two_ray(g),
        }
    }

    pub fn meta(&self) -> ModelMeta {
        let (freq, dist, sigma) = match *self {
            ModelId::Fspl => ((0.03, 300.0), (1.0, 100_000.0), None),
            ModelId::LogDistance { d0, .. } => ((0.03, 300.0), (d0, 100_000.0), None),
            // Erceg/SUI reported shadowing deviations per terrain category.
            ModelId::Sui(SuiTerrain::A) => ((1.0, 4.0), (100.0, 8000.0), Some(10.6)),
            ModelId::Sui(SuiTerrain::B) => ((1.0, 4.0), (100.0, 8000.0), Some(9.6)),
            ModelId::Sui(SuiTerrain::C) => ((1.0, 4.0), (100.0, 8000.0), Some(8.2)),
            ModelId::Ecc33 => ((3.4, 3.8), (1000.0, 10_000.0), None),
            // LOS sigma is the pre-breakpoint value.
            ModelId::Winner2(_, Condition::Los) => ((2.0, 6.0), (50.0, 5000.0), Some(4.0)),
            ModelId::Winner2(_, Condition::Nlos) => ((2.0, 6.0), (50.0, 5000.0), Some(8.0)),
            ModelId::Tr38901(TrScenario::Rma, Condition::Los) => {
                ((0.5, 100.0), (10.0, 10_000.0), Some(4.0))
            }
            ModelId::Tr38901(TrScenario::Rma, Condition::Nlos) => {
                ((0.5, 100.0), (10.0, 5000.0), Some(8.0))
            }
            ModelId::Tr38901(TrScenario::Uma, Condition::Los) => {
                ((0.5, 100.0), (10.0, 5000.0), Some(4.0))
            }
            ModelId::Tr38901(TrScenario::Uma, Condition::Nlos) => {
                ((0.5, 100.0), (10.0, 5000.0), Some(6.0))
            }
            ModelId::Hata(HataVariant::HataOkumura, _) => ((0.15, 1.5), (1000.0, 20_000.0), None),
            ModelId::Hata(HataVariant::Cost231, _) => ((1.5, 2.0), (1000.0, 20_000.0), None),
            ModelId::TwoRay => ((0.03, 300.0), (1.0, 100_000.0), None),
        };
        ModelMeta {
            freq_range_ghz: freq,
            dist_range_m: dist,
            published_sigma_db: sigma,
        }
    }
}

/// Evaluates `model` at each horizontal distance, recomputing `d3d` from the
/// template heights.
pub fn predict_series(
    model: &ModelId,
    template: &LinkGeometry,
    distances: &[f64],
) -> Result<Vec<Prediction>> {
    if let Some(d) = distances.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::validation(
            "distances",
            format!("non-positive distance {d}"),
        ));
    }
    if distances.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation("distances", "must be sorted ascending"));
    }
    distances
        .iter()
        .map(|&d| model.predict(&template.at_distance(d)))
        .collect()
}

/// Model catalog as JSON: id, validity ranges and published sigma per entry.
pub fn catalog_json() -> Value {
    let entries: Vec<Value> = ModelId::catalog()
        .iter()
        .map(|m| {
            let meta = m.meta();
            json!({
                "id": m.to_string(),
                "freq_range_ghz": [meta.freq_range_ghz.0, meta.freq_range_ghz.1],
                "dist_range_m": [meta.dist_range_m.0, meta.dist_range_m.1],
                "published_sigma_db": meta.published_sigma_db,
            })
        })
        .collect();
    Value::Array(entries)
}

fn condition_str(c: Condition) -> &'static str {
    match c {
        Condition::Los => "los",
        Condition::Nlos => "nlos",
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Fspl => write!(f, "fspl"),
            ModelId::LogDistance { a0, gamma, d0 } => write!(f, "log_distance:{a0}:{gamma}:{d0}"),
            ModelId::Sui(t) => write!(
                f,
                "sui_{}",
                match t {
                    SuiTerrain::A => "a",
                    SuiTerrain::B => "b",
                    SuiTerrain::C => "c",
                }
            ),
            ModelId::Ecc33 => write!(f, "ecc33"),
            ModelId::Winner2(s, c) => write!(
                f,
                "winner2_{}_{}",
                match s {
                    WinnerScenario::C1 => "c1",
                    WinnerScenario::C2 => "c2",
                    WinnerScenario::D1 => "d1",
                },
                condition_str(*c)
            ),
            ModelId::Tr38901(s, c) => write!(
                f,
                "tr38901_{}_{}",
                match s {
                    TrScenario::Rma => "rma",
                    TrScenario::Uma => "uma",
                },
                condition_str(*c)
            ),
            ModelId::Hata(v, e) => write!(
                f,
                "{}_{}",
                match v {
                    HataVariant::HataOkumura => "hata_okumura",
                    HataVariant::Cost231 => "cost231_hata",
                },
                match e {
                    Environment::Urban => "urban",
                    Environment::Suburban => "suburban",
                    Environment::Open => "open",
                }
            ),
            ModelId::TwoRay => write!(f, "two_ray"),
        }
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(rest) = s.strip_prefix("log_distance:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let nums: std::result::Result<Vec<f64>, _> =
                parts.iter().map(|p| p.parse::<f64>()).collect();
            return match nums.as_deref() {
                Ok([a0, gamma]) => Ok(ModelId::LogDistance {
                    a0: *a0,
                    gamma: *gamma,
                    d0: 100.0,
                }),
                Ok([a0, gamma, d0]) => Ok(ModelId::LogDistance {
                    a0: *a0,
                    gamma: *gamma,
                    d0: *d0,
                }),
                _ => Err(Error::validation(
                    "model",
                    format!("expected log_distance:<a0>:<gamma>[:<d0>], got {s:?}"),
                )),
            };
        }
        ModelId::catalog()
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::validation("model", format!("unknown model id {s:?}")))
    }
}

impl Serialize for ModelId {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelId {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
