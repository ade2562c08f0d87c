//! Drive-test analysis: binning, path-loss extraction, LOS labeling,
//! log-distance regression, model error statistics, band offsets and O2I CDFs.

mod binning;
mod fit;
mod stats;
mod synth;

pub use binning::{
    aggregate_bins, apply_exclusion_mask, classify_los, distance_profile, extract_path_loss,
    los_fraction, read_bin_table, write_bin_table, BinAggregate, ProfilePoint,
};
pub use fit::{
    fit_log_distance, shadow_fading, DistanceKind, FitOptions, FitResult, HistogramBin,
    ShadowFading,
};
pub use stats::{
    compare_models, frequency_offset, o2i_cdf, pair_common_bins, prediction_errors, CdfSeries,
    ErrorStats, ModelScore, OffsetResult,
};
pub use synth::{
    drive_test_scenario, synthesize_model_bins, synthesize_samples, BinLayout, ConditionParams,
    DriveTest, DriveTestConfig,
};

use serde::{Deserialize, Serialize};

use crate::geo::{GeodeticPoint, GridIndex, LocalPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LosState {
    Los,
    Nlos,
    Unknown,
}

impl LosState {
    pub fn as_str(&self) -> &'static str {
        match self {
            LosState::Los => "LOS",
            LosState::Nlos => "NLOS",
            LosState::Unknown => "UNKNOWN",
        }
    }
}

/// One spatial bin with its extracted path loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBin {
    pub index: GridIndex,
    /// Mean member position in site-local coordinates; absent when read from a bin table.
    pub centroid: Option<LocalPoint>,
    /// Geodetic position of the centroid.
    pub position: GeodeticPoint,
    /// Median received power, dBm; absent when read from a bin table.
    pub median_rx_power: Option<f64>,
    /// dB.
    pub path_loss: f64,
    pub distance_2d: f64,
    pub distance_3d: f64,
    pub sample_count: usize,
    pub los: LosState,
    pub band: String,
}

/// Median of `values`, averaging the two middle values for even counts.
/// Returns `None` for an empty slice. NaN-free input is assumed.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Mean and (n - 1) sample standard deviation; the deviation is 0 for one value.
pub(crate) fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_rules() {
        assert_eq!(median(&[-70.0, -80.0, -90.0]), Some(-80.0));
        assert_eq!(median(&[-70.0, -72.0, -80.0, -90.0]), Some(-76.0));
        assert_eq!(median(&[5.0]), Some(5.0));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn moments() {
        let (m, s) = mean_and_sd(&[2.0, 2.0, 2.0]);
        assert_eq!((m, s), (2.0, 0.0));
        let (m, s) = mean_and_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
