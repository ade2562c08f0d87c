use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{mean_and_sd, GridBin};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DistanceKind {
    #[serde(rename = "2d")]
    D2,
    #[default]
    #[serde(rename = "3d")]
    D3,
}

impl DistanceKind {
    pub fn of(&self, bin: &GridBin) -> f64 {
        match self {
            DistanceKind::D2 => bin.distance_2d,
            DistanceKind::D3 => bin.distance_3d,
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::D2 => "2d",
            DistanceKind::D3 => "3d",
        })
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" => Ok(DistanceKind::D2),
            "3d" => Ok(DistanceKind::D3),
            other => Err(Error::validation(
                "distance",
                format!("expected 2d or 3d, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub d0: f64,
    /// Lower distance bound, defaults to `d0`.
    pub min_d: Option<f64>,
    pub max_d: Option<f64>,
    pub distance: DistanceKind,
    /// Fixes the intercept and fits only the exponent.
    pub pinned_a0: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            d0: 100.0,
            min_d: None,
            max_d: None,
            distance: DistanceKind::D3,
            pinned_a0: None,
        }
    }
}

impl FitOptions {
    fn bounds(&self) -> Result<(f64, f64)> {
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::validation("d0", "must be positive"));
        }
        let lo = self.min_d.unwrap_or(self.d0);
        let hi = self.max_d.unwrap_or(f64::INFINITY);
        if !(lo >= 0.0) || hi < lo {
            return Err(Error::validation(
                "min_d",
                format!("empty distance window [{lo}, {hi}]"),
            ));
        }
        Ok((lo, hi))
    }

    /// Bins within the distance window, as `(distance, path loss)`.
    fn select(&self, bins: &[GridBin]) -> Result<Vec<(f64, f64)>> {
        let (lo, hi) = self.bounds()?;
        Ok(bins
            .iter()
            .map(|b| (self.distance.of(b), b.path_loss))
            .filter(|&(d, _)| d >= lo && d <= hi && d > 0.0)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Path loss at `d0`, dB.
    pub a0: f64,
    pub gamma: f64,
    /// Residual standard deviation, dB.
    pub sigma: f64,
    pub d0: f64,
    pub n_bins: usize,
    /// Smallest and largest distance used, meters.
    pub distance_range: (f64, f64),
    pub distance: DistanceKind,
}

impl FitResult {
    pub fn predict(&self, d: f64) -> f64 {
        self.a0 + 10.0 * self.gamma * (d / self.d0).log10()
    }
}

/// Least-squares fit of `PL = a0 + 10 gamma log10(d / d0)`.
///
/// `sigma` is `sqrt(sum r^2 / (n - 1))`, which for the joint fit equals the
/// sample standard deviation of the (zero-mean) residuals.
pub fn fit_log_distance(bins: &[GridBin], opts: &FitOptions) -> Result<FitResult> {
    let points = opts.select(bins)?;
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable bin(s) in the distance window, need at least 2",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points
        .iter()
        .map(|(d, _)| 10.0 * (d / opts.d0).log10())
        .collect();
    let ys: Vec<f64> = points.iter().map(|(_, pl)| *pl).collect();

    let (a0, gamma) = match opts.pinned_a0 {
        None => {
            let x_mean = xs.iter().sum::<f64>() / n;
            let y_mean = ys.iter().sum::<f64>() / n;
            let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
            if sxx <= 1e-12 * n {
                return Err(Error::InsufficientData(
                    "no distance spread among bins".into(),
                ));
            }
            let sxy: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - x_mean) * (y - y_mean))
                .sum();
            let gamma = sxy / sxx;
            (y_mean - gamma * x_mean, gamma)
        }
        Some(a0) => {
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            if sxx <= 1e-12 * n {
                return Err(Error::InsufficientData(
                    "all bins at the reference distance; exponent undefined".into(),
                ));
            }
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * (y - a0)).sum();
            (a0, sxy / sxx)
        }
    };

    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a0 - gamma * x).powi(2))
        .sum();
    let sigma = if points.len() == 2 && opts.pinned_a0.is_none() {
        log::warn!("log-distance fit through exactly two bins; sigma reported as 0");
        0.0
    } else {
        (ss / (n - 1.0)).sqrt()
    };
    let d_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let d_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult {
        a0,
        gamma,
        sigma,
        d0: opts.d0,
        n_bins: points.len(),
        distance_range: (d_min, d_max),
        distance: opts.distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Lower edge, dB; each bin is 1 dB wide.
    pub lower_db: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowFading {
    pub residuals: Vec<f64>,
    pub gaussian_mu: f64,
    pub gaussian_sigma: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Residuals of the bins a fit was computed from, with a moment-matched Gaussian
/// and a 1 dB histogram.
pub fn shadow_fading(bins: &[GridBin], fit: &FitResult) -> ShadowFading {
    let (lo, hi) = fit.distance_range;
    let residuals: Vec<f64> = bins
        .iter()
        .map(|b| (fit.distance.of(b), b.path_loss))
        .filter(|&(d, _)| d >= lo && d <= hi)
        .map(|(d, pl)| pl - fit.predict(d))
        .collect();
    if residuals.is_empty() {
        return ShadowFading {
            residuals,
            gaussian_mu: 0.0,
            gaussian_sigma: 0.0,
            histogram: Vec::new(),
        };
    }
    let (gaussian_mu, gaussian_sigma) = mean_and_sd(&residuals);
    let first = residuals
        .iter()
        .map(|r| r.floor())
        .fold(f64::INFINITY, f64::min) as i64;
    let last = residuals
        .iter()
        .map(|r| r.floor())
        .fold(f64::NEG_INFINITY, f64::max) as i64;
    let mut counts = vec![0usize; (last - first + 1) as usize];
    for r in &residuals {
        counts[(r.floor() as i64 - first) as usize] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lower_db: (first + k as i64) as f64,
            count,
        })
        .collect();
    ShadowFading {
        residuals,
        gaussian_mu,
        gaussian_sigma,
        histogram,
    }
}
