use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{mean_and_sd, median, GridBin};
use crate::error::{Error, Result};
use crate::geo::GridIndex;
use crate::ingest::IndoorSession;
use crate::models::{LinkGeometry, ModelId};

/// Prediction error summary in dB; positive `mu_e` means over-prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mu_e: f64,
    /// (n - 1) sample standard deviation.
    pub sigma_e: f64,
    pub rmse: f64,
    pub n: usize,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::InsufficientData("no prediction errors".into()));
        }
        let (mu_e, sigma_e) = mean_and_sd(errors);
        let n = errors.len();
        let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
        Ok(ErrorStats {
            mu_e,
            sigma_e,
            rmse,
            n,
        })
    }

    /// Stats implied by a mean and sample deviation over `n` errors.
    pub fn from_moments(mu_e: f64, sigma_e: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InsufficientData("n must be positive".into()));
        }
        if !(sigma_e >= 0.0) {
            return Err(Error::validation("sigma_e", "must be non-negative"));
        }
        let nf = n as f64;
        let rmse = (mu_e * mu_e + sigma_e * sigma_e * (nf - 1.0) / nf).sqrt();
        Ok(ErrorStats {
            mu_e,
            sigma_e,
            rmse,
            n,
        })
    }
}

/// Errors `model(d_i) - PL_i` over all bins; the template supplies frequency
/// and heights, each bin its own 2D and 3D distance.
pub fn prediction_errors(
    bins: &[GridBin],
    model: &ModelId,
    template: &LinkGeometry,
) -> Result<ErrorStats> {
    if bins.is_empty() {
        return Err(Error::InsufficientData("no bins to compare against".into()));
    }
    let errors = bins
        .iter()
        .map(|b| {
            let g = template.at_distances(b.distance_2d, b.distance_3d);
            Ok(model.predict(&g)?.loss_db - b.path_loss)
        })
        .collect::<Result<Vec<f64>>>()?;
    ErrorStats::from_errors(&errors)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: ModelId,
    #[serde(flatten)]
    pub stats: ErrorStats,
}

/// Error statistics per model, ranked by ascending RMSE (input order breaks ties).
pub fn compare_models(
    bins: &[GridBin],
    models: &[ModelId],
    template: &LinkGeometry,
) -> Result<Vec<ModelScore>> {
    if models.is_empty() {
        return Err(Error::validation(
            "models",
            "at least one model is required",
        ));
    }
    let mut scores = models
        .iter()
        .map(|m| {
            Ok(ModelScore {
                model: *m,
                stats: prediction_errors(bins, m, template)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| a.stats.rmse.total_cmp(&b.stats.rmse));
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetResult {
    /// Mean of `PL_high - PL_low`, dB.
    pub offset: f64,
    pub sigma: f64,
    pub n_pairs: usize,
}

/// Pairs path losses of bins present in both tables, ordered by grid index.
pub fn pair_common_bins(high: &[GridBin], low: &[GridBin]) -> Result<Vec<(f64, f64)>> {
    fn by_index(bins: &[GridBin], which: &str) -> Result<BTreeMap<GridIndex, f64>> {
        let mut map = BTreeMap::new();
        for b in bins {
            if map.insert(b.index, b.path_loss).is_some() {
                return Err(Error::validation(
                    which,
                    format!("grid index ({}, {}) appears twice", b.index.ix, b.index.iy),
                ));
            }
        }
        Ok(map)
    }
    let high = by_index(high, "high band table")?;
    let low = by_index(low, "low band table")?;
    Ok(high
        .iter()
        .filter_map(|(idx, &h)| low.get(idx).map(|&l| (h, l)))
        .collect())
}

/// Unit-slope fit between two bands: mean and sample deviation of the differences.
pub fn frequency_offset(pairs: &[(f64, f64)]) -> Result<OffsetResult> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData(
            "no common bins between the two bands".into(),
        ));
    }
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least 2 paired bins".into(),
        ));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(h, l)| h - l).collect();
    let (offset, sigma) = mean_and_sd(&diffs);
    Ok(OffsetResult {
        offset,
        sigma,
        n_pairs: pairs.len(),
    })
}

/// Empirical CDF: `probabilities[i]` is the share of values `<= values[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSeries {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl CdfSeries {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty CDF input".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mut probabilities = vec![0.0; n];
        let mut i = n;
        while i > 0 {
            // every member of a run of ties gets the run's upper rank
            let top = i;
            let value = v[i - 1];
            while i > 0 && v[i - 1] == value {
                probabilities[i - 1] = top as f64 / n as f64;
                i -= 1;
            }
        }
        Ok(CdfSeries {
            values: v,
            probabilities,
        })
    }

    /// `loss_db,probability` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["loss_db", "probability"])?;
        for (v, p) in self.values.iter().zip(&self.probabilities) {
            w.write_record([v.to_string(), p.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<cdf>", e))?;
        Ok(())
    }
}

/// Indoor powers relative to the median outdoor reference power.
pub fn o2i_cdf(session: &IndoorSession) -> Result<CdfSeries> {
    let outdoor: Vec<f64> = session
        .outdoor_reference
        .iter()
        .map(|s| s.received_power)
        .collect();
    let reference = median(&outdoor).ok_or_else(|| {
        Error::InsufficientData(format!(
            "building {} floor {}: no outdoor reference",
            session.building_id, session.floor
        ))
    })?;
    if session.indoor_samples.is_empty() {
        return Err(Error::InsufficientData(format!(
            "building {} floor {}: no indoor samples",
            session.building_id, session.floor
        )));
    }
    let rel: Vec<f64> = session
        .indoor_samples
        .iter()
        .map(|s| s.received_power - reference)
        .collect();
    CdfSeries::from_values(&rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::LosState;
    use crate::geo::GeodeticPoint;
    use crate::ingest::{MeasurementSample, Source};
    use proptest::prelude::*;

    fn bin(ix: i64, d: f64, pl: f64) -> GridBin {
        GridBin {
            index: GridIndex::new(ix, 0),
            centroid: None,
            position: GeodeticPoint::new(0.0, 0.0).unwrap(),
            median_rx_power: None,
            path_loss: pl,
            distance_2d: d,
            distance_3d: d,
            sample_count: 1,
            los: LosState::Unknown,
            band: "3.5GHz".into(),
        }
    }

    #[test]
    fn error_stats_basics() {
        let s = ErrorStats::from_errors(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((s.mu_e, s.sigma_e, s.rmse, s.n), (2.0, 0.0, 2.0, 3));
        let z = ErrorStats::from_errors(&[0.0; 4]).unwrap();
        assert_eq!((z.mu_e, z.sigma_e, z.rmse), (0.0, 0.0, 0.0));
        assert!(ErrorStats::from_errors(&[]).is_err());
        let t = ErrorStats::from_moments(14.9, 10.8, 1_000_000).unwrap();
        assert!((t.rmse - 18.4).abs() < 0.05);
    }

    #[test]
    fn model_identical_to_data() {
        let template = LinkGeometry::new(100.0, 10.0, 10.0, 3.5);
        let model = ModelId::Fspl;
        let bins: Vec<GridBin> = [120.0, 400.0, 900.0]
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let pl = model.predict(&template.at_distances(d, d)).unwrap().loss_db;
                bin(k as i64, d, pl)
            })
            .collect();
        let s = prediction_errors(&bins, &model, &template).unwrap();
        assert_eq!((s.mu_e, s.sigma_e, s.rmse), (0.0, 0.0, 0.0));
        assert!(prediction_errors(&[], &model, &template).is_err());

        let ranked = compare_models(&bins, &[ModelId::Ecc33, ModelId::Fspl], &template).unwrap();
        assert_eq!(ranked[0].model, ModelId::Fspl);
        let json = serde_json::to_value(ranked[0]).unwrap();
        assert_eq!(json["model"], "fspl");
        assert_eq!(json["rmse"], 0.0);
    }

    #[test]
    fn offsets() {
        let a = [
            bin(0, 100.0, 90.0),
            bin(1, 200.0, 95.0),
            bin(2, 300.0, 99.0),
        ];
        let pairs = pair_common_bins(&a, &a).unwrap();
        let off = frequency_offset(&pairs).unwrap();
        assert_eq!((off.offset, off.sigma, off.n_pairs), (0.0, 0.0, 3));

        let b = [bin(5, 100.0, 80.0), bin(6, 100.0, 80.0)];
        assert!(pair_common_bins(&a, &b).unwrap().is_empty());
        assert!(matches!(
            frequency_offset(&[]),
            Err(Error::InsufficientData(_))
        ));
        let dup = [bin(0, 100.0, 80.0), bin(0, 100.0, 81.0)];
        assert!(pair_common_bins(&dup, &a).is_err());
    }

    fn sample(p: f64) -> MeasurementSample {
        MeasurementSample {
            timestamp_ms: 1,
            position: GeodeticPoint::new(47.0, 8.0).unwrap(),
            received_power: p,
            band: "3.5GHz".into(),
            source: Source::Testbed,
            beam_id: None,
            cell_id: None,
        }
    }

    #[test]
    fn o2i_steps() {
        let out: Vec<_> = [-70.0, -72.0, -68.0].iter().map(|&p| sample(p)).collect();
        let same = IndoorSession::new("1", 0, vec![sample(-70.0); 4], out.clone()).unwrap();
        let cdf = o2i_cdf(&same).unwrap();
        assert!(cdf.values.iter().all(|&v| v == 0.0));
        assert!(cdf.probabilities.iter().all(|&p| p == 1.0));

        let low = IndoorSession::new("3", 1, vec![sample(-100.0); 5], out).unwrap();
        let cdf = o2i_cdf(&low).unwrap();
        assert!(cdf.values.iter().all(|&v| v == -30.0));

        let mut buf = Vec::new();
        cdf.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("loss_db,probability\n-30,1\n"));
    }

    proptest! {
        #[test]
        fn rmse_identity(errors in prop::collection::vec(-40.0f64..40.0, 1..200)) {
            let s = ErrorStats::from_errors(&errors).unwrap();
            let n = s.n as f64;
            let rhs = s.mu_e.powi(2) + s.sigma_e.powi(2) * (n - 1.0) / n;
            prop_assert!((s.rmse.powi(2) - rhs).abs() <= 1e-6 * rhs.max(1e-12));
            let m = ErrorStats::from_moments(s.mu_e, s.sigma_e, s.n).unwrap();
            prop_assert!((m.rmse - s.rmse).abs() <= 1e-6 * s.rmse.max(1e-12));
        }

        #[test]
        fn cdf_matches_rank_oracle(values in prop::collection::vec((-60i32..10).prop_map(|v| v as f64 * 0.5), 1..120)) {
            let cdf = CdfSeries::from_values(&values).unwrap();
            prop_assert_eq!(cdf.values.len(), cdf.probabilities.len());
            prop_assert_eq!(*cdf.probabilities.last().unwrap(), 1.0);
            for w in cdf.values.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for w in cdf.probabilities.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for (v, p) in cdf.values.iter().zip(&cdf.probabilities) {
                let rank = values.iter().filter(|x| *x <= v).count();
                prop_assert_eq!(*p, rank as f64 / values.len() as f64);
            }
        }
    }
}
