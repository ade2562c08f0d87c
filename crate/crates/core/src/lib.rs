//! Propagation modeling and drive-test analysis for sub-6 GHz coverage studies.
//!
//! The crate is organized along the measurement pipeline:
//!
//! * [`geo`]: tangent-plane projection, distances, angles, grid binning and
//!   polygon containment.
//! * [`antenna`]: gridded antenna patterns, grid-of-beams envelopes and gain
//!   lookup.
//! * [`models`]: closed-form empirical path-loss models (FSPL, log-distance,
//!   SUI, ECC-33, WINNER II, TR 38.901 RMa/UMa, Hata, COST 231 Hata, two-ray).
//! * [`ingest`]: measurement log, site configuration and indoor-session parsers.
//! * [`analysis`]: binning, link-budget path-loss extraction, LOS labeling,
//!   log-distance regression, model error statistics, frequency offsets,
//!   shadow fading and outdoor-to-indoor CDFs.
//! * [`cli`]: the `pathloss` command-line pipeline driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod analysis;
pub mod antenna;
pub mod cli;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod models;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
