//! Command-line pipeline driver.
//!
//! Subcommands: `synth`, `bin`, `fit`, `compare`, `offset`, `o2i`, `models`.
//! A `--config` JSON file may supply any shared option; explicit flags win.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    self, apply_exclusion_mask, classify_los, compare_models, distance_profile, extract_path_loss,
    fit_log_distance, frequency_offset, los_fraction, o2i_cdf, pair_common_bins, read_bin_table,
    shadow_fading, synthesize_model_bins, write_bin_table, BinLayout, ConditionParams,
    DistanceKind, DriveTestConfig, FitOptions, GridBin, LosState,
};
use crate::antenna::{AntennaPattern, BeamSet};
use crate::geo::{self, GeodeticPoint, Polygon, DEFAULT_GRID_SIZE};
use crate::ingest::{self, SiteConfig};
use crate::models::{fspl_db, predict_series, LinkGeometry, ModelId};

#[derive(Debug, Parser)]
#[command(
    name = "pathloss",
    version,
    about = "Path-loss modeling and drive-test analysis"
)]
pub struct Cli {
    /// JSON file with default values for shared options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic drive test (or bin table).
    Synth(SynthArgs),
    /// Bin measurement logs into a path-loss bin table.
    Bin(BinArgs),
    /// Fit the log-distance model to a bin table.
    Fit(FitArgs),
    /// Score propagation models against a bin table.
    Compare(CompareArgs),
    /// Path-loss offset between two bands over common bins.
    Offset(OffsetArgs),
    /// Outdoor-to-indoor loss CDFs from an indoor session manifest.
    O2i(O2iArgs),
    /// Print the model catalog.
    Models(ModelsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Rural,
    Suburban,
    Urban,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    All,
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum DistanceArg {
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    D2,
    #[value(name = "3d")]
    #[serde(rename = "3d")]
    D3,
}

impl From<DistanceArg> for DistanceKind {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::D2 => DistanceKind::D2,
            DistanceArg::D3 => DistanceKind::D3,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "suburban")]
    pub preset: Preset,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of distinct bins.
    #[arg(long, default_value_t = 2000)]
    pub bins: usize,
    /// Write a bin table directly instead of a testbed log.
    #[arg(long)]
    pub bins_only: bool,
    /// Model to draw bins around (bin tables only); defaults to the preset's NLOS log-distance fit.
    #[arg(long)]
    pub model: Option<ModelId>,
    /// Shadow-fading deviation for bin tables, dB.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Carrier frequency override, GHz.
    #[arg(long)]
    pub freq: Option<f64>,
    #[arg(long)]
    pub min_d: Option<f64>,
    #[arg(long)]
    pub max_d: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BinArgs {
    /// Testbed, scanner or canonical sample CSV logs (format detected from the header).
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long)]
    pub site: Option<PathBuf>,
    /// Transmit pattern CSV; overrides the site's `pattern_ref`.
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    /// GeoJSON LOS polygons.
    #[arg(long)]
    pub polygons: Option<PathBuf>,
    /// GeoJSON polygons whose bins are dropped.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    #[arg(long)]
    pub grid_size: Option<f64>,
    /// Band label; defaults to the site carrier, e.g. `3.5GHz`.
    #[arg(long)]
    pub band: Option<String>,
    /// Cell ids kept from scanner logs.
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<u32>,
    /// Output bin table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct WindowArgs {
    #[arg(long)]
    pub d0: Option<f64>,
    #[arg(long)]
    pub min_d: Option<f64>,
    #[arg(long)]
    pub max_d: Option<f64>,
    #[arg(long, value_enum)]
    pub distance: Option<DistanceArg>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub bins: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Bin subsets to fit, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub split: Vec<Split>,
    /// Fix the intercept at this value (dB) and fit only the exponent.
    #[arg(long, conflicts_with = "pin_fspl")]
    pub pin_a0: Option<f64>,
    /// Fix the intercept at free-space loss at d0 for this frequency (GHz).
    #[arg(long)]
    pub pin_fspl: Option<f64>,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub bins: PathBuf,
    #[arg(long)]
    pub site: Option<PathBuf>,
    /// Model ids, comma separated; the whole catalog when absent.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<ModelId>,
    #[arg(long, value_enum)]
    pub split: Option<Split>,
    #[arg(long)]
    pub min_d: Option<f64>,
    #[arg(long)]
    pub max_d: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OffsetArgs {
    /// Bin table of the higher band.
    pub high: PathBuf,
    /// Bin table of the lower band.
    pub low: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct O2iArgs {
    pub manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelsArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Shared options read from `--config`. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub site: Option<PathBuf>,
    pub pattern: Option<PathBuf>,
    pub polygons: Option<PathBuf>,
    pub exclusion_mask: Option<PathBuf>,
    pub grid_size: Option<f64>,
    pub d0: Option<f64>,
    pub min_d: Option<f64>,
    pub max_d: Option<f64>,
    pub distance: Option<DistanceArg>,
    pub split: Option<Split>,
    pub models: Option<Vec<ModelId>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.site,
            &mut cfg.pattern,
            &mut cfg.polygons,
            &mut cfg.exclusion_mask,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(g) = cfg.grid_size {
            if !(g > 0.0) {
                bail!("config grid_size must be positive");
            }
        }
        if let Some(d0) = cfg.d0 {
            if !(d0 > 0.0) {
                bail!("config d0 must be positive");
            }
        }
        Ok(cfg)
    }
}

fn required<T>(flag: Option<T>, config: Option<T>, name: &str) -> anyhow::Result<T> {
    flag.or(config)
        .ok_or_else(|| anyhow!("missing --{name} (flag or config)"))
}

/// Parses `args` (including the program name) and runs the command, writing
/// human-readable summaries to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    execute(cli, stdout)
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(a, &config, stdout),
        Command::Bin(a) => cmd_bin(a, &config, stdout),
        Command::Fit(a) => cmd_fit(a, &config, stdout),
        Command::Compare(a) => cmd_compare(a, &config, stdout),
        Command::Offset(a) => cmd_offset(a, &config, stdout),
        Command::O2i(a) => cmd_o2i(a, &config, stdout),
        Command::Models(a) => cmd_models(a, &config, stdout),
    }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub const SYNTH_PATTERN_FILE: &str = "pattern.csv";
pub const SYNTH_LOG_FILE: &str = "testbed.csv";
pub const SYNTH_SITE_FILE: &str = "site.json";
pub const SYNTH_POLYGON_FILE: &str = "polygons.geojson";
pub const SYNTH_BIN_FILE: &str = "bins.csv";

struct PresetSpec {
    site: SiteConfig,
    los: ConditionParams,
    nlos: ConditionParams,
    los_fraction: f64,
}

fn preset_spec(preset: Preset, freq_ghz: f64) -> PresetSpec {
    let a0 = fspl_db(100.0, freq_ghz);
    let cond = |gamma, sigma| ConditionParams { a0, gamma, sigma };
    let (lat, lon, height, los, nlos, los_fraction) = match preset {
        Preset::Rural => (46.95, 7.45, 12.4, cond(2.3, 5.1), cond(3.1, 9.4), 0.42),
        Preset::Suburban => (47.05, 8.30, 24.5, cond(2.9, 6.9), cond(2.9, 6.9), 0.0),
        Preset::Urban => (47.38, 8.54, 29.4, cond(4.8, 7.1), cond(4.8, 7.1), 0.0),
    };
    PresetSpec {
        site: SiteConfig {
            site_position: GeodeticPoint {
                latitude: lat,
                longitude: lon,
                altitude_agl: 0.0,
            },
            antenna_height_agl: height,
            boresight_azimuth: 120.0,
            mechanical_tilt: 0.0,
            // reference-signal power per resource element
            tx_power: 10.0,
            carrier_freq: freq_ghz,
            pattern_ref: PathBuf::from(SYNTH_PATTERN_FILE),
            rx_gain: 4.0,
            ue_height: 2.1,
            feeder_loss: 0.0,
        },
        los,
        nlos,
        los_fraction,
    }
}

/// The 3 x 16 beam grid used by the synthetic testbed (27 dBi, 120 x 30 deg).
pub fn synthetic_beam_set() -> crate::Result<BeamSet> {
    BeamSet::synthetic_grid(3, 16, 27.0, 120.0, 30.0, 1.0)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<std::io::BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

fn cmd_synth(a: SynthArgs, cfg: &PipelineConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let out = required(a.out, cfg.out.clone(), "out")?;
    let seed = a.seed.or(cfg.seed).unwrap_or(1);
    let freq = a.freq.unwrap_or(3.5);
    if !(freq > 0.0) {
        bail!("--freq must be positive");
    }
    let range = (
        a.min_d.or(cfg.min_d).unwrap_or(100.0),
        a.max_d.or(cfg.max_d).unwrap_or(2000.0),
    );
    let spec = preset_spec(a.preset, freq);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join(SYNTH_SITE_FILE), &spec.site)?;

    if a.bins_only {
        let model = a.model.unwrap_or(ModelId::LogDistance {
            a0: spec.nlos.a0,
            gamma: spec.nlos.gamma,
            d0: 100.0,
        });
        let sigma = a.sigma.unwrap_or(spec.nlos.sigma);
        let template = LinkGeometry::new(
            1.0,
            spec.site.antenna_height_agl,
            spec.site.ue_height,
            spec.site.carrier_freq,
        );
        let layout = BinLayout {
            origin: spec.site.site_position,
            ..BinLayout::new(a.bins, range)
        };
        let bins = synthesize_model_bins(&model, &template, sigma, &layout, seed)?;
        let mut w = create(&out.join(SYNTH_BIN_FILE))?;
        write_bin_table(&mut w, &bins)?;
        w.flush()?;
        writeln!(stdout, "bins: {}", bins.len())?;
        writeln!(stdout, "model: {model}")?;
        return Ok(());
    }
    if a.model.is_some() || a.sigma.is_some() {
        bail!("--model and --sigma apply only with --bins-only");
    }

    let beams = synthetic_beam_set()?;
    let envelope = beams.envelope();
    envelope.save(&out.join(SYNTH_PATTERN_FILE))?;
    let dt_cfg = DriveTestConfig {
        site: spec.site.clone(),
        n_bins: a.bins,
        range,
        d0: 100.0,
        los: spec.los,
        nlos: spec.nlos,
        los_fraction: spec.los_fraction,
        sector_width: 120.0,
        samples_per_bin: 3,
        fast_fading_sigma: 1.0,
        start_ms: 1_546_300_800_000,
        period_ms: 20,
        seed,
    };
    let dt = analysis::drive_test_scenario(&dt_cfg, &beams)?;
    let mut w = create(&out.join(SYNTH_LOG_FILE))?;
    ingest::write_testbed_log(&mut w, dt.n_beams, &dt.rows)?;
    w.flush()?;
    let polygons: Vec<Polygon> = dt.los_polygon.into_iter().collect();
    write_json(
        &out.join(SYNTH_POLYGON_FILE),
        &geo::polygons_to_geojson(&polygons),
    )?;
    writeln!(stdout, "rows: {}", dt.rows.len())?;
    writeln!(stdout, "bins: {}", a.bins)?;
    writeln!(stdout, "los_fraction: {:.3}", spec.los_fraction)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// bin
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LogFormat {
    Testbed,
    Scanner,
    Samples,
}

fn detect_format(path: &Path) -> anyhow::Result<LogFormat> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut header = String::new();
    BufReader::new(f).read_line(&mut header)?;
    let header = header.trim();
    if header.contains("mrsrp_") {
        Ok(LogFormat::Testbed)
    } else if header.contains("rsrp_dbm") {
        Ok(LogFormat::Scanner)
    } else if header.contains("rx_power_dbm") {
        Ok(LogFormat::Samples)
    } else if header.is_empty() {
        bail!("{}: no samples (empty file)", path.display())
    } else {
        bail!("{}: unrecognized log header {header:?}", path.display())
    }
}

fn load_pattern(
    site: &SiteConfig,
    site_path: &Path,
    flag: Option<PathBuf>,
) -> anyhow::Result<AntennaPattern> {
    let path = match flag {
        Some(p) => p,
        None => site.resolve_pattern(site_path.parent().unwrap_or(Path::new("."))),
    };
    AntennaPattern::load(&path).with_context(|| format!("loading pattern {}", path.display()))
}

fn cmd_bin(a: BinArgs, cfg: &PipelineConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let site_path = required(a.site, cfg.site.clone(), "site")?;
    let out = required(a.out, cfg.out.clone(), "out")?;
    let grid_size = a.grid_size.or(cfg.grid_size).unwrap_or(DEFAULT_GRID_SIZE);
    let site = ingest::load_site_config(&site_path)
        .with_context(|| format!("loading site {}", site_path.display()))?;
    let pattern = load_pattern(&site, &site_path, a.pattern.or(cfg.pattern.clone()))?;
    let band = a
        .band
        .unwrap_or_else(|| format!("{}GHz", site.carrier_freq));
    let cells: std::collections::BTreeSet<u32> = a.cells.iter().copied().collect();

    let mut samples = Vec::new();
    for path in &a.logs {
        let format = detect_format(path)?;
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let reader = BufReader::new(file);
        let ctx = || format!("parsing {}", path.display());
        match format {
            LogFormat::Testbed => samples.extend(
                ingest::parse_testbed_log(reader, &band)
                    .with_context(ctx)?
                    .samples,
            ),
            LogFormat::Scanner => samples.extend(
                ingest::parse_scanner_log(reader, &cells, &band)
                    .with_context(ctx)?
                    .samples,
            ),
            LogFormat::Samples => samples.extend(ingest::read_samples(reader).with_context(ctx)?),
        }
    }
    if samples.is_empty() {
        bail!("no samples");
    }

    let aggregates = analysis::aggregate_bins(&samples, &site.site_position, grid_size)?;
    let mut bins = extract_path_loss(&aggregates, &site, &pattern)?;
    if let Some(p) = a.polygons.or(cfg.polygons.clone()) {
        let polygons = geo::load_polygons(&p)?;
        bins = classify_los(&bins, &polygons);
    }
    if let Some(p) = a.exclude.or(cfg.exclusion_mask.clone()) {
        let mask = geo::load_polygons(&p)?;
        bins = apply_exclusion_mask(bins, &mask);
    }
    if bins.is_empty() {
        bail!("no samples left after binning");
    }
    let mut w = create(&out)?;
    write_bin_table(&mut w, &bins)?;
    w.flush()?;

    writeln!(stdout, "samples: {}", samples.len())?;
    writeln!(stdout, "bins: {}", bins.len())?;
    match los_fraction(&bins) {
        Some(f) => writeln!(stdout, "los_fraction: {f:.3}")?,
        None => writeln!(stdout, "los_fraction: n/a")?,
    }
    let (lo, hi) = bins
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
            (lo.min(b.distance_3d), hi.max(b.distance_3d))
        });
    writeln!(stdout, "distance_range_m: {lo:.1} {hi:.1}")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fit / compare
// ---------------------------------------------------------------------------

fn read_bins(path: &Path) -> anyhow::Result<Vec<GridBin>> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_bin_table(BufReader::new(f))
        .with_context(|| format!("reading bin table {}", path.display()))
}

fn split_bins(bins: &[GridBin], split: Split) -> anyhow::Result<Vec<GridBin>> {
    let wanted = match split {
        Split::All => return Ok(bins.to_vec()),
        Split::Los => LosState::Los,
        Split::Nlos => LosState::Nlos,
    };
    if bins.iter().all(|b| b.los == LosState::Unknown) {
        bail!("no LOS labels in the bin table (run `bin` with --polygons)");
    }
    Ok(bins.iter().filter(|b| b.los == wanted).cloned().collect())
}

fn cmd_fit(a: FitArgs, cfg: &PipelineConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let bins = read_bins(&a.bins)?;
    let d0 = a.window.d0.or(cfg.d0).unwrap_or(100.0);
    let opts = FitOptions {
        d0,
        min_d: a.window.min_d.or(cfg.min_d),
        max_d: a.window.max_d.or(cfg.max_d),
        distance: a
            .window
            .distance
            .or(cfg.distance)
            .unwrap_or(DistanceArg::D3)
            .into(),
        pinned_a0: a.pin_a0.or(a.pin_fspl.map(|f| fspl_db(d0, f))),
    };
    let splits = if a.split.is_empty() {
        vec![cfg.split.unwrap_or(Split::All)]
    } else {
        a.split.clone()
    };
    let mut results = Vec::new();
    for split in splits {
        let subset = split_bins(&bins, split)?;
        let fit =
            fit_log_distance(&subset, &opts).with_context(|| format!("fitting split {split:?}"))?;
        let sf = shadow_fading(&subset, &fit);
        writeln!(
            stdout,
            "{:<5} n={:<6} a0={:.2} gamma={:.3} sigma={:.2}",
            format!("{split:?}").to_lowercase(),
            fit.n_bins,
            fit.a0,
            fit.gamma,
            fit.sigma
        )?;
        results.push(json!({
            "split": split,
            "fit": fit,
            "shadow_fading": {
                "gaussian_mu": sf.gaussian_mu,
                "gaussian_sigma": sf.gaussian_sigma,
                "histogram": sf.histogram,
            },
        }));
    }
    let doc = serde_json::Value::Array(results);
    match a.out.or(cfg.out.clone()) {
        Some(p) => write_json(&p, &doc)?,
        None => writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?)?,
    }
    Ok(())
}

pub const COMPARE_ERRORS_FILE: &str = "errors.json";
pub const COMPARE_CURVES_FILE: &str = "curves.csv";
pub const COMPARE_PROFILE_FILE: &str = "profile.csv";
const CURVE_POINTS: usize = 100;

fn cmd_compare(a: CompareArgs, cfg: &PipelineConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let site_path = required(a.site, cfg.site.clone(), "site")?;
    let out = required(a.out, cfg.out.clone(), "out")?;
    let site = ingest::load_site_config(&site_path)?;
    let models = if !a.models.is_empty() {
        a.models.clone()
    } else {
        cfg.models.clone().unwrap_or_else(ModelId::catalog)
    };
    if models.is_empty() {
        bail!("model list is empty");
    }
    let split = a.split.or(cfg.split).unwrap_or(Split::All);
    let (lo, hi) = (
        a.min_d.or(cfg.min_d).unwrap_or(0.0),
        a.max_d.or(cfg.max_d).unwrap_or(f64::INFINITY),
    );
    let bins: Vec<GridBin> = split_bins(&read_bins(&a.bins)?, split)?
        .into_iter()
        .filter(|b| b.distance_3d >= lo && b.distance_3d <= hi)
        .collect();
    if bins.is_empty() {
        bail!("no bins to compare against");
    }
    let template = LinkGeometry::new(
        1.0,
        site.antenna_height_agl,
        site.ue_height,
        site.carrier_freq,
    );
    let scores = compare_models(&bins, &models, &template)?;

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let ranked: Vec<_> = scores
        .iter()
        .enumerate()
        .map(|(k, s)| {
            json!({
                "rank": k + 1,
                "model": s.model,
                "mu_e": s.stats.mu_e,
                "sigma_e": s.stats.sigma_e,
                "rmse": s.stats.rmse,
                "n": s.stats.n,
            })
        })
        .collect();
    write_json(&out.join(COMPARE_ERRORS_FILE), &ranked)?;

    // model curves over the observed horizontal distance range
    let (d_min, d_max) = bins
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), b| {
            (l.min(b.distance_2d), h.max(b.distance_2d))
        });
    let d_min = d_min.max(1.0);
    let distances: Vec<f64> = (0..CURVE_POINTS)
        .map(|k| {
            if d_max > d_min {
                d_min * (d_max / d_min).powf(k as f64 / (CURVE_POINTS - 1) as f64)
            } else {
                d_min
            }
        })
        .collect();
    let mut columns = Vec::with_capacity(models.len());
    for m in &models {
        let series = predict_series(m, &template, &distances)?;
        if series.iter().any(|p| !p.warnings.is_empty()) {
            log::warn!("{m}: evaluated outside its validity range");
        }
        columns.push(series.into_iter().map(|p| p.loss_db).collect::<Vec<_>>());
    }
    let mut w = csv::Writer::from_writer(create(&out.join(COMPARE_CURVES_FILE))?);
    let mut header = vec!["distance_m".to_string()];
    header.extend(models.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for (k, d) in distances.iter().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(columns.iter().map(|c| c[k].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(&out.join(COMPARE_PROFILE_FILE))?);
    w.write_record(["distance_m", "median_pl_db", "count"])?;
    for p in distance_profile(&bins, DEFAULT_GRID_SIZE)? {
        w.write_record([
            p.distance.to_string(),
            p.median_path_loss.to_string(),
            p.count.to_string(),
        ])?;
    }
    w.flush()?;

    for (k, s) in scores.iter().enumerate() {
        writeln!(
            stdout,
            "{:>2}. {:<24} rmse={:>7.2} mu_e={:>7.2} sigma_e={:>6.2}",
            k + 1,
            s.model.to_string(),
            s.stats.rmse,
            s.stats.mu_e,
            s.stats.sigma_e
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// offset / o2i / models
// ---------------------------------------------------------------------------

fn cmd_offset(a: OffsetArgs, cfg: &PipelineConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let high = read_bins(&a.high)?;
    let low = read_bins(&a.low)?;
    let pairs = pair_common_bins(&high, &low)?;
    let off = frequency_offset(&pairs)?;
    let band = |bins: &[GridBin]| bins.first().map(|b| b.band.clone()).unwrap_or_default();
    let doc = json!({
        "offset_db": off.offset,
        "sigma_db": off.sigma,
        "n_pairs": off.n_pairs,
        "high_band": band(&high),
        "low_band": band(&low),
    });
    if let Some(p) = a.out.or(cfg.out.clone()) {
        write_json(&p, &doc)?;
    }
    writeln!(stdout, "offset_db: {:.4}", off.offset)?;
    writeln!(stdout, "sigma_db: {:.4}", off.sigma)?;
    writeln!(stdout, "pairs: {}", off.n_pairs)?;
    Ok(())
}

fn file_label(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_o2i(a: O2iArgs, cfg: &PipelineConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let out = required(a.out, cfg.out.clone(), "out")?;
    let sessions = ingest::load_indoor_manifest(&a.manifest)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    for s in &sessions {
        let cdf = o2i_cdf(s)?;
        let name = format!("o2i_{}_floor{}.csv", file_label(&s.building_id), s.floor);
        let mut w = create(&out.join(&name))?;
        cdf.write_csv(&mut w)?;
        w.flush()?;
        let median = analysis::median(&cdf.values).unwrap_or(f64::NAN);
        writeln!(
            stdout,
            "building {} floor {}: n={} median={:.2} dB -> {name}",
            s.building_id,
            s.floor,
            cdf.values.len(),
            median
        )?;
    }
    Ok(())
}

fn cmd_models(a: ModelsArgs, cfg: &PipelineConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let catalog = crate::models::catalog_json();
    match a.out.or(cfg.out.clone()) {
        Some(p) => write_json(&p, &catalog)?,
        None => writeln!(stdout, "{}", serde_json::to_string_pretty(&catalog)?)?,
    }
    Ok(())
}
