//! The `panolux` command line.
//!
//! Every command writes its artifacts through explicit `--out` style flags
//! and prints a single JSON object to stdout. Exit status is 0 on success,
//! 2 for bad input and 3 for numerical failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::image::{validate_bracket, ExposureBracket, HdrImage};
use crate::io::{encode_png, read_ldr, read_rgbe, write_rgbe};
use crate::metrics::{self, MetricReport};
use crate::multishot::{merge_bracket, solve_response, DEFAULT_LAMBDA, DEFAULT_SAMPLES};
use crate::photometry::{illuminance_of_hdr, luminance_from_hdr, olse_scale};
use crate::synthscene::SceneSpec;
use crate::toyfit::{ablation_fit, generate_scenes, AblationConfig};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const THREADS_ENV: &str = "PANOLUX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "panolux", version, about = "Photometry for equirectangular HDR panoramas")]
pub struct Cli {
    /// Seed for every stochastic component; overrides seeds in config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover the camera response from a bracket and merge it to .hdr.
    Merge {
        /// JSON manifest: {"location_id", "entries": [{"path", "exposure_ms"}], "gt_lux"?}
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Device calibration factor applied to the reported illuminance.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Report the illuminance of a Radiance .hdr panorama.
    Illuminance {
        hdr: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Fit a device scale to a CSV with columns estimated_lux,true_lux.
    Calibrate { pairs: PathBuf },
    /// Illuminance accuracy and reconstruction consistency.
    Metrics {
        /// CSV with columns location_id,pred_lux and optionally hdr_path.
        predictions: PathBuf,
        /// CSV with columns location_id,gt_lux.
        gt: PathBuf,
        /// Also write the report as a one-row CSV.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Render a log-luminance false-color PNG.
    Falsecolor {
        hdr: PathBuf,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Train the toy expansion model on synthetic scenes and report
    /// held-out illuminance accuracy.
    FitDemo {
        config: PathBuf,
        /// Include the illuminance term in the training loss.
        #[arg(long)]
        illuminance: bool,
        /// Write the per-step loss trace as CSV.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
}

/// Exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

/// Caps the global thread pool from `PANOLUX_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Parse {
            context: THREADS_ENV.into(),
            message: format!("`{raw}` is not a positive integer"),
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Parse {
            context: THREADS_ENV.into(),
            message: e.to_string(),
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub exposure_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketManifest {
    pub location_id: String,
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_lux: Option<f64>,
}

impl BracketManifest {
    pub fn from_json(text: &str, context: &Path) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| parse_error(context, e))?;
        if m.entries.len() < 2 {
            return Err(Error::TooFewShots { count: m.entries.len() });
        }
        Ok(m)
    }

    /// Loads every shot, resolving relative paths against `base`.
    pub fn load(&self, base: &Path) -> Result<ExposureBracket> {
        let shots = self
            .entries
            .iter()
            .map(|e| {
                let path = base.join(&e.path);
                let bytes = read_file(&path)?;
                read_ldr(&bytes, e.exposure_ms).map_err(|err| in_file(&path, err))
            })
            .collect::<Result<Vec<_>>>()?;
        let bracket = ExposureBracket::new(self.location_id.clone(), shots);
        validate_bracket(&bracket)?;
        Ok(bracket)
    }
}

/// Settings for `fit-demo`. Scenes are either listed or generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitDemoConfig {
    pub scenes: Option<Vec<SceneSpec>>,
    pub scene_count: usize,
    pub width: usize,
    pub height: usize,
    pub ablation: AblationConfig,
}

impl Default for FitDemoConfig {
    fn default() -> Self {
        Self {
            scenes: None,
            scene_count: 10,
            width: 64,
            height: 32,
            ablation: AblationConfig::default(),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Tags a decoding error with the file it came from.
fn in_file(path: &Path, err: Error) -> Error {
    match err {
        e @ (Error::Io { .. } | Error::Parse { .. }) => e,
        e => parse_error(path, e),
    }
}

fn load_hdr(path: &Path) -> Result<HdrImage> {
    read_rgbe(&read_file(path)?).map_err(|e| in_file(path, e))
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let bytes = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| parse_error(path, e))
}

#[derive(Debug, Deserialize)]
struct CalibrationRow {
    estimated_lux: f64,
    true_lux: f64,
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    location_id: String,
    pred_lux: f64,
    #[serde(default)]
    hdr_path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct GtRow {
    location_id: String,
    gt_lux: f64,
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string(value).expect("JSON output serializes");
    writeln!(out, "{text}").map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

/// Runs one parsed invocation, printing its JSON result to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Merge {
            manifest,
            out: hdr_out,
            lambda,
            samples,
            scale,
        } => {
            let text = String::from_utf8(read_file(manifest)?).map_err(|e| parse_error(manifest, e))?;
            let m = BracketManifest::from_json(&text, manifest)?;
            let base = manifest.parent().unwrap_or(Path::new("."));
            let bracket = m.load(base)?;
            let response = solve_response(&bracket, *samples, *lambda)?;
            let hdr = merge_bracket(&bracket, &response)?;
            let lux = illuminance_of_hdr(&hdr, *scale)?;
            write_file(hdr_out, &write_rgbe(&hdr)?)?;
            let mut report = json!({
                "location_id": m.location_id,
                "illuminance_lux": lux,
                "scale": scale,
                "out": hdr_out.display().to_string(),
            });
            if let Some(gt) = m.gt_lux {
                report["gt_lux"] = json!(gt);
            }
            print_json(out, &report)
        }
        Command::Illuminance { hdr, scale } => {
            let image = load_hdr(hdr)?;
            print_json(out, &json!({ "illuminance_lux": illuminance_of_hdr(&image, *scale)? }))
        }
        Command::Calibrate { pairs } => {
            let rows: Vec<CalibrationRow> = read_csv(pairs)?;
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.estimated_lux, r.true_lux)).collect();
            print_json(out, &olse_scale(&pairs)?)
        }
        Command::Metrics {
            predictions,
            gt,
            csv_out,
        } => {
            let report = metrics_report(predictions, gt)?;
            if let Some(path) = csv_out {
                let text = format!("{}\n{}\n", MetricReport::CSV_HEADER, report.to_csv_line());
                write_file(path, text.as_bytes())?;
            }
            print_json(out, &report)
        }
        Command::Falsecolor {
            hdr,
            lo,
            hi,
            out: png_out,
            scale,
        } => {
            let image = load_hdr(hdr)?;
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(Error::param("scale", format!("{scale} is not positive")));
            }
            let map = metrics::false_color(&luminance_from_hdr(&image.scaled(*scale)?), *lo, *hi)?;
            write_file(png_out, &encode_png(&map.image)?)?;
            print_json(
                out,
                &json!({
                    "out": png_out.display().to_string(),
                    "width": map.image.width,
                    "height": map.image.height,
                    "lo": map.lo,
                    "hi": map.hi,
                }),
            )
        }
        Command::FitDemo {
            config,
            illuminance,
            trace_out,
        } => {
            let text = String::from_utf8(read_file(config)?).map_err(|e| parse_error(config, e))?;
            let mut cfg: FitDemoConfig = serde_json::from_str(&text).map_err(|e| parse_error(config, e))?;
            if let Some(seed) = cli.seed {
                cfg.ablation.seed = seed;
            }
            let scenes = match cfg.scenes.take() {
                Some(s) => s,
                None => generate_scenes(cfg.scene_count, cfg.width, cfg.height, cfg.ablation.seed),
            };
            let (report, fit) = ablation_fit(&scenes, *illuminance, &cfg.ablation)?;
            if let Some(path) = trace_out {
                write_file(path, fit.trace_csv().as_bytes())?;
            }
            print_json(
                out,
                &json!({
                    "with_illuminance": illuminance,
                    "report": report,
                    "model": fit.model,
                }),
            )
        }
    }
}

/// Pairs every prediction with its location's reading; locations with two
/// or more HDR paths contribute to Mean Std.
fn metrics_report(predictions: &Path, gt: &Path) -> Result<MetricReport> {
    let preds: Vec<PredictionRow> = read_csv(predictions)?;
    let gts: Vec<GtRow> = read_csv(gt)?;
    let mut truth = BTreeMap::new();
    for row in gts {
        if truth.insert(row.location_id.clone(), row.gt_lux).is_some() {
            return Err(parse_error(gt, format!("duplicate location_id `{}`", row.location_id)));
        }
    }
    let base = predictions.parent().unwrap_or(Path::new("."));
    let mut pairs = Vec::with_capacity(preds.len());
    let mut stacks: BTreeMap<&str, Vec<PathBuf>> = BTreeMap::new();
    for row in &preds {
        let gt_lux = *truth
            .get(&row.location_id)
            .ok_or_else(|| parse_error(gt, format!("no reading for location_id `{}`", row.location_id)))?;
        pairs.push((row.pred_lux, gt_lux));
        let entry = stacks.entry(row.location_id.as_str()).or_default();
        if let Some(p) = &row.hdr_path {
            entry.push(base.join(p));
        }
    }
    let mut stds = Vec::new();
    for paths in stacks.values().filter(|p| p.len() >= 2) {
        let hdrs = paths.iter().map(|p| load_hdr(p)).collect::<Result<Vec<_>>>()?;
        stds.push(metrics::mean_std_consistency(&hdrs)?);
    }
    let mean_std = (!stds.is_empty()).then(|| stds.iter().sum::<f64>() / stds.len() as f64);
    metrics::report(&pairs, mean_std, stacks.len())
}
