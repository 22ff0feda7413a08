//! A global parametric LDR-to-HDR expansion trained on the illuminance-aware
//! objective.
//!
//! The model has seven parameters: a per-channel log scale, a per-channel
//! inverse-response exponent, and a constant added to clipped (255) codes.
//! It cannot hallucinate spatial detail, which isolates what the
//! illuminance term contributes from what an image prior would.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{HdrImage, LdrImage};
use crate::losses::{total_loss, GradientField, LossBreakdown, LossWeights};
use crate::metrics::{self, MetricReport};
use crate::multishot::simulate_bracket;
use crate::photometry::illuminance_of_hdr;
use crate::synthscene::{render_scene, SceneKind, SceneSpec};

pub const GAMMA_RANGE: (f64, f64) = (0.2, 10.0);
pub const DEFAULT_LR: f64 = 1e-2;
pub const DEFAULT_STEPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionModel {
    pub log_scale: [f64; 3],
    pub gamma: [f64; 3],
    pub saturation_boost: f64,
}

impl Default for ExpansionModel {
    fn default() -> Self {
        Self {
            log_scale: [0.0; 3],
            gamma: [1.0; 3],
            saturation_boost: 0.0,
        }
    }
}

impl ExpansionModel {
    pub fn validate(&self) -> Result<()> {
        for g in self.gamma {
            if !(GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&g) {
                return Err(Error::param("gamma", format!("{g} outside [0.2, 10]")));
            }
        }
        if !self.log_scale.iter().all(|v| v.is_finite()) {
            return Err(Error::param("log_scale", "not finite"));
        }
        if !(self.saturation_boost.is_finite() && self.saturation_boost >= 0.0) {
            return Err(Error::param("saturation_boost", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Gradient step on `(log_scale, ln gamma, boost)`, keeping gamma in
    /// range and the boost non-negative.
    fn step(&mut self, grad: &ModelGradient, lr: f64) {
        for c in 0..3 {
            self.log_scale[c] -= lr * grad.log_scale[c];
            let log_gamma = self.gamma[c].ln() - lr * grad.log_gamma[c];
            self.gamma[c] = log_gamma.exp().clamp(GAMMA_RANGE.0, GAMMA_RANGE.1);
        }
        self.saturation_boost = (self.saturation_boost - lr * grad.saturation_boost).max(0.0);
    }
}

/// Derivatives of a scalar with respect to the optimized parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelGradient {
    pub log_scale: [f64; 3],
    pub log_gamma: [f64; 3],
    pub saturation_boost: f64,
}

impl ModelGradient {
    fn add_scaled(&mut self, other: &ModelGradient, k: f64) {
        for c in 0..3 {
            self.log_scale[c] += k * other.log_scale[c];
            self.log_gamma[c] += k * other.log_gamma[c];
        }
        self.saturation_boost += k * other.saturation_boost;
    }

    fn is_finite(&self) -> bool {
        self.log_scale
            .iter()
            .chain(&self.log_gamma)
            .chain(std::iter::once(&self.saturation_boost))
            .all(|v| v.is_finite())
    }
}

/// `(z/255)^gamma` for every code and channel.
fn power_table(model: &ExpansionModel) -> [[f64; 256]; 3] {
    let mut t = [[0.0; 256]; 3];
    for c in 0..3 {
        for z in 1..256 {
            t[c][z] = (z as f64 / 255.0).powf(model.gamma[c]);
        }
    }
    t
}

/// `H = exp(log_scale) * (z/255)^gamma / dt_seconds + boost * [z == 255]`
pub fn expand(model: &ExpansionModel, ldr: &LdrImage) -> Result<HdrImage> {
    let pow = power_table(model);
    let inv_t = 1.0 / ldr.exposure_s();
    let gain = model.log_scale.map(|s| s.exp() * inv_t);
    let data = ldr
        .pixels()
        .iter()
        .map(|px| {
            [0, 1, 2].map(|c| {
                let z = px[c];
                let base = gain[c] * pow[c][z as usize];
                if z == 255 {
                    base + model.saturation_boost
                } else {
                    base
                }
            })
        })
        .collect();
    HdrImage::new(ldr.width(), ldr.height(), data)
}

/// Chain rule through [`expand`]: maps `dL/dH` to `dL/dparams`.
pub fn expand_backward(model: &ExpansionModel, ldr: &LdrImage, upstream: &GradientField) -> ModelGradient {
    // Accumulate upstream gradients per code, then contract with the
    // per-code derivatives.
    let mut by_code = [[0.0; 256]; 3];
    let mut g = ModelGradient::default();
    for (px, up) in ldr.pixels().iter().zip(upstream.pixels()) {
        for c in 0..3 {
            by_code[c][px[c] as usize] += up[c];
            if px[c] == 255 {
                g.saturation_boost += up[c];
            }
        }
    }
    let pow = power_table(model);
    let inv_t = 1.0 / ldr.exposure_s();
    for c in 0..3 {
        let gain = model.log_scale[c].exp() * inv_t;
        for z in 1..256 {
            let base = gain * pow[c][z] * by_code[c][z];
            g.log_scale[c] += base;
            g.log_gamma[c] += base * (z as f64 / 255.0).ln() * model.gamma[c];
        }
    }
    g
}

/// One training example: an LDR shot, its reference HDR and a meter reading.
#[derive(Debug, Clone)]
pub struct FitBatch {
    pub ldr: LdrImage,
    pub target: HdrImage,
    pub gt_lux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub total: f64,
    pub log_l2: f64,
    pub tv: f64,
    pub illuminance: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: ExpansionModel,
    /// Entry `k` is the mean loss after `k` updates (`steps + 1` rows).
    pub trace: Vec<TraceRow>,
}

impl FitResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,total,log_l2,tv,illuminance\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{},{},{}\n", r.step, r.total, r.log_l2, r.tv, r.illuminance));
        }
        out
    }
}

/// Mean loss over `batches` and its gradient with respect to the model.
pub fn objective(
    model: &ExpansionModel,
    batches: &[FitBatch],
    scale: f64,
    weights: &LossWeights,
) -> Result<(f64, LossBreakdown, ModelGradient)> {
    let parts = batches
        .par_iter()
        .map(|b| {
            let pred = expand(model, &b.ldr)?;
            let out = total_loss(&pred, &b.target, scale, b.gt_lux, weights, None)?;
            Ok((out.value, out.breakdown, expand_backward(model, &b.ldr, &out.grad)))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = 1.0 / batches.len() as f64;
    let mut value = 0.0;
    let mut breakdown = LossBreakdown::default();
    let mut grad = ModelGradient::default();
    for (v, b, g) in &parts {
        value += k * v;
        breakdown.log_l2 += k * b.log_l2;
        breakdown.tv += k * b.tv;
        breakdown.perceptual += k * b.perceptual;
        breakdown.illuminance += k * b.illuminance;
        grad.add_scaled(g, k);
    }
    Ok((value, breakdown, grad))
}

/// Plain gradient descent on the mean total loss.
pub fn fit(
    model: &ExpansionModel,
    batches: &[FitBatch],
    scale: f64,
    weights: &LossWeights,
    steps: usize,
    lr: f64,
) -> Result<FitResult> {
    if steps == 0 {
        return Err(Error::param("steps", "must be at least 1"));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::param("lr", format!("{lr} is not positive")));
    }
    if batches.is_empty() {
        return Err(Error::Empty("no training batches"));
    }
    model.validate()?;
    weights.validate()?;

    let mut model = *model;
    let mut trace = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let (value, b, grad) = objective(&model, batches, scale, weights).map_err(|e| match e {
            Error::InvalidSample { .. } => Error::Divergence { step },
            e => e,
        })?;
        if !value.is_finite() || !grad.is_finite() {
            return Err(Error::Divergence { step });
        }
        trace.push(TraceRow {
            step,
            total: value,
            log_l2: b.log_l2,
            tv: b.tv,
            illuminance: b.illuminance,
        });
        if step < steps {
            model.step(&grad, lr);
        }
    }
    Ok(FitResult { model, trace })
}

/// Settings for [`ablation_run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    /// Shots simulated per scene.
    pub exposures_ms: Vec<f64>,
    /// Exponent of the simulated camera.
    pub camera_gamma: f64,
    pub noise_sigma: f64,
    /// Global factor applied to the reference HDRs, mimicking a
    /// miscalibrated multi-shot "ground truth". Meter readings stay exact.
    pub target_mis_scale: f64,
    /// Fraction of scenes used for training; the rest are held out.
    pub train_fraction: f64,
    pub steps: usize,
    pub lr: f64,
    pub weights: LossWeights,
    /// Lux per unit of the illuminance loss. `None` uses a quarter of the
    /// mean training reading.
    pub illuminance_unit_lux: Option<f64>,
    pub initial_model: ExpansionModel,
    pub seed: u64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            exposures_ms: vec![10.0, 20.0, 40.0],
            camera_gamma: 2.2,
            noise_sigma: 0.5,
            target_mis_scale: 1.5,
            train_fraction: 0.5,
            steps: DEFAULT_STEPS,
            lr: DEFAULT_LR,
            weights: LossWeights::default(),
            illuminance_unit_lux: None,
            initial_model: ExpansionModel::default(),
            seed: 0,
        }
    }
}

/// One scene's simulated shots with reference targets.
#[derive(Debug, Clone)]
pub struct SceneData {
    pub truth: HdrImage,
    pub analytic_lux: f64,
    pub shots: Vec<LdrImage>,
}

/// Renders a scene and simulates its bracket with the configured camera.
pub fn simulate_scene(spec: &SceneSpec, config: &AblationConfig, seed: u64) -> Result<SceneData> {
    let (truth, analytic_lux) = render_scene(spec)?;
    let bracket = simulate_bracket(&truth, &config.exposures_ms, config.camera_gamma, config.noise_sigma, seed)?;
    Ok(SceneData {
        truth,
        analytic_lux,
        shots: bracket.shots,
    })
}

fn training_batches(scenes: &[SceneData], mis_scale: f64) -> Result<Vec<FitBatch>> {
    let mut out = Vec::new();
    for s in scenes {
        let target = s.truth.scaled(mis_scale)?;
        for shot in &s.shots {
            out.push(FitBatch {
                ldr: shot.clone(),
                target: target.clone(),
                gt_lux: s.analytic_lux,
            });
        }
    }
    Ok(out)
}

/// Fits a model on `train` with the illuminance loss measured in units
/// of `unit` lux.
pub fn fit_scenes(train: &[SceneData], config: &AblationConfig, weights: &LossWeights) -> Result<FitResult> {
    let mut batches = training_batches(train, config.target_mis_scale)?;
    let unit = match config.illuminance_unit_lux {
        Some(u) if u > 0.0 => u,
        Some(u) => return Err(Error::param("illuminance_unit_lux", format!("{u} is not positive"))),
        None => 0.25 * train.iter().map(|s| s.analytic_lux).sum::<f64>() / train.len().max(1) as f64,
    };
    if !(unit.is_finite() && unit > 0.0) {
        return Err(Error::param("illuminance_unit_lux", "training scenes carry no light"));
    }
    batches.iter_mut().for_each(|b| b.gt_lux /= unit);
    fit(&config.initial_model, &batches, 1.0 / unit, weights, config.steps, config.lr)
}

/// Held-out evaluation: every shot of every scene is expanded and its
/// derived illuminance compared with the analytic value. `mean_std`
/// averages the per-scene consistency of the expanded shots.
pub fn evaluate(model: &ExpansionModel, scenes: &[SceneData]) -> Result<MetricReport> {
    let mut pairs = Vec::new();
    let mut stds = Vec::new();
    for s in scenes {
        let expanded = s.shots.iter().map(|l| expand(model, l)).collect::<Result<Vec<_>>>()?;
        for h in &expanded {
            pairs.push((illuminance_of_hdr(h, 1.0)?, s.analytic_lux));
        }
        if expanded.len() >= 2 {
            stds.push(metrics::mean_std_consistency(&expanded)?);
        }
    }
    let mean_std = (!stds.is_empty()).then(|| stds.iter().sum::<f64>() / stds.len() as f64);
    metrics::report(&pairs, mean_std, scenes.len())
}

/// Trains one model on the leading scenes (targets mis-scaled, meters
/// exact) with or without the illuminance term, and reports illuminance
/// accuracy on the held-out remainder.
pub fn ablation_run(scenes: &[SceneSpec], with_illuminance: bool, config: &AblationConfig) -> Result<MetricReport> {
    ablation_fit(scenes, with_illuminance, config).map(|(report, _)| report)
}

/// [`ablation_run`] that also returns the training trace.
pub fn ablation_fit(scenes: &[SceneSpec], with_illuminance: bool, config: &AblationConfig) -> Result<(MetricReport, FitResult)> {
    if scenes.len() < 5 {
        return Err(Error::param("scenes", format!("{} given, need at least 5", scenes.len())));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::param("train_fraction", "must be in (0, 1)"));
    }
    let data = scenes
        .iter()
        .enumerate()
        .map(|(i, s)| simulate_scene(s, config, config.seed.wrapping_mul(1000).wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let n_train = ((scenes.len() as f64 * config.train_fraction).round() as usize).clamp(1, scenes.len() - 1);
    let (train, held_out) = data.split_at(n_train);

    let mut weights = config.weights;
    if !with_illuminance {
        weights.lambda_illuminance = 0.0;
    }
    let result = fit_scenes(train, config, &weights)?;
    Ok((evaluate(&result.model, held_out)?, result))
}

/// Mean Std of held-out expansions under one model trained on every shot,
/// and under per-exposure models each trained only on its own shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyComparison {
    pub single_model: f64,
    pub per_shot_models: f64,
}

/// Trains on the leading scenes and compares consistency on the rest.
pub fn consistency_comparison(scenes: &[SceneSpec], config: &AblationConfig) -> Result<ConsistencyComparison> {
    if scenes.len() < 2 {
        return Err(Error::param("scenes", "need training and held-out scenes"));
    }
    if config.exposures_ms.len() < 2 {
        return Err(Error::TooFewShots {
            count: config.exposures_ms.len(),
        });
    }
    let data = scenes
        .iter()
        .enumerate()
        .map(|(i, s)| simulate_scene(s, config, config.seed.wrapping_mul(1000).wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let n_train = ((scenes.len() as f64 * config.train_fraction).round() as usize).clamp(1, scenes.len() - 1);
    let (train, held_out) = data.split_at(n_train);

    let single = fit_scenes(train, config, &config.weights)?.model;
    let per_shot = (0..config.exposures_ms.len())
        .map(|j| {
            let only_j: Vec<SceneData> = train
                .iter()
                .map(|s| SceneData {
                    shots: vec![s.shots[j].clone()],
                    ..s.clone()
                })
                .collect();
            fit_scenes(&only_j, config, &config.weights).map(|r| r.model)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut a = Vec::new();
    let mut b = Vec::new();
    for s in held_out {
        let one = s.shots.iter().map(|l| expand(&single, l)).collect::<Result<Vec<_>>>()?;
        let many = s.shots.iter().zip(&per_shot).map(|(l, m)| expand(m, l)).collect::<Result<Vec<_>>>()?;
        a.push(metrics::mean_std_consistency(&one)?);
        b.push(metrics::mean_std_consistency(&many)?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ConsistencyComparison {
        single_model: mean(&a),
        per_shot_models: mean(&b),
    })
}

/// A reproducible mix of uniform, cosine and disk-light scenes.
pub fn generate_scenes(count: usize, width: usize, height: usize, seed: u64) -> Vec<SceneSpec> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let kind = match i % 3 {
                0 => SceneKind::UniformSky {
                    radiance: rng.gen_range(1.0..8.0),
                },
                1 => SceneKind::CosineSky {
                    radiance: rng.gen_range(2.0..15.0),
                },
                _ => {
                    let angular_radius = rng.gen_range(0.2..0.5);
                    SceneKind::DiskLight {
                        center_theta: rng.gen_range(0.0..(1.4 - angular_radius)),
                        center_phi: rng.gen_range(0.0..std::f64::consts::TAU),
                        angular_radius,
                        disk_radiance: rng.gen_range(8.0..20.0),
                        ambient_radiance: rng.gen_range(0.5..3.0),
                    }
                }
            };
            SceneSpec::new(kind, width, height).with_seed(seed.wrapping_add(i as u64))
        })
        .collect()
}

/// Uniform skies and disk lights over a textured floor, with no black
/// regions: every pixel stays well above the simulated noise floor.
pub fn generate_room_scenes(count: usize, width: usize, height: usize, seed: u64) -> Vec<SceneSpec> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..count)
        .map(|i| {
            let kind = if i % 2 == 0 {
                SceneKind::UniformSky {
                    radiance: rng.gen_range(1.0..8.0),
                }
            } else {
                let angular_radius = rng.gen_range(0.2..0.5);
                SceneKind::DiskLight {
                    center_theta: rng.gen_range(0.0..(1.4 - angular_radius)),
                    center_phi: rng.gen_range(0.0..std::f64::consts::TAU),
                    angular_radius,
                    disk_radiance: rng.gen_range(8.0..20.0),
                    ambient_radiance: rng.gen_range(0.5..3.0),
                }
            };
            SceneSpec::new(kind, width, height)
                .with_floor(0.5, 4.0)
                .with_seed(seed.wrapping_add(i as u64))
        })
        .collect()
}
