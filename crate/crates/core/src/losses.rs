//! Training objective for illuminance-aware HDR reconstruction, with
//! analytic gradients with respect to the predicted panorama.
//!
//! The total objective is
//!
//! ```text
//! L = a * log_l2 + lambda_tv * tv + lambda_p * perceptual + lambda * (I_hat - I_gt)^2
//! ```
//!
//! where `I_hat` is the scaled hemispherical illuminance of the prediction.
//! Image terms are means over all samples so their weights do not depend on
//! resolution. The illuminance term is in raw lux²; pre-scale `scale` and
//! `gt_lux` together if magnitudes are large.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{HdrImage, Rgb};
use crate::numeric::compensated_sum;
use crate::photometry::{illuminance_of_hdr, illuminance_weight, LUMA_WEIGHTS, LUMINOUS_EFFICACY};

/// Partial derivatives of a scalar loss with respect to every sample of a
/// panorama.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl GradientField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0; 3]; width * height],
        }
    }

    pub fn zeros_like(image: &HdrImage) -> Self {
        Self::zeros(image.width(), image.height())
    }

    pub fn from_pixels(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "gradient length does not match dimensions",
            });
        }
        if let Some(i) = data.iter().flatten().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample {
                index: i,
                value: data[i / 3][i % 3],
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> Rgb {
        self.data[row * self.width + col]
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, other: &GradientField, k: f64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for c in 0..3 {
                a[c] += k * b[c];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|v| v.is_finite())
    }
}

/// Term weights of the total objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    /// Weight of the log-domain L2 reconstruction term.
    pub lambda_log_l2: f64,
    pub lambda_tv: f64,
    pub lambda_p: f64,
    pub lambda_illuminance: f64,
    /// Offset inside the logarithms, guarding black pixels.
    pub log_epsilon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_log_l2: 1.0,
            lambda_tv: 0.1,
            lambda_p: 0.001,
            lambda_illuminance: 1.0,
            log_epsilon: 1e-6,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda_log_l2", self.lambda_log_l2),
            ("lambda_tv", self.lambda_tv),
            ("lambda_p", self.lambda_p),
            ("lambda_illuminance", self.lambda_illuminance),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("{v} is not >= 0")));
            }
        }
        if !(self.log_epsilon.is_finite() && self.log_epsilon > 0.0) {
            return Err(Error::param("log_epsilon", format!("{} is not positive", self.log_epsilon)));
        }
        Ok(())
    }

    pub fn zero() -> Self {
        Self {
            lambda_log_l2: 0.0,
            lambda_tv: 0.0,
            lambda_p: 0.0,
            lambda_illuminance: 0.0,
            ..Self::default()
        }
    }
}

pub const EXPOSURE_BINS: usize = 20;
pub const EXPOSURE_STEP_MS: f64 = 5.0;

/// One-hot exposure code over the 5 ms .. 100 ms grid in 5 ms steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureCode {
    pub bins: [f64; EXPOSURE_BINS],
    pub stop_ms: f64,
}

impl ExposureCode {
    pub fn index(&self) -> usize {
        self.bins.iter().position(|&b| b == 1.0).unwrap_or(0)
    }
}

/// Snaps an exposure time to its nearest grid stop (ties round up).
pub fn encode_exposure(exposure_ms: f64) -> Result<ExposureCode> {
    let lo = EXPOSURE_STEP_MS / 2.0;
    let hi = EXPOSURE_STEP_MS * (EXPOSURE_BINS as f64 + 0.5);
    if !(lo..=hi).contains(&exposure_ms) {
        return Err(Error::ExposureOutOfRange { exposure_ms });
    }
    // The upper tie (102.5 ms) would round to a 21st stop; keep it on the grid.
    let index = ((exposure_ms / EXPOSURE_STEP_MS + 0.5).floor() as usize - 1).min(EXPOSURE_BINS - 1);
    let mut bins = [0.0; EXPOSURE_BINS];
    bins[index] = 1.0;
    Ok(ExposureCode {
        bins,
        stop_ms: EXPOSURE_STEP_MS * (index + 1) as f64,
    })
}

fn check_same_shape(a: &HdrImage, b: &HdrImage) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::MismatchedDimensions {
            index: 1,
            width: a.width(),
            height: a.height(),
            got_width: b.width(),
            got_height: b.height(),
        })
    }
}

/// Mean squared difference of `ln(x + eps)` between prediction and target.
pub fn log_l2_loss(pred: &HdrImage, target: &HdrImage, eps: f64) -> Result<(f64, GradientField)> {
    check_same_shape(pred, target)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param("log_epsilon", format!("{eps} is not positive")));
    }
    let n = pred.sample_count() as f64;
    let mut grad = GradientField::zeros_like(pred);
    let mut sq = Vec::with_capacity(pred.sample_count());
    for ((p, t), g) in pred.pixels().iter().zip(target.pixels()).zip(&mut grad.data) {
        for c in 0..3 {
            let d = (p[c] + eps).ln() - (t[c] + eps).ln();
            sq.push(d * d);
            g[c] = 2.0 * d / ((p[c] + eps) * n);
        }
    }
    Ok((compensated_sum(sq) / n, grad))
}

pub(crate) fn tv_raw(width: usize, height: usize, data: &[Rgb]) -> (f64, Vec<Rgb>) {
    let n = (3 * data.len()) as f64;
    let mut grad = vec![[0.0; 3]; data.len()];
    let mut terms = Vec::with_capacity(6 * data.len());
    let mut visit = |a: usize, b: usize, grad: &mut Vec<Rgb>| {
        for c in 0..3 {
            let d = data[b][c] - data[a][c];
            terms.push(d.abs());
            let s = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            grad[b][c] += s / n;
            grad[a][c] -= s / n;
        }
    };
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            if c + 1 < width {
                visit(i, i + 1, &mut grad);
            }
            if r + 1 < height {
                visit(i, i + width, &mut grad);
            }
        }
    }
    (compensated_sum(terms) / n, grad)
}

/// Anisotropic L1 total variation (horizontal plus vertical neighbour
/// differences, all channels), divided by the sample count. The
/// subgradient at exact ties is zero.
pub fn tv_loss(pred: &HdrImage) -> (f64, GradientField) {
    let (value, data) = tv_raw(pred.width(), pred.height(), pred.pixels());
    (
        value,
        GradientField {
            width: pred.width(),
            height: pred.height(),
            data,
        },
    )
}

/// Squared error between the prediction's derived illuminance and a meter
/// reading.
pub fn illuminance_loss(pred: &HdrImage, scale: f64, gt_lux: f64) -> Result<(f64, GradientField)> {
    if !(gt_lux.is_finite() && gt_lux > 0.0) {
        return Err(Error::param("gt_lux", format!("{gt_lux} is not positive")));
    }
    let estimate = illuminance_of_hdr(pred, scale)?;
    let residual = estimate - gt_lux;
    let (w, h) = (pred.width(), pred.height());
    let mut grad = GradientField::zeros(w, h);
    for r in 0..h / 2 {
        let k = 2.0 * residual * scale * LUMINOUS_EFFICACY * illuminance_weight(r, w, h);
        for g in &mut grad.data[r * w..(r + 1) * w] {
            *g = LUMA_WEIGHTS.map(|c| k * c);
        }
    }
    Ok((residual * residual, grad))
}

/// Plug-in image-similarity term (e.g. a feature-space loss). Must return a
/// value and its gradient with respect to `pred`.
pub trait PerceptualLoss {
    fn evaluate(&self, pred: &HdrImage, target: &HdrImage) -> Result<(f64, GradientField)>;
}

impl<F> PerceptualLoss for F
where
    F: Fn(&HdrImage, &HdrImage) -> Result<(f64, GradientField)>,
{
    fn evaluate(&self, pred: &HdrImage, target: &HdrImage) -> Result<(f64, GradientField)> {
        self(pred, target)
    }
}

/// Unweighted value of each term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub log_l2: f64,
    pub tv: f64,
    pub perceptual: f64,
    pub illuminance: f64,
}

impl LossBreakdown {
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        w.lambda_log_l2 * self.log_l2 + w.lambda_tv * self.tv + w.lambda_p * self.perceptual + w.lambda_illuminance * self.illuminance
    }
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub value: f64,
    pub grad: GradientField,
    pub breakdown: LossBreakdown,
}

pub fn total_loss(
    pred: &HdrImage,
    target: &HdrImage,
    scale: f64,
    gt_lux: f64,
    weights: &LossWeights,
    perceptual: Option<&dyn PerceptualLoss>,
) -> Result<LossOutput> {
    weights.validate()?;
    let (log_l2, g_l2) = log_l2_loss(pred, target, weights.log_epsilon)?;
    let (tv, g_tv) = tv_loss(pred);
    let (ill, g_ill) = illuminance_loss(pred, scale, gt_lux)?;
    let (perc, g_perc) = match perceptual {
        Some(hook) => {
            let (v, g) = hook.evaluate(pred, target)?;
            if g.width != pred.width() || g.height != pred.height() {
                return Err(Error::InvalidDimensions {
                    width: g.width,
                    height: g.height,
                    reason: "perceptual gradient shape differs from prediction",
                });
            }
            (v, Some(g))
        }
        None => (0.0, None),
    };

    let mut grad = GradientField::zeros_like(pred);
    grad.add_scaled(&g_l2, weights.lambda_log_l2);
    grad.add_scaled(&g_tv, weights.lambda_tv);
    if let Some(g) = &g_perc {
        grad.add_scaled(g, weights.lambda_p);
    }
    grad.add_scaled(&g_ill, weights.lambda_illuminance);

    let breakdown = LossBreakdown {
        log_l2,
        tv,
        perceptual: perc,
        illuminance: ill,
    };
    Ok(LossOutput {
        value: breakdown.weighted_total(weights),
        grad,
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> HdrImage {
        HdrImage::from_fn(w, h, |r, c| [1.0 + r as f64, 0.5 + 0.25 * c as f64, 2.0 + (r * c) as f64 * 0.1]).unwrap()
    }

    #[test]
    fn exposure_grid() {
        assert_eq!(encode_exposure(5.0).unwrap().index(), 0);
        assert_eq!(encode_exposure(100.0).unwrap().index(), 19);
        let c = encode_exposure(37.0).unwrap();
        assert_eq!((c.index(), c.stop_ms), (6, 35.0));
        assert_eq!(encode_exposure(7.5).unwrap().stop_ms, 10.0);
        assert_eq!(encode_exposure(2.5).unwrap().index(), 0);
        assert_eq!(encode_exposure(102.5).unwrap().index(), 19);
        assert!(encode_exposure(2.4).is_err());
        assert!(encode_exposure(102.6).is_err());
        assert!(encode_exposure(f64::NAN).is_err());
        for k in 1..=20 {
            let stop = 5.0 * k as f64;
            let code = encode_exposure(stop).unwrap();
            assert_eq!(code.stop_ms, stop);
            assert_eq!(code.bins.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn log_l2_fixed_point_and_unit_ratio() {
        let t = ramp(8, 4);
        let (v, g) = log_l2_loss(&t, &t, 1e-6).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.pixels().iter().flatten().all(|&x| x == 0.0));

        let target = HdrImage::filled(4, 2, [10.0; 3]).unwrap();
        let pred = target.scaled(std::f64::consts::E).unwrap();
        let (v, _) = log_l2_loss(&pred, &target, 1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn log_l2_shape_mismatch() {
        assert!(log_l2_loss(&ramp(8, 4), &ramp(4, 2), 1e-6).is_err());
    }

    #[test]
    fn tv_examples() {
        let (v, g) = tv_loss(&HdrImage::filled(8, 4, [3.0; 3]).unwrap());
        assert_eq!(v, 0.0);
        assert!(g.pixels().iter().flatten().all(|&x| x == 0.0));

        let (v, g) = tv_raw(2, 1, &[[1.0; 3], [3.0; 3]]);
        assert_eq!(v, 1.0);
        assert_eq!(g, vec![[-1.0 / 6.0; 3], [1.0 / 6.0; 3]]);
    }

    #[test]
    fn illuminance_loss_fixed_point() {
        let img = ramp(16, 8);
        let lux = illuminance_of_hdr(&img, 0.5).unwrap();
        let (v, g) = illuminance_loss(&img, 0.5, lux).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.pixels().iter().flatten().all(|&x| x == 0.0));

        let (_, g) = illuminance_loss(&img, 0.5, 1.0).unwrap();
        for r in 4..8 {
            for c in 0..16 {
                assert_eq!(g.pixel(r, c), [0.0; 3]);
            }
        }
        assert!(illuminance_loss(&img, 0.0, 1.0).is_err());
        assert!(illuminance_loss(&img, 1.0, 0.0).is_err());
    }

    #[test]
    fn total_loss_decomposition() {
        let t = ramp(16, 8);
        let lux = illuminance_of_hdr(&t, 1.0).unwrap();
        let w = LossWeights::default();
        let out = total_loss(&t, &t, 1.0, lux, &w, None).unwrap();
        assert_eq!(out.breakdown.log_l2, 0.0);
        assert_eq!(out.breakdown.illuminance, 0.0);
        assert_eq!(out.breakdown.perceptual, 0.0);
        assert!((out.value - w.lambda_tv * tv_loss(&t).0).abs() < 1e-15);

        let only_ill = LossWeights {
            lambda_illuminance: 1.0,
            ..LossWeights::zero()
        };
        let out = total_loss(&t.scaled(2.0).unwrap(), &t, 1.0, lux, &only_ill, None).unwrap();
        let (ill, g_ill) = illuminance_loss(&t.scaled(2.0).unwrap(), 1.0, lux).unwrap();
        assert_eq!(out.value, ill);
        assert_eq!(out.grad, g_ill);
    }

    #[test]
    fn perceptual_hook_is_weighted() {
        let t = ramp(8, 4);
        let hook = |p: &HdrImage, _: &HdrImage| -> Result<(f64, GradientField)> {
            let mut g = GradientField::zeros_like(p);
            g.data.iter_mut().for_each(|x| *x = [1.0; 3]);
            Ok((5.0, g))
        };
        let w = LossWeights {
            lambda_p: 0.5,
            ..LossWeights::zero()
        };
        let lux = illuminance_of_hdr(&t, 1.0).unwrap();
        let out = total_loss(&t, &t, 1.0, lux, &w, Some(&hook)).unwrap();
        assert_eq!(out.value, 2.5);
        assert_eq!(out.grad.pixel(0, 0), [0.5; 3]);
    }

    #[test]
    fn invalid_weights_rejected() {
        let t = ramp(8, 4);
        let w = LossWeights {
            log_epsilon: 0.0,
            ..LossWeights::default()
        };
        assert!(total_loss(&t, &t, 1.0, 1.0, &w, None).is_err());
        let w = LossWeights {
            lambda_tv: -1.0,
            ..LossWeights::default()
        };
        assert!(total_loss(&t, &t, 1.0, 1.0, &w, None).is_err());
    }
}
