//! Luminance maps, hemispherical illuminance and device scale calibration.
//!
//! Luminance follows the Radiance convention: 179 lm/W times the Rec. 709
//! luma of linear RGB. Illuminance is the cosine-weighted integral of
//! luminance over the upper hemisphere (`theta < pi/2`), evaluated with a
//! pixel-center midpoint rule. Because heights are even, no pixel straddles
//! the horizon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{pixel_solid_angle, row_theta, HdrImage};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Luminous efficacy of the Radiance unit convention, lm/W.
pub const LUMINOUS_EFFICACY: f64 = 179.0;

/// Per-channel luminance weights (R, G, B).
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Per-pixel luminance in cd/m².
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LuminanceMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        // Reuse the panorama dimension rules.
        HdrImage::filled(width, height, [0.0; 3])?;
        if data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "sample count does not match dimensions",
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSample {
                index,
                value: data[index],
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

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

#[inline]
pub fn luminance(rgb: [f64; 3]) -> f64 {
    LUMINOUS_EFFICACY * (LUMA_WEIGHTS[0] * rgb[0] + LUMA_WEIGHTS[1] * rgb[1] + LUMA_WEIGHTS[2] * rgb[2])
}

pub fn luminance_from_hdr(hdr: &HdrImage) -> LuminanceMap {
    LuminanceMap {
        width: hdr.width(),
        height: hdr.height(),
        data: hdr.pixels().iter().map(|&p| luminance(p)).collect(),
    }
}

/// Quadrature weight `sin(theta) cos(theta) dtheta dphi` of a pixel in `row`;
/// zero on the lower hemisphere.
pub fn illuminance_weight(row: usize, width: usize, height: usize) -> f64 {
    if 2 * row >= height {
        return 0.0;
    }
    pixel_solid_angle(row, width, height) * row_theta(row, height).cos()
}

/// Cosine-weighted integral of luminance over the upper hemisphere, in lux.
///
/// Rows are summed in parallel; each row and the final reduction use
/// compensated summation in a fixed order, so the result does not depend
/// on the thread count.
pub fn integrate_illuminance(lum: &LuminanceMap) -> f64 {
    let (w, h) = (lum.width, lum.height);
    let rows: Vec<f64> = (0..h / 2)
        .into_par_iter()
        .map(|r| {
            let mut acc = CompensatedSum::default();
            lum.data[r * w..(r + 1) * w].iter().for_each(|&v| acc.add(v));
            acc.value() * illuminance_weight(r, w, h)
        })
        .collect();
    compensated_sum(rows)
}

/// Illuminance of a panorama after applying a device scale factor.
pub fn illuminance_of_hdr(hdr: &HdrImage, scale: f64) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param("scale", format!("{scale} is not positive")));
    }
    Ok(scale * integrate_illuminance(&luminance_from_hdr(hdr)))
}

/// Least-squares device scale mapping HDR-derived lux onto meter readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub scale: f64,
    pub residual_rms: f64,
}

/// Fits `true ≈ scale * estimated` with no intercept.
pub fn olse_scale(pairs: &[(f64, f64)]) -> Result<CalibrationResult> {
    if pairs.is_empty() {
        return Err(Error::Empty("calibration needs at least one pair"));
    }
    for &(x, y) in pairs {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::param("estimated_lux", format!("{x} is not a non-negative number")));
        }
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::param("true_lux", format!("{y} is not positive")));
        }
    }
    let sxx = compensated_sum(pairs.iter().map(|(x, _)| x * x));
    if sxx == 0.0 {
        return Err(Error::param("estimated_lux", "all estimates are zero"));
    }
    let sxy = compensated_sum(pairs.iter().map(|(x, y)| x * y));
    let scale = sxy / sxx;
    let sse = compensated_sum(pairs.iter().map(|(x, y)| (scale * x - y).powi(2)));
    Ok(CalibrationResult {
        scale,
        residual_rms: (sse / pairs.len() as f64).sqrt(),
    })
}
