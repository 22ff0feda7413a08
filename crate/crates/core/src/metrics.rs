//! Consistency and illuminance-accuracy metrics, and false-color maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::HdrImage;
use crate::io::Rgb8Image;
use crate::numeric::compensated_sum;
use crate::photometry::LuminanceMap;

pub const CONSISTENCY_EPSILON: f64 = 1e-6;

/// Summary of one evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `None` when no per-location HDR stacks were available.
    pub mean_std: Option<f64>,
    pub acc_25: f64,
    pub acc_10: f64,
    pub n_locations: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "mean_std,acc_25,acc_10,n_locations";

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Values in [`Self::CSV_HEADER`] order; an absent `mean_std` is an empty field.
    pub fn to_csv_line(&self) -> String {
        let std = self.mean_std.map(|v| v.to_string()).unwrap_or_default();
        format!("{std},{},{},{}", self.acc_25, self.acc_10, self.n_locations)
    }
}

/// Mean over pixels and channels of the population standard deviation of
/// `ln(H + 1e-6)` across a stack of reconstructions of the same scene.
pub fn mean_std_consistency(hdrs: &[HdrImage]) -> Result<f64> {
    if hdrs.len() < 2 {
        return Err(Error::TooFewShots { count: hdrs.len() });
    }
    let first = &hdrs[0];
    for (index, h) in hdrs.iter().enumerate().skip(1) {
        if !h.same_shape(first) {
            return Err(Error::MismatchedDimensions {
                index,
                width: first.width(),
                height: first.height(),
                got_width: h.width(),
                got_height: h.height(),
            });
        }
    }
    let k = hdrs.len() as f64;
    let mut stds = Vec::with_capacity(first.sample_count());
    let mut logs = vec![0.0; hdrs.len()];
    for i in 0..first.pixels().len() {
        for c in 0..3 {
            for (l, h) in logs.iter_mut().zip(hdrs) {
                *l = (h.pixels()[i][c] + CONSISTENCY_EPSILON).ln();
            }
            let mean = compensated_sum(logs.iter().copied()) / k;
            let var = compensated_sum(logs.iter().map(|l| (l - mean).powi(2))) / k;
            stds.push(var.sqrt());
        }
    }
    Ok(compensated_sum(stds) / first.sample_count() as f64)
}

/// Fraction of `(predicted, true)` pairs whose relative error is at most
/// `margin` (inclusive).
pub fn accuracy_within(pairs: &[(f64, f64)], margin: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("accuracy needs at least one pair"));
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::param("margin", format!("{margin} is not positive")));
    }
    let mut hits = 0usize;
    for &(pred, gt) in pairs {
        if !(gt.is_finite() && gt > 0.0) {
            return Err(Error::param("gt_lux", format!("{gt} is not positive")));
        }
        if (pred - gt).abs() / gt <= margin {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

/// Accuracy at the 25% and 10% margins over one prediction per pair.
pub fn report(pairs: &[(f64, f64)], mean_std: Option<f64>, n_locations: usize) -> Result<MetricReport> {
    Ok(MetricReport {
        mean_std,
        acc_25: accuracy_within(pairs, 0.25)?,
        acc_10: accuracy_within(pairs, 0.10)?,
        n_locations,
    })
}

const RAMP_STOPS: [[f64; 3]; 5] = [
    [0.0, 0.0, 255.0],
    [0.0, 255.0, 255.0],
    [0.0, 255.0, 0.0],
    [255.0, 255.0, 0.0],
    [255.0, 0.0, 0.0],
];

/// Entry `index` of the 256-step blue-cyan-green-yellow-red ramp.
pub fn ramp_color(index: u8) -> [u8; 3] {
    let t = index as f64 / 255.0 * (RAMP_STOPS.len() - 1) as f64;
    let k = (t.floor() as usize).min(RAMP_STOPS.len() - 2);
    let f = t - k as f64;
    let (a, b) = (RAMP_STOPS[k], RAMP_STOPS[k + 1]);
    [0, 1, 2].map(|c| (a[c] + f * (b[c] - a[c])).round() as u8)
}

/// Ramp index for luminance `l` in the log window `[lo, hi]`.
pub fn ramp_index(l: f64, lo: f64, hi: f64) -> u8 {
    let l = l.max(f64::MIN_POSITIVE);
    let t = (l.log10() - lo.log10()) / (hi.log10() - lo.log10());
    (t.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// A false-color raster together with its legend range.
#[derive(Debug, Clone, PartialEq)]
pub struct FalseColorMap {
    pub image: Rgb8Image,
    pub lo: f64,
    pub hi: f64,
}

/// Maps log-luminance in `[lo, hi]` onto the color ramp.
pub fn false_color(lum: &LuminanceMap, lo: f64, hi: f64) -> Result<FalseColorMap> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::param("range", format!("need 0 < lo < hi, got lo={lo} hi={hi}")));
    }
    let data = lum.values().iter().map(|&l| ramp_color(ramp_index(l, lo, hi))).collect();
    Ok(FalseColorMap {
        image: Rgb8Image::new(lum.width(), lum.height(), data)?,
        lo,
        hi,
    })
}
