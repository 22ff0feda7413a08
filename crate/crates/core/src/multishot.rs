//! Multi-exposure HDR: camera response recovery and weighted bracket merge.
//!
//! The response `g(z)` maps an 8-bit code to the log of the exposure
//! (radiance times shutter time in seconds) that produced it. It is
//! recovered per channel from a bracket by linear least squares with a
//! hat-weighted data term, a hat-weighted second-difference smoothness
//! term, and the gauge fixed by `g(128) = 0`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{validate_bracket, ExposureBracket, HdrImage, LdrImage, Rgb};

pub const CODES: usize = 256;
pub const MID_CODE: usize = 128;
pub const DEFAULT_LAMBDA: f64 = 100.0;
pub const DEFAULT_SAMPLES: usize = 200;
pub const MIN_SAMPLES: usize = 50;

/// Triangular weight favouring mid-range codes; zero at 0 and 255.
#[inline]
pub fn hat_weight(z: u8) -> f64 {
    if z <= 127 {
        z as f64
    } else {
        (255 - z) as f64
    }
}

/// Per-channel log-exposure response curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraResponse {
    curves: [Vec<f64>; 3],
    pub smoothing_lambda: f64,
}

impl CameraResponse {
    /// Wraps three 256-entry curves, checking monotonicity and re-pinning
    /// each curve so `g[128] = 0`.
    pub fn new(curves: [Vec<f64>; 3], smoothing_lambda: f64) -> Result<Self> {
        let mut curves = curves;
        for (channel, g) in curves.iter_mut().enumerate() {
            if g.len() != CODES {
                return Err(Error::param("curves", format!("channel {channel} has {} entries", g.len())));
            }
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::param("curves", format!("channel {channel} code {i} is not finite")));
            }
            let pin = g[MID_CODE];
            g.iter_mut().for_each(|v| *v -= pin);
            if let Some(code) = (1..CODES).find(|&z| g[z] < g[z - 1]) {
                return Err(Error::NonMonotoneResponse { channel, code });
            }
        }
        Ok(Self {
            curves,
            smoothing_lambda,
        })
    }

    /// The exact response of a power-law camera `z = 255 * (E t)^(1/gamma)`,
    /// i.e. `g(z) = gamma * ln(z / 255)`, normalized at code 128. Code 0 is
    /// extrapolated linearly from codes 1 and 2.
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::param("gamma", format!("{gamma} is not positive")));
        }
        let mut g: Vec<f64> = (0..CODES).map(|z| gamma * (z.max(1) as f64 / 255.0).ln()).collect();
        g[0] = 2.0 * g[1] - g[2];
        Self::new([g.clone(), g.clone(), g], 0.0)
    }

    pub fn curve(&self, channel: usize) -> &[f64] {
        &self.curves[channel]
    }

    #[inline]
    pub fn log_exposure(&self, channel: usize, code: u8) -> f64 {
        self.curves[channel][code as usize]
    }
}

fn sample_grid(width: usize, height: usize, count: usize) -> Vec<(usize, usize)> {
    let count = count.min(width * height);
    let rows = ((count as f64 / 2.0).sqrt().round() as usize).clamp(1, height);
    let cols = count.div_ceil(rows).min(width);
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let r = ((i as f64 + 0.5) * height as f64 / rows as f64) as usize;
            let c = ((j as f64 + 0.5) * width as f64 / cols as f64) as usize;
            out.push((r.min(height - 1), c.min(width - 1)));
        }
    }
    out.truncate(count);
    out
}

/// Recovers the camera response from a bracket.
///
/// `sample_count` pixel locations are taken on a uniform spatial grid.
/// Samples that are clipped (code 0 or 255) in every shot carry no
/// information and are dropped.
pub fn solve_response(bracket: &ExposureBracket, sample_count: usize, smoothing_lambda: f64) -> Result<CameraResponse> {
    if bracket.shots.len() < 2 {
        return Err(Error::Underdetermined(format!(
            "{} shot(s); recovering a response needs at least 2",
            bracket.shots.len()
        )));
    }
    validate_bracket(bracket)?;
    if sample_count < MIN_SAMPLES {
        return Err(Error::param("sample_count", format!("{sample_count} < {MIN_SAMPLES}")));
    }
    if !(smoothing_lambda.is_finite() && smoothing_lambda >= 0.0) {
        return Err(Error::param("smoothing_lambda", format!("{smoothing_lambda} is not >= 0")));
    }
    let locations = sample_grid(bracket.width(), bracket.height(), sample_count);
    let log_times: Vec<f64> = bracket.shots.iter().map(|s| s.exposure_s().ln()).collect();

    let mut curves: [Vec<f64>; 3] = Default::default();
    for (channel, curve) in curves.iter_mut().enumerate() {
        let samples: Vec<Vec<u8>> = locations
            .iter()
            .map(|&(r, c)| bracket.shots.iter().map(|s| s.pixel(r, c)[channel]).collect::<Vec<u8>>())
            .filter(|codes| codes.iter().any(|&z| hat_weight(z) > 0.0))
            .collect();
        let equations = samples.len() * (bracket.shots.len() - 1);
        if equations < CODES - 1 {
            return Err(Error::Underdetermined(format!(
                "channel {channel}: {} usable samples x {} shots gives {equations} constraints, need {}",
                samples.len(),
                bracket.shots.len(),
                CODES - 1
            )));
        }
        *curve = solve_channel(&samples, &log_times, smoothing_lambda)?;
    }
    CameraResponse::new(curves, smoothing_lambda)
}

/// Least squares over `[g(0..256), ln E_i]`, with the per-sample unknowns
/// eliminated through their (diagonal) block before factorizing.
fn solve_channel(samples: &[Vec<u8>], log_times: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let mut gg = DMatrix::<f64>::zeros(CODES, CODES);
    let mut rhs = DVector::<f64>::zeros(CODES);

    // Data term: w * (g(z) - x_i) = w * ln(dt_j).
    let mut coupling: Vec<(usize, f64)> = Vec::with_capacity(log_times.len());
    for codes in samples {
        coupling.clear();
        let mut d = 0.0;
        let mut rx = 0.0;
        for (&z, &b) in codes.iter().zip(log_times) {
            let a2 = hat_weight(z).powi(2);
            if a2 == 0.0 {
                continue;
            }
            let z = z as usize;
            gg[(z, z)] += a2;
            rhs[z] += a2 * b;
            d += a2;
            rx -= a2 * b;
            match coupling.iter_mut().find(|(k, _)| *k == z) {
                Some((_, c)) => *c -= a2,
                None => coupling.push((z, -a2)),
            }
        }
        // Schur complement of this sample's unknown.
        for &(z1, c1) in &coupling {
            rhs[z1] -= c1 * rx / d;
            for &(z2, c2) in &coupling {
                gg[(z1, z2)] -= c1 * c2 / d;
            }
        }
    }

    // Smoothness: sqrt(lambda) * w(z) * (g[z-1] - 2 g[z] + g[z+1]).
    for z in 1..CODES - 1 {
        let s = lambda * hat_weight(z as u8).powi(2);
        let stencil = [(z - 1, 1.0), (z, -2.0), (z + 1, 1.0)];
        for &(i, a) in &stencil {
            for &(j, b) in &stencil {
                gg[(i, j)] += s * a * b;
            }
        }
    }

    gg[(MID_CODE, MID_CODE)] += 1.0;

    let chol = gg.cholesky().ok_or(Error::Singular)?;
    let g = chol.solve(&rhs);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(g.iter().copied().collect())
}

/// Fuses a bracket into linear radiance using a recovered response.
///
/// Per pixel and channel, `ln E` is the hat-weighted mean of
/// `g(z_j) - ln(dt_j)`. Pixels clipped in every shot fall back to the
/// nearest unclipped code: `g(254)` from the shortest shot showing 255,
/// otherwise `g(1)` from the longest shot.
pub fn merge_bracket(bracket: &ExposureBracket, response: &CameraResponse) -> Result<HdrImage> {
    validate_bracket(bracket)?;
    let (w, h) = (bracket.width(), bracket.height());
    let log_times: Vec<f64> = bracket.shots.iter().map(|s| s.exposure_s().ln()).collect();
    let longest = argmin_by(&bracket.shots, |s| -s.exposure_ms());

    let rows: Vec<Vec<Rgb>> = (0..h)
        .into_par_iter()
        .map(|r| {
            (0..w)
                .map(|c| {
                    let mut out = [0.0; 3];
                    for (ch, v) in out.iter_mut().enumerate() {
                        let mut num = 0.0;
                        let mut den = 0.0;
                        let mut saw_white = None::<usize>;
                        for (j, shot) in bracket.shots.iter().enumerate() {
                            let z = shot.pixel(r, c)[ch];
                            let wz = hat_weight(z);
                            num += wz * (response.log_exposure(ch, z) - log_times[j]);
                            den += wz;
                            if z == 255 {
                                saw_white = match saw_white {
                                    Some(k) if bracket.shots[k].exposure_ms() <= shot.exposure_ms() => Some(k),
                                    _ => Some(j),
                                };
                            }
                        }
                        let log_e = if den > 0.0 {
                            num / den
                        } else if let Some(j) = saw_white {
                            response.log_exposure(ch, 254) - log_times[j]
                        } else {
                            response.log_exposure(ch, 1) - log_times[longest]
                        };
                        *v = log_e.exp();
                    }
                    out
                })
                .collect()
        })
        .collect();
    HdrImage::new(w, h, rows.into_iter().flatten().collect())
}

fn argmin_by(shots: &[LdrImage], key: impl Fn(&LdrImage) -> f64) -> usize {
    (0..shots.len())
        .min_by(|&a, &b| key(&shots[a]).total_cmp(&key(&shots[b])))
        .unwrap_or(0)
}

/// Forward-simulates a power-law camera over a bracket of exposure times.
///
/// `z = clamp(round(255 * (E * dt / 1000)^(1/gamma) + n), 0, 255)` with
/// `n ~ N(0, noise_sigma)` in code units, seeded by `seed`.
pub fn simulate_bracket(
    hdr: &HdrImage,
    exposures_ms: &[f64],
    gamma: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<ExposureBracket> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::param("gamma", format!("{gamma} is not positive")));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::param("noise_sigma", format!("{noise_sigma} is not >= 0")));
    }
    if exposures_ms.is_empty() {
        return Err(Error::Empty("no exposures to simulate"));
    }
    for (i, &t) in exposures_ms.iter().enumerate() {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::param("exposures_ms", format!("{t} is not positive")));
        }
        if exposures_ms[..i].contains(&t) {
            return Err(Error::DuplicateExposure { exposure_ms: t });
        }
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::param("noise_sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv_gamma = 1.0 / gamma;
    let shots = exposures_ms
        .iter()
        .map(|&t| {
            let data = hdr
                .pixels()
                .iter()
                .map(|px| {
                    px.map(|e| {
                        let mut z = 255.0 * (e * t / 1000.0).powf(inv_gamma);
                        if noise_sigma > 0.0 {
                            z += noise.sample(&mut rng);
                        }
                        z.round().clamp(0.0, 255.0) as u8
                    })
                })
                .collect();
            LdrImage::new(hdr.width(), hdr.height(), data, t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExposureBracket::new("simulated", shots))
}
