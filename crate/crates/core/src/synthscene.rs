//! Synthetic panoramas whose upper-hemisphere illuminance has a closed form.
//!
//! The lower hemisphere never contributes to illuminance, so it can carry
//! an optional seeded random "floor" texture. That gives bracket
//! simulations a wide spread of codes without disturbing the analytic lux.
//! Pixels straddling a disk edge take the disk radiance in proportion to
//! their (supersampled) coverage.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{col_phi, row_theta, HdrImage};
use crate::photometry::{LUMA_WEIGHTS, LUMINOUS_EFFICACY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum SceneKind {
    /// Constant radiance over the whole sphere.
    UniformSky { radiance: f64 },
    /// `radiance * cos(theta)` above the horizon, black below.
    CosineSky { radiance: f64 },
    /// A spherical cap of constant radiance over a constant ambient sphere.
    /// The cap must lie entirely above the horizon.
    DiskLight {
        center_theta: f64,
        center_phi: f64,
        angular_radius: f64,
        disk_radiance: f64,
        ambient_radiance: f64,
    },
}

/// Log-uniform random radiance on the lower hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorTexture {
    pub min_radiance: f64,
    pub max_radiance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(flatten)]
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub seed: u64,
    /// Per-channel multiplier; the analytic lux scales by its luma.
    #[serde(default = "white")]
    pub tint: [f64; 3],
    #[serde(default)]
    pub floor: Option<FloorTexture>,
}

fn white() -> [f64; 3] {
    [1.0; 3]
}

impl SceneSpec {
    pub fn new(kind: SceneKind, width: usize, height: usize) -> Self {
        Self {
            kind,
            width,
            height,
            seed: 0,
            tint: white(),
            floor: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_floor(mut self, min_radiance: f64, max_radiance: f64) -> Self {
        self.floor = Some(FloorTexture {
            min_radiance,
            max_radiance,
        });
        self
    }

    pub fn with_tint(mut self, tint: [f64; 3]) -> Self {
        self.tint = tint;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "scene spec".into(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        HdrImage::filled(self.width, self.height, [0.0; 3])?;
        let radiance = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} is not a non-negative radiance")))
            }
        };
        match self.kind {
            SceneKind::UniformSky { radiance: r } | SceneKind::CosineSky { radiance: r } => radiance("radiance", r)?,
            SceneKind::DiskLight {
                center_theta,
                center_phi,
                angular_radius,
                disk_radiance,
                ambient_radiance,
            } => {
                radiance("disk_radiance", disk_radiance)?;
                radiance("ambient_radiance", ambient_radiance)?;
                if !(angular_radius > 0.0 && angular_radius < PI / 2.0) {
                    return Err(Error::param("angular_radius", format!("{angular_radius} outside (0, pi/2)")));
                }
                if !(center_theta >= 0.0 && center_theta + angular_radius <= PI / 2.0) {
                    return Err(Error::param(
                        "center_theta",
                        format!("cap at theta={center_theta} with radius {angular_radius} crosses the horizon"),
                    ));
                }
                if !center_phi.is_finite() {
                    return Err(Error::param("center_phi", "not finite"));
                }
            }
        }
        for v in self.tint {
            radiance("tint", v)?;
        }
        if let Some(f) = self.floor {
            if !(f.min_radiance > 0.0 && f.min_radiance <= f.max_radiance && f.max_radiance.is_finite()) {
                return Err(Error::param("floor", "need 0 < min_radiance <= max_radiance"));
            }
        }
        Ok(())
    }

    /// Closed-form illuminance of the rendered scene, in lux.
    pub fn analytic_lux(&self) -> f64 {
        let luma: f64 = self.tint.iter().zip(LUMA_WEIGHTS).map(|(t, w)| t * w).sum();
        let projected = match self.kind {
            SceneKind::UniformSky { radiance } => PI * radiance,
            SceneKind::CosineSky { radiance } => 2.0 * PI / 3.0 * radiance,
            SceneKind::DiskLight {
                center_theta,
                angular_radius,
                disk_radiance,
                ambient_radiance,
                ..
            } => {
                // Projected solid angle of a cap fully above the horizon.
                let cap = PI * angular_radius.sin().powi(2) * center_theta.cos();
                ambient_radiance * PI + (disk_radiance - ambient_radiance) * cap
            }
        };
        LUMINOUS_EFFICACY * luma * projected
    }

    /// Mean sky radiance over the pixel centered at `(theta, phi)` with
    /// angular size `d`. Disk-boundary pixels are supersampled so the cap's
    /// edge is weighted by its coverage.
    fn sky_radiance(&self, theta: f64, phi: f64, d: f64) -> f64 {
        match self.kind {
            SceneKind::UniformSky { radiance } => radiance,
            SceneKind::CosineSky { radiance } => radiance * theta.cos().max(0.0),
            SceneKind::DiskLight {
                center_theta,
                center_phi,
                angular_radius,
                disk_radiance,
                ambient_radiance,
            } => {
                let separation = |t: f64, p: f64| {
                    let cs = t.cos() * center_theta.cos() + t.sin() * center_theta.sin() * (p - center_phi).cos();
                    cs.clamp(-1.0, 1.0).acos()
                };
                let sep = separation(theta, phi);
                let coverage = if (sep - angular_radius).abs() > 1.5 * d {
                    if sep <= angular_radius {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let mut inside = 0usize;
                    for i in 0..SUPERSAMPLE {
                        for j in 0..SUPERSAMPLE {
                            let t = theta + d * ((i as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5);
                            let p = phi + d * ((j as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5);
                            if separation(t, p) <= angular_radius {
                                inside += 1;
                            }
                        }
                    }
                    inside as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
                };
                ambient_radiance + coverage * (disk_radiance - ambient_radiance)
            }
        }
    }
}

const SUPERSAMPLE: usize = 16;

/// Renders the scene and returns it with its analytic illuminance.
pub fn render_scene(spec: &SceneSpec) -> Result<(HdrImage, f64)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let image = HdrImage::from_fn(w, h, |r, c| {
        let l = match spec.floor {
            Some(f) if 2 * r >= h => {
                let u: f64 = rng.gen();
                (f.min_radiance.ln() + u * (f.max_radiance / f.min_radiance).ln()).exp()
            }
            _ => spec.sky_radiance(row_theta(r, h), col_phi(c, w), PI / h as f64),
        };
        spec.tint.map(|t| t * l)
    })?;
    Ok((image, spec.analytic_lux()))
}
