//! Raster types and equirectangular geometry shared by every other module.
//!
//! Rows map to zenith angle and columns to azimuth, both sampled at pixel
//! centers. Row 0 is straight up, so the upper hemisphere (what an
//! upward-facing illuminometer sees) is rows `[0, height / 2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

fn check_dimensions(width: usize, height: usize) -> Result<()> {
    let reason = if height < 2 {
        "height must be at least 2"
    } else if height % 2 != 0 {
        "height must be even"
    } else if width != 2 * height {
        "width must equal 2 x height"
    } else {
        return Ok(());
    };
    Err(Error::InvalidDimensions {
        width,
        height,
        reason,
    })
}

/// Zenith and azimuth of the center of pixel `(row, col)`.
pub fn pixel_direction(row: usize, col: usize, width: usize, height: usize) -> Result<(f64, f64)> {
    if row >= height || col >= width {
        return Err(Error::IndexOutOfRange {
            row,
            col,
            width,
            height,
        });
    }
    Ok((row_theta(row, height), col_phi(col, width)))
}

#[inline]
pub(crate) fn row_theta(row: usize, height: usize) -> f64 {
    PI * (row as f64 + 0.5) / height as f64
}

#[inline]
pub(crate) fn col_phi(col: usize, width: usize) -> f64 {
    2.0 * PI * (col as f64 + 0.5) / width as f64
}

/// Solid angle `sin(theta) * dtheta * dphi` of any pixel in `row`.
pub fn pixel_solid_angle(row: usize, width: usize, height: usize) -> f64 {
    let d_theta = PI / height as f64;
    let d_phi = 2.0 * PI / width as f64;
    row_theta(row, height).sin() * d_theta * d_phi
}

/// Linear-radiance equirectangular panorama.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl HdrImage {
    pub fn new(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        check_dimensions(width, height)?;
        if data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "sample count does not match dimensions",
            });
        }
        for (i, px) in data.iter().enumerate() {
            for (c, &v) in px.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidSample {
                        index: 3 * i + c,
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Result<Self> {
        check_dimensions(width, height)?;
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        check_dimensions(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
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

    /// Total number of scalar samples (`3 * width * height`).
    pub fn sample_count(&self) -> usize {
        3 * self.data.len()
    }

    pub fn into_pixels(self) -> Vec<Rgb> {
        self.data
    }

    /// Multiplies every sample by `factor` (must be finite and non-negative).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let data = self
            .data
            .iter()
            .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
            .collect();
        Self::new(self.width, self.height, data)
    }

    pub fn same_shape(&self, other: &HdrImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// 8-bit panorama captured at a known exposure time.
#[derive(Debug, Clone, PartialEq)]
pub struct LdrImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
    exposure_ms: f64,
}

impl LdrImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>, exposure_ms: f64) -> Result<Self> {
        check_dimensions(width, height)?;
        if data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "sample count does not match dimensions",
            });
        }
        if !(exposure_ms.is_finite() && exposure_ms > 0.0) {
            return Err(Error::param("exposure_ms", format!("{exposure_ms} is not positive")));
        }
        Ok(Self {
            width,
            height,
            data,
            exposure_ms,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        self.data[row * self.width + col]
    }

    pub fn exposure_ms(&self) -> f64 {
        self.exposure_ms
    }

    /// Exposure time in seconds.
    pub fn exposure_s(&self) -> f64 {
        self.exposure_ms / 1000.0
    }

    pub fn with_exposure(mut self, exposure_ms: f64) -> Result<Self> {
        if !(exposure_ms.is_finite() && exposure_ms > 0.0) {
            return Err(Error::param("exposure_ms", format!("{exposure_ms} is not positive")));
        }
        self.exposure_ms = exposure_ms;
        Ok(self)
    }
}

/// Co-located shots of one scene at distinct exposure times.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureBracket {
    pub location_id: String,
    pub shots: Vec<LdrImage>,
}

impl ExposureBracket {
    pub fn new(location_id: impl Into<String>, shots: Vec<LdrImage>) -> Self {
        Self {
            location_id: location_id.into(),
            shots,
        }
    }

    pub fn width(&self) -> usize {
        self.shots.first().map_or(0, LdrImage::width)
    }

    pub fn height(&self) -> usize {
        self.shots.first().map_or(0, LdrImage::height)
    }
}

/// Checks the bracket invariants: two or more shots, identical
/// dimensions, pairwise distinct exposure times.
pub fn validate_bracket(bracket: &ExposureBracket) -> Result<&ExposureBracket> {
    let shots = &bracket.shots;
    if shots.len() < 2 {
        return Err(Error::TooFewShots { count: shots.len() });
    }
    let (w, h) = (shots[0].width(), shots[0].height());
    for (index, shot) in shots.iter().enumerate().skip(1) {
        if shot.width() != w || shot.height() != h {
            return Err(Error::MismatchedDimensions {
                index,
                width: w,
                height: h,
                got_width: shot.width(),
                got_height: shot.height(),
            });
        }
    }
    for (i, a) in shots.iter().enumerate() {
        if shots[..i].iter().any(|b| b.exposure_ms() == a.exposure_ms()) {
            return Err(Error::DuplicateExposure {
                exposure_ms: a.exposure_ms(),
            });
        }
    }
    Ok(bracket)
}

/// An illuminometer reading paired with its capture location.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminanceSample {
    pub location_id: String,
    lux: f64,
}

impl IlluminanceSample {
    pub fn new(location_id: impl Into<String>, lux: f64) -> Result<Self> {
        if !(lux.is_finite() && lux > 0.0) {
            return Err(Error::param("lux", format!("{lux} is not positive")));
        }
        Ok(Self {
            location_id: location_id.into(),
            lux,
        })
    }

    pub fn lux(&self) -> f64 {
        self.lux
    }
}
