//! Photometry for equirectangular HDR panoramas.
//!
//! * [`image`]: panorama rasters, pixel geometry, exposure brackets.
//! * [`io`]: Radiance RGBE and 8-bit PPM/PNG.
//! * [`photometry`]: luminance, hemispherical illuminance, scale calibration.
//! * [`multishot`]: camera response recovery and bracket merging.
//! * [`losses`]: illuminance-aware training objective with analytic gradients.
//! * [`metrics`]: consistency and illuminance accuracy, false-color maps.
//! * [`synthscene`]: synthetic scenes with closed-form illuminance.
//! * [`toyfit`]: a small parametric LDR-to-HDR model trained on the objective.
//! * [`cli`]: the `panolux` command line.

pub mod error;
pub mod image;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod multishot;
mod numeric;
pub mod photometry;
pub mod synthscene;
pub mod toyfit;
pub mod cli;

pub use error::{Error, Result};
pub use image::{pixel_direction, validate_bracket, ExposureBracket, HdrImage, IlluminanceSample, LdrImage};
