use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by how a caller should react: malformed input
/// (bad files, violated preconditions) versus numerical failure (singular
/// systems, divergence). [`Error::is_numerical`] draws that line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: {reason}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("pixel index ({row}, {col}) outside {width}x{height} image")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid sample at index {index}: {value}")]
    InvalidSample { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bracket has {count} shot(s), need at least 2")]
    TooFewShots { count: usize },

    #[error("shot {index} is {got_width}x{got_height}, expected {width}x{height}")]
    MismatchedDimensions {
        index: usize,
        width: usize,
        height: usize,
        got_width: usize,
        got_height: usize,
    },

    #[error("duplicate exposure {exposure_ms} ms in bracket")]
    DuplicateExposure { exposure_ms: f64 },

    #[error("exposure {exposure_ms} ms outside the encodable range [2.5, 102.5]")]
    ExposureOutOfRange { exposure_ms: f64 },

    #[error("RGBE: bad magic line at byte {offset}")]
    BadMagic { offset: usize },

    #[error("RGBE: unsupported format `{format}` at byte {offset}")]
    UnsupportedFormat { format: String, offset: usize },

    #[error("RGBE: malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: &'static str },

    #[error("RGBE: truncated scanline data at byte {offset}")]
    Truncated { offset: usize },

    #[error("RGBE: run-length overrun at byte {offset}")]
    RleOverrun { offset: usize },

    #[error("RGBE: cannot encode non-finite or negative sample at index {index}")]
    Encode { index: usize },

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error("malformed image stream: {0}")]
    MalformedImage(String),

    #[error("response solve is underdetermined: {0}")]
    Underdetermined(String),

    #[error("normal equations are singular")]
    Singular,

    #[error("recovered response is not monotone at code {code} (channel {channel})")]
    NonMonotoneResponse { channel: usize, code: usize },

    #[error("optimization diverged at step {step}")]
    Divergence { step: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular | Error::NonMonotoneResponse { .. } | Error::Divergence { .. }
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
