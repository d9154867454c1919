use thiserror::Error;

/// Errors produced by the numeric kernels and file readers of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} outside allowed range {range}")]
    Range {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("segmentation failure: {0}")]
    Segmentation(String),

    #[error("denoiser failed: {0}")]
    Denoiser(String),

    #[error("metadata parse error in {path}: {msg}")]
    Metadata { path: String, msg: String },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_shape(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}
