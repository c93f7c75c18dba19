use std::path::PathBuf;

use thiserror::Error;

/// Failures reading, writing or constructing occupancy grids.
#[derive(Debug, Error)]
pub enum MapError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PGM image {path}: {reason}")]
    BadImage { path: PathBuf, reason: String },
    #[error("invalid map metadata {path}: {reason}")]
    BadMetadata { path: PathBuf, reason: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point ({x:.3}, {y:.3}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },
}

/// Failures of the evaluation, localization and simulation pipelines.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no evaluable items ({skipped} skipped)")]
    NoValidItems { skipped: usize },
    #[error("empty point set: {0}")]
    EmptySet(&'static str),
    #[error("raster dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("no correspondences within {cutoff} m")]
    NoCorrespondences { cutoff: f64 },
    #[error("measurement incompatible with every particle")]
    MeasurementIncompatible,
    #[error("time {t:.3} s outside span [{start:.3}, {end:.3}]")]
    OutsideSpan { t: f64, start: f64, end: f64 },
    #[error(transparent)]
    Map(#[from] MapError),
}
