use std::path::PathBuf;

use thiserror::Error;

use crate::model::Axis;

/// First invariant a genotype violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenotypeError {
    #[error("negative {axis} extent {value} at index {index}")]
    NegativeExtent { axis: Axis, index: usize, value: i32 },
    #[error("negative origin {axis} coordinate {value}")]
    NegativeOrigin { axis: Axis, value: i32 },
    #[error("{axis} extent list has {len} entries, expected {expected}")]
    LengthMismatch { axis: Axis, len: usize, expected: usize },
    #[error("table overflows canvas along {axis}: needs {needed} px, canvas has {canvas} px")]
    Overflow { axis: Axis, needed: i64, canvas: u32 },
    #[error("table has no effective {axis} extents")]
    Empty { axis: Axis },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid genotype: {0}")]
    Genotype(#[from] GenotypeError),
    #[error("empty range for {0}")]
    EmptyRange(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("unsupported channel count {0}")]
    UnsupportedChannels(u8),
    #[error("pixel buffer has {got} bytes, expected {expected}")]
    BufferSize { got: usize, expected: usize },
    #[error("image is empty")]
    EmptyImage,
    #[error("image is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("no lines found in projection")]
    NoLines,
    #[error("no table: found {horizontal} horizontal and {vertical} vertical dividers")]
    NoTable { horizontal: usize, vertical: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("cardinality mismatch: {0:?} vs {1:?}")]
    CardinalityMismatch((usize, usize), (usize, usize)),
    #[error("no line structure found for skew estimation")]
    NoSkewStructure,
    #[error("crop {target_w}x{target_h} exceeds image {width}x{height}")]
    CropTooLarge { target_w: u32, target_h: u32, width: u32, height: u32 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
