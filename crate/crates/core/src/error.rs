use std::io;

use thiserror::Error;

/// Failures while decoding one of the binary or image formats.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("payload truncated: needed {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("descriptor length {0} not in {{96, 192, 384}}")]
    BadDescriptorLen(u16),
    #[error("unknown template kind code {0}")]
    BadKind(u8),
    #[error("unknown variant code {0}")]
    BadVariant(u8),
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("malformed PGM: {0}")]
    Pgm(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("image {width}x{height} is smaller than one {block}x{block} block")]
    ImageTooSmall { width: usize, height: usize, block: usize },
    #[error("invalid image dimensions {width}x{height} for {pixels} pixels")]
    BadImageDimensions { width: usize, height: usize, pixels: usize },
    #[error("coordinate ({x}, {y}) outside {width}x{height} image")]
    OutOfBounds { x: f64, y: f64, width: usize, height: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unsupported per-patch descriptor length {0} (expected 32, 64 or 128)")]
    UnsupportedLength(usize),
    #[error("descriptor length mismatch: latent {latent}, reference {reference}")]
    DescriptorLenMismatch { latent: usize, reference: usize },
    #[error("descriptor import mismatch: expected {expected_rows} rows, found {found_rows}; row length {found_len} (allowed 96, 192, 384)")]
    ImportMismatch { expected_rows: usize, found_rows: usize, found_len: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("exhaustive oracle limited to 12 correspondences, got {0}")]
    OracleTooLarge(usize),
    #[error("gallery: {0}")]
    Gallery(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
